use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{
    certificate, CantorCertificate, SteepInterval, WitnessError, WitnessNode, WitnessTree,
};
use crate::functions::FuncSpec;
use crate::interval::Interval;

pub const DOCUMENT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub addr: String,
    pub a: f64,
    pub b: f64,
    pub slope: f64,
}

/// Self-contained JSON form of a witness tree. Nodes are listed level by
/// level, left to right; the root has the empty address.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessDocument {
    pub version: u32,
    pub func: FuncSpec,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "cPrime")]
    pub c_prime: f64,
    pub depth: u32,
    pub nodes: Vec<NodeRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CantorCertificate>,
}

impl WitnessDocument {
    pub fn from_tree(t: &WitnessTree) -> Self {
        let mut nodes = Vec::with_capacity(t.node_count());
        t.root.walk(&mut String::new(), &mut |addr, node| {
            let iv = node.interval();
            nodes.push(NodeRecord {
                addr: addr.to_string(),
                a: iv.a(),
                b: iv.b(),
                slope: node.steep.slope,
            });
        });
        nodes.sort_by(|p, q| {
            p.addr
                .len()
                .cmp(&q.addr.len())
                .then_with(|| p.addr.cmp(&q.addr))
        });
        WitnessDocument {
            version: DOCUMENT_VERSION,
            func: t.func.clone(),
            c: t.c,
            c_prime: t.c_prime,
            depth: t.depth,
            nodes,
            certificate: None,
        }
    }

    /// Document with the certificate section filled in; fails if the tree does not verify.
    pub fn certified(t: &WitnessTree) -> Result<Self, WitnessError> {
        let cert = certificate(t)?;
        let mut doc = Self::from_tree(t);
        doc.certificate = Some(cert);
        Ok(doc)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serialization is infallible")
    }

    pub fn from_json(s: &str) -> Result<Self, WitnessError> {
        serde_json::from_str(s).map_err(|e| WitnessError::Document(e.to_string()))
    }

    /// Rebuilds the tree. Every listed node must be reachable from the root
    /// and every internal node must have both children; balance and the
    /// numeric invariants are left to verification.
    pub fn to_tree(&self) -> Result<WitnessTree, WitnessError> {
        if self.version != DOCUMENT_VERSION {
            return Err(WitnessError::Document(format!(
                "unsupported version {} (expected {DOCUMENT_VERSION})",
                self.version
            )));
        }
        let mut by_addr: BTreeMap<&str, &NodeRecord> = BTreeMap::new();
        for rec in &self.nodes {
            if !rec.addr.chars().all(|c| c == '0' || c == '1') {
                return Err(WitnessError::Document(format!(
                    "bad address {:?}",
                    rec.addr
                )));
            }
            if by_addr.insert(rec.addr.as_str(), rec).is_some() {
                return Err(WitnessError::Document(format!(
                    "duplicate address {:?}",
                    rec.addr
                )));
            }
        }
        let mut used = 0usize;
        let root = self.node(&by_addr, String::new(), &mut used)?;
        if used != by_addr.len() {
            return Err(WitnessError::Document(format!(
                "{} node(s) unreachable from the root",
                by_addr.len() - used
            )));
        }
        Ok(WitnessTree {
            func: self.func.clone(),
            c: self.c,
            c_prime: self.c_prime,
            root,
            depth: self.depth,
        })
    }

    fn node(
        &self,
        by_addr: &BTreeMap<&str, &NodeRecord>,
        addr: String,
        used: &mut usize,
    ) -> Result<WitnessNode, WitnessError> {
        let rec = by_addr
            .get(addr.as_str())
            .ok_or_else(|| WitnessError::Document(format!("missing node {addr:?}")))?;
        *used += 1;
        if addr.len() > 64 {
            return Err(WitnessError::Document("tree deeper than 64 levels".into()));
        }
        let interval = Interval::new(rec.a, rec.b)
            .map_err(|e| WitnessError::Document(format!("node {addr:?}: {e}")))?;
        let steep = SteepInterval {
            interval,
            slope: rec.slope,
            threshold: self.c_prime,
        };
        let left = format!("{addr}0");
        let right = format!("{addr}1");
        let children = match (
            by_addr.contains_key(left.as_str()),
            by_addr.contains_key(right.as_str()),
        ) {
            (false, false) => None,
            (true, true) => {
                let l = self.node(by_addr, left, used)?;
                let r = self.node(by_addr, right, used)?;
                Some(Box::new([l, r]))
            }
            _ => {
                return Err(WitnessError::Document(format!(
                    "node {addr:?} has exactly one child"
                )));
            }
        };
        Ok(WitnessNode { steep, children })
    }
}
