//! Witness trees: balanced binary trees of steep intervals.
//!
//! An interval `[a, b]` is *steep* for a threshold `t` when
//! `|f(b) - f(a)| > t·(b - a)`. Each steep interval contains two disjoint
//! steep subintervals of at most half its length, so splitting recursively
//! yields `2^depth` nested chains. Every infinite continuation of a chain
//! shrinks to a point `x` with `L(f, x) ≥ t`, which makes the tree a finite
//! skeleton of a Cantor set inside `{x : L(f, x) > C}` whenever `t > C`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::functions::{FuncSpec, Function, FunctionError};
use crate::interval::Interval;

mod document;
mod search;
mod verify;

pub use document::{NodeRecord, WitnessDocument, DOCUMENT_VERSION};
pub use search::{
    bisect_chain, build_tree, extend_tree, find_seed, split_steep, BisectionChain, BisectionStep,
    Half, Seed, TreeParams,
};
pub use verify::{
    certificate, verify_document, verify_tree, CantorCertificate, VerificationReport, Violation,
    ViolationKind,
};

/// Relative guard for construction: a candidate counts only if `slope > t·(1 + BUILD_GUARD)`.
pub const BUILD_GUARD: f64 = 1e-9;
/// Relative guard for verification: `slope > t·(1 - VERIFY_GUARD)`.
pub const VERIFY_GUARD: f64 = 1e-9;
/// Stored slopes must match a fresh recomputation to this relative error.
pub const SLOPE_RECHECK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WitnessError {
    #[error(
        "no steep interval with slope > {c} found among dyadic subintervals up to level {resolution_depth}; \
         the exceptional set may be empty at this resolution"
    )]
    NoSeedFound { c: f64, resolution_depth: u32 },
    #[error("bisection broke down at depth {depth} on {interval}: neither half is steep within floating-point tolerance")]
    NumericalBreakdown { depth: u32, interval: Interval },
    #[error(
        "no disjoint pair of steep subintervals of {interval} (address \"{addr}\", threshold {threshold}) \
         found up to search depth {search_depth}. This is a limit of the finite dyadic search (search depth \
         too small or threshold too close to the true steepness), not a counterexample: for a continuous \
         function such a pair always exists."
    )]
    ResolutionExhausted {
        addr: String,
        interval: Interval,
        threshold: f64,
        search_depth: u32,
    },
    #[error("tree failed verification with {count} violation(s); first: {first}")]
    InvalidTree { count: usize, first: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("malformed witness document: {0}")]
    Document(String),
    #[error(transparent)]
    Function(#[from] FunctionError),
}

impl WitnessError {
    /// Short machine-readable tag, used by failure documents.
    pub fn kind(&self) -> &'static str {
        match self {
            WitnessError::NoSeedFound { .. } => "NoSeedFound",
            WitnessError::NumericalBreakdown { .. } => "NumericalBreakdown",
            WitnessError::ResolutionExhausted { .. } => "ResolutionExhausted",
            WitnessError::InvalidTree { .. } => "InvalidTree",
            WitnessError::InvalidArgument(_) => "InvalidArgument",
            WitnessError::Document(_) => "Document",
            WitnessError::Function(_) => "Function",
        }
    }
}

/// A closed interval together with its secant slope and the threshold it was tested against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteepInterval {
    pub interval: Interval,
    pub slope: f64,
    pub threshold: f64,
}

impl SteepInterval {
    pub fn measure(
        f: &Function,
        interval: Interval,
        threshold: f64,
    ) -> Result<Self, FunctionError> {
        Ok(SteepInterval {
            interval,
            slope: f.secant_slope(&interval)?,
            threshold,
        })
    }

    pub(crate) fn passes_build(&self) -> bool {
        exceeds_for_build(self.slope, self.threshold)
    }
}

#[inline]
pub(crate) fn exceeds_for_build(slope: f64, threshold: f64) -> bool {
    slope > threshold * (1.0 + BUILD_GUARD)
}

#[inline]
pub(crate) fn exceeds_for_verify(slope: f64, threshold: f64) -> bool {
    slope > threshold * (1.0 - VERIFY_GUARD)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WitnessNode {
    pub steep: SteepInterval,
    /// Left child first. Either both children or none.
    pub children: Option<Box<[WitnessNode; 2]>>,
}

impl WitnessNode {
    pub fn leaf(steep: SteepInterval) -> Self {
        WitnessNode {
            steep,
            children: None,
        }
    }

    pub fn interval(&self) -> Interval {
        self.steep.interval
    }

    /// Visits nodes in pre-order with their binary address.
    pub fn walk<'a>(&'a self, addr: &mut String, visit: &mut impl FnMut(&str, &'a WitnessNode)) {
        visit(addr, self);
        if let Some(children) = &self.children {
            for (bit, child) in ['0', '1'].into_iter().zip(children.iter()) {
                addr.push(bit);
                child.walk(addr, visit);
                addr.pop();
            }
        }
    }

    /// Mutable access by binary address.
    pub fn node_mut(&mut self, addr: &str) -> Option<&mut WitnessNode> {
        let mut node = self;
        for bit in addr.chars() {
            let idx = match bit {
                '0' => 0,
                '1' => 1,
                _ => return None,
            };
            node = &mut node.children.as_mut()?[idx];
        }
        Some(node)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WitnessTree {
    pub func: FuncSpec,
    pub c: f64,
    pub c_prime: f64,
    pub root: WitnessNode,
    pub depth: u32,
}

impl WitnessTree {
    /// Leaves in left-to-right order with their addresses.
    pub fn leaves(&self) -> Vec<(String, &WitnessNode)> {
        let mut out = Vec::with_capacity(1 << self.depth.min(20));
        self.root.walk(&mut String::new(), &mut |addr, node| {
            if node.children.is_none() {
                out.push((addr.to_string(), node));
            }
        });
        out
    }

    /// The same tree cut back to `depth` levels (no-op if already that shallow).
    pub fn truncated(&self, depth: u32) -> WitnessTree {
        fn cut(node: &mut WitnessNode, remaining: u32) {
            if remaining == 0 {
                node.children = None;
            } else if let Some(children) = node.children.as_deref_mut() {
                children.iter_mut().for_each(|c| cut(c, remaining - 1));
            }
        }
        let mut out = self.clone();
        cut(&mut out.root, depth);
        out.depth = self.depth.min(depth);
        out
    }

    /// The chain of nodes from the root to the node at `addr`, inclusive.
    pub fn branch(&self, addr: &str) -> Option<Vec<&WitnessNode>> {
        let mut node = &self.root;
        let mut chain = vec![node];
        for bit in addr.chars() {
            let idx = match bit {
                '0' => 0,
                '1' => 1,
                _ => return None,
            };
            node = &node.children.as_ref()?[idx];
            chain.push(node);
        }
        Some(chain)
    }

    pub fn node_count(&self) -> usize {
        let mut n = 0;
        self.root.walk(&mut String::new(), &mut |_, _| n += 1);
        n
    }
}
