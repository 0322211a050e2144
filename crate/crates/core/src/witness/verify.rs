use serde::{Deserialize, Serialize};

use super::{
    exceeds_for_verify, WitnessDocument, WitnessError, WitnessNode, WitnessTree, SLOPE_RECHECK_TOL,
};
use crate::functions::Function;
use crate::interval::Interval;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ViolationKind {
    MalformedDocument,
    InvalidFunction,
    InvalidThreshold,
    EvaluationFailed,
    SlopeMismatch,
    NotSteep,
    NotContained,
    NotDisjoint,
    TooLong,
    LeafTooLong,
    Unbalanced,
    CertificateMismatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub addr: String,
    pub kind: ViolationKind,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VerificationReport {
    pub valid: bool,
    pub nodes_checked: usize,
    pub violations: Vec<Violation>,
}

impl VerificationReport {
    pub fn count(&self, kind: ViolationKind) -> usize {
        self.violations.iter().filter(|v| v.kind == kind).count()
    }
}

struct Checker<'a> {
    f: &'a Function,
    c_prime: f64,
    depth: u32,
    leaf_bound: f64,
    nodes: usize,
    out: Vec<Violation>,
}

impl Checker<'_> {
    fn push(&mut self, addr: &str, kind: ViolationKind, detail: String) {
        self.out.push(Violation {
            addr: addr.to_string(),
            kind,
            detail,
        });
    }

    fn node(&mut self, node: &WitnessNode, addr: &mut String) {
        self.nodes += 1;
        let s = &node.steep;
        if s.threshold != self.c_prime {
            self.push(
                addr,
                ViolationKind::InvalidThreshold,
                format!(
                    "node threshold {} differs from C' = {}",
                    s.threshold, self.c_prime
                ),
            );
        }
        match self.f.secant_slope(&s.interval) {
            Err(e) => self.push(addr, ViolationKind::EvaluationFailed, e.to_string()),
            Ok(slope) => {
                if (slope - s.slope).abs() > SLOPE_RECHECK_TOL * slope.abs().max(f64::MIN_POSITIVE)
                {
                    self.push(
                        addr,
                        ViolationKind::SlopeMismatch,
                        format!("stored slope {} but recomputed {slope}", s.slope),
                    );
                }
                if !exceeds_for_verify(slope, self.c_prime) {
                    self.push(
                        addr,
                        ViolationKind::NotSteep,
                        format!(
                            "slope {slope} on {} does not exceed C' = {}",
                            s.interval, self.c_prime
                        ),
                    );
                }
            }
        }

        let level = addr.len() as u32;
        match &node.children {
            None => {
                if level != self.depth {
                    self.push(
                        addr,
                        ViolationKind::Unbalanced,
                        format!("leaf at depth {level}, tree depth {}", self.depth),
                    );
                }
                if s.interval.length() > self.leaf_bound {
                    self.push(
                        addr,
                        ViolationKind::LeafTooLong,
                        format!(
                            "leaf length {} exceeds {}",
                            s.interval.length(),
                            self.leaf_bound
                        ),
                    );
                }
            }
            Some(children) => {
                if level >= self.depth {
                    self.push(
                        addr,
                        ViolationKind::Unbalanced,
                        format!(
                            "node at depth {level} has children, tree depth {}",
                            self.depth
                        ),
                    );
                }
                let half = s.interval.length() / 2.0;
                for (bit, child) in ['0', '1'].into_iter().zip(children.iter()) {
                    addr.push(bit);
                    let ci = child.interval();
                    if !s.interval.encloses(&ci) {
                        self.push(
                            addr,
                            ViolationKind::NotContained,
                            format!("{ci} is not inside parent {}", s.interval),
                        );
                    }
                    if ci.length() > half {
                        self.push(
                            addr,
                            ViolationKind::TooLong,
                            format!("length {} exceeds half the parent ({half})", ci.length()),
                        );
                    }
                    addr.pop();
                }
                let (l, r) = (children[0].interval(), children[1].interval());
                if l.b() >= r.a() {
                    addr.push('1');
                    self.push(
                        addr,
                        ViolationKind::NotDisjoint,
                        format!("{r} does not start strictly after its left sibling {l}"),
                    );
                    addr.pop();
                }
                for (bit, child) in ['0', '1'].into_iter().zip(children.iter()) {
                    addr.push(bit);
                    self.node(child, addr);
                    addr.pop();
                }
            }
        }
    }
}

/// Re-checks every node of `t` against its embedded function: steepness
/// above `C'`, stored slopes, containment, strict sibling disjointness,
/// halving, and balance. Violations are data; an empty list means valid.
pub fn verify_tree(t: &WitnessTree) -> VerificationReport {
    let mut out = Vec::new();
    if !(t.c >= 0.0 && t.c.is_finite() && t.c_prime.is_finite() && t.c_prime > t.c) {
        out.push(Violation {
            addr: String::new(),
            kind: ViolationKind::InvalidThreshold,
            detail: format!(
                "need 0 <= C < C' with both finite, got C = {}, C' = {}",
                t.c, t.c_prime
            ),
        });
    }
    let f = match Function::new(t.func.clone()) {
        Ok(f) => f,
        Err(e) => {
            out.push(Violation {
                addr: String::new(),
                kind: ViolationKind::InvalidFunction,
                detail: e.to_string(),
            });
            return VerificationReport {
                valid: false,
                nodes_checked: 0,
                violations: out,
            };
        }
    };
    let leaf_bound = t.root.interval().length() / 2f64.powi(t.depth as i32);
    let mut checker = Checker {
        f: &f,
        c_prime: t.c_prime,
        depth: t.depth,
        leaf_bound,
        nodes: 0,
        out,
    };
    checker.node(&t.root, &mut String::new());
    VerificationReport {
        valid: checker.out.is_empty(),
        nodes_checked: checker.nodes,
        violations: checker.out,
    }
}

/// Verifies a document end to end: structure, tree, and (when present) the
/// embedded certificate against a fresh extraction.
pub fn verify_document(doc: &WitnessDocument) -> VerificationReport {
    let tree = match doc.to_tree() {
        Ok(t) => t,
        Err(e) => {
            return VerificationReport {
                valid: false,
                nodes_checked: 0,
                violations: vec![Violation {
                    addr: String::new(),
                    kind: ViolationKind::MalformedDocument,
                    detail: e.to_string(),
                }],
            }
        }
    };
    let mut report = verify_tree(&tree);
    if let (true, Some(claimed)) = (report.valid, &doc.certificate) {
        let fresh = extract(&tree);
        if &fresh != claimed {
            report.violations.push(Violation {
                addr: String::new(),
                kind: ViolationKind::CertificateMismatch,
                detail: "embedded certificate differs from the one extracted from the nodes".into(),
            });
            report.valid = false;
        }
    }
    report
}

pub const CERTIFICATE_CLAIM: &str = "Every nested chain of steep intervals extending a root-to-leaf branch \
shrinks to a point x with L(f, x) >= C' > C, because the secant slopes along the chain all exceed C'. \
The leaves therefore enclose 2^depth pairwise-disjoint portions of the C-exceptional set {x : L(f, x) > C}; \
the full limit set of the construction is a Cantor set, of which this is the depth-n skeleton.";

/// Leaf-level summary of a verified tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CantorCertificate {
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "cPrime")]
    pub c_prime: f64,
    pub depth: u32,
    pub leaf_intervals: Vec<Interval>,
    /// Smallest secant slope along each root-to-leaf chain.
    pub branch_slope_minima: Vec<f64>,
    pub addresses: Vec<String>,
    pub claim: String,
}

pub fn certificate(t: &WitnessTree) -> Result<CantorCertificate, WitnessError> {
    let report = verify_tree(t);
    if let Some(first) = report.violations.first() {
        return Err(WitnessError::InvalidTree {
            count: report.violations.len(),
            first: format!("{:?} at \"{}\": {}", first.kind, first.addr, first.detail),
        });
    }
    Ok(extract(t))
}

fn extract(t: &WitnessTree) -> CantorCertificate {
    let mut leaf_intervals = Vec::new();
    let mut branch_slope_minima = Vec::new();
    let mut addresses = Vec::new();
    fn descend(
        node: &WitnessNode,
        addr: &mut String,
        running_min: f64,
        out: &mut (&mut Vec<Interval>, &mut Vec<f64>, &mut Vec<String>),
    ) {
        let m = running_min.min(node.steep.slope);
        match &node.children {
            None => {
                out.0.push(node.interval());
                out.1.push(m);
                out.2.push(addr.clone());
            }
            Some(children) => {
                for (bit, child) in ['0', '1'].into_iter().zip(children.iter()) {
                    addr.push(bit);
                    descend(child, addr, m, out);
                    addr.pop();
                }
            }
        }
    }
    descend(
        &t.root,
        &mut String::new(),
        f64::INFINITY,
        &mut (
            &mut leaf_intervals,
            &mut branch_slope_minima,
            &mut addresses,
        ),
    );
    CantorCertificate {
        c: t.c,
        c_prime: t.c_prime,
        depth: t.depth,
        leaf_intervals,
        branch_slope_minima,
        addresses,
        claim: CERTIFICATE_CLAIM.to_string(),
    }
}
