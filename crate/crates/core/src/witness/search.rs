use std::collections::HashMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{exceeds_for_build, SteepInterval, WitnessError, WitnessNode, WitnessTree};
use crate::functions::Function;
use crate::interval::Interval;

/// Subtrees this deep or deeper are grown with `rayon::join`.
const PARALLEL_MIN_DEPTH: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeParams {
    pub depth: u32,
    pub search_depth: u32,
    pub resolution_depth: u32,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            depth: 8,
            search_depth: 6,
            resolution_depth: 12,
        }
    }
}

/// Dyadic subintervals of `parent` at `level`: the `2^level` aligned pieces,
/// then the `2^level - 1` pieces shifted by half a piece, each left to right.
fn dyadic_pieces(parent: Interval, level: u32) -> impl Iterator<Item = (Interval, u32)> {
    let n = 1u64 << level;
    let scale = 1.0 / n as f64;
    let aligned = (0..n).map(move |i| (i as f64 * scale, (i + 1) as f64 * scale));
    let shifted =
        (0..n.saturating_sub(1)).map(move |i| ((i as f64 + 0.5) * scale, (i as f64 + 1.5) * scale));
    aligned
        .chain(shifted)
        .filter_map(move |(s, t)| Interval::new(parent.lerp(s), parent.lerp(t)).ok())
        .map(move |i| (i, level))
}

fn check_level(c: f64) -> Result<(), WitnessError> {
    if c >= 0.0 && c.is_finite() {
        Ok(())
    } else {
        Err(WitnessError::InvalidArgument(format!(
            "C must be finite and non-negative, got {c}"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Seed {
    pub interval: Interval,
    pub slope: f64,
    pub c_prime: f64,
}

/// First dyadic subinterval of `domain` steeper than `c`, scanning levels
/// `0..=resolution_depth` coarse to fine, aligned before shifted, left to right.
/// The working threshold is the midpoint `(slope + c) / 2`.
pub fn find_seed(
    f: &Function,
    domain: &Interval,
    c: f64,
    resolution_depth: u32,
) -> Result<Seed, WitnessError> {
    check_level(c)?;
    if resolution_depth == 0 || resolution_depth > 40 {
        return Err(WitnessError::InvalidArgument(format!(
            "resolutionDepth must lie in 1..=40, got {resolution_depth}"
        )));
    }
    if !f.covers(domain) {
        let (lo, hi) = f.domain();
        return Err(WitnessError::InvalidArgument(format!(
            "domain {domain} is not inside the function's domain [{lo}, {hi}]"
        )));
    }
    for level in 0..=resolution_depth {
        for (interval, _) in dyadic_pieces(*domain, level) {
            let slope = f.secant_slope(&interval)?;
            if exceeds_for_build(slope, c) {
                return Ok(Seed {
                    interval,
                    slope,
                    c_prime: 0.5 * (slope + c),
                });
            }
        }
    }
    Err(WitnessError::NoSeedFound {
        c,
        resolution_depth,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Half {
    Left,
    Right,
}

/// One halving step: slopes of the parent and both halves, and the half kept.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BisectionStep {
    pub parent_slope: f64,
    pub left_slope: f64,
    pub right_slope: f64,
    pub took: Half,
}

impl BisectionStep {
    /// The parent's signed slope is the mean of the halves' signed slopes, so
    /// the steeper half is at least as steep as the parent.
    pub fn is_sound(&self, rel_tol: f64) -> bool {
        self.left_slope.max(self.right_slope) >= self.parent_slope * (1.0 - rel_tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BisectionChain {
    /// `[a_0, b_0] ⊇ [a_1, b_1] ⊇ …`, starting with the seed.
    pub intervals: Vec<SteepInterval>,
    pub steps: Vec<BisectionStep>,
}

/// Repeated halving that keeps a steep half each time (left when both are).
pub fn bisect_chain(
    f: &Function,
    seed: &Interval,
    c_prime: f64,
    max_depth: u32,
) -> Result<BisectionChain, WitnessError> {
    let first = SteepInterval::measure(f, *seed, c_prime)?;
    if !first.passes_build() {
        return Err(WitnessError::InvalidArgument(format!(
            "seed {seed} has slope {} which does not exceed {c_prime}",
            first.slope
        )));
    }
    let mut intervals = Vec::with_capacity(max_depth as usize + 1);
    let mut steps = Vec::with_capacity(max_depth as usize);
    intervals.push(first);
    let mut current = first;
    for depth in 1..=max_depth {
        let iv = current.interval;
        let mid = iv.midpoint();
        let halves = (Interval::new(iv.a(), mid), Interval::new(mid, iv.b()));
        let (Ok(left), Ok(right)) = halves else {
            return Err(WitnessError::NumericalBreakdown {
                depth,
                interval: iv,
            });
        };
        let left = SteepInterval::measure(f, left, c_prime)?;
        let right = SteepInterval::measure(f, right, c_prime)?;
        let took = if left.passes_build() {
            Half::Left
        } else if right.passes_build() {
            Half::Right
        } else {
            return Err(WitnessError::NumericalBreakdown {
                depth,
                interval: iv,
            });
        };
        steps.push(BisectionStep {
            parent_slope: current.slope,
            left_slope: left.slope,
            right_slope: right.slope,
            took,
        });
        current = if took == Half::Left { left } else { right };
        intervals.push(current);
    }
    Ok(BisectionChain { intervals, steps })
}

/// Steep dyadic pieces of `parent` at levels `1..=search_depth`, each at most
/// half as long, ordered by left endpoint with coarser pieces first on ties.
fn steep_candidates(
    f: &Function,
    parent: &SteepInterval,
    search_depth: u32,
) -> Result<Vec<SteepInterval>, WitnessError> {
    let half = parent.interval.length() / 2.0;
    let mut candidates: Vec<(SteepInterval, u32)> = Vec::new();
    for level in 1..=search_depth.min(40) {
        for (interval, lvl) in dyadic_pieces(parent.interval, level) {
            if interval.length() > half {
                continue;
            }
            let s = SteepInterval::measure(f, interval, parent.threshold)?;
            if s.passes_build() {
                candidates.push((s, lvl));
            }
        }
    }
    candidates
        .sort_by(|(p, lp), (q, lq)| p.interval.a().total_cmp(&q.interval.a()).then(lp.cmp(lq)));
    Ok(candidates.into_iter().map(|(s, _)| s).collect())
}

/// Index pairs `(i, j)` with `candidates[i]` strictly left of `candidates[j]`,
/// in lexicographic order.
fn disjoint_pairs(candidates: &[SteepInterval]) -> impl Iterator<Item = (usize, usize)> + '_ {
    candidates.iter().enumerate().flat_map(move |(i, first)| {
        let end = first.interval.b();
        let from = i + 1 + candidates[i + 1..].partition_point(|c| c.interval.a() <= end);
        (from..candidates.len()).map(move |j| (i, j))
    })
}

fn exhausted(parent: &SteepInterval, search_depth: u32, addr: &str) -> WitnessError {
    WitnessError::ResolutionExhausted {
        addr: addr.to_string(),
        interval: parent.interval,
        threshold: parent.threshold,
        search_depth,
    }
}

/// Two disjoint steep subintervals of `parent`, each at most half as long.
///
/// Candidates are the dyadic pieces of `parent` (aligned and half-shifted)
/// from level 1 up to `search_depth` that are steeper than the parent's
/// threshold. They are ordered by left endpoint, coarser first on ties; the
/// result is the earliest candidate that has a strictly disjoint partner to
/// its right, together with the first such partner.
pub fn split_steep(
    f: &Function,
    parent: &SteepInterval,
    search_depth: u32,
) -> Result<(SteepInterval, SteepInterval), WitnessError> {
    let candidates = steep_candidates(f, parent, search_depth)?;
    let first = disjoint_pairs(&candidates).next();
    first
        .map(|(i, j)| (candidates[i], candidates[j]))
        .ok_or_else(|| exhausted(parent, search_depth, ""))
}

/// Seed search followed by `depth` rounds of splitting at the working threshold `C'`.
///
/// Each node takes the first pair in `split_steep` order whose two subtrees
/// can both be completed; later pairs are only tried when an earlier one
/// runs into `ResolutionExhausted` further down. If no pair works, the error
/// of the first failing subtree is returned.
pub fn build_tree(
    f: &Function,
    domain: &Interval,
    c: f64,
    params: &TreeParams,
) -> Result<WitnessTree, WitnessError> {
    if params.depth == 0 {
        return Err(WitnessError::InvalidArgument(
            "tree depth must be at least 1".into(),
        ));
    }
    if params.depth > 30 {
        return Err(WitnessError::InvalidArgument(format!(
            "tree depth {} exceeds 30",
            params.depth
        )));
    }
    let seed = find_seed(f, domain, c, params.resolution_depth)?;
    let root = SteepInterval {
        interval: seed.interval,
        slope: seed.slope,
        threshold: seed.c_prime,
    };
    let builder = Builder {
        f,
        search_depth: params.search_depth,
        failed: Mutex::new(HashMap::new()),
    };
    let root = builder.grow(root, params.depth, "")?;
    Ok(WitnessTree {
        func: f.spec().clone(),
        c,
        c_prime: seed.c_prime,
        root,
        depth: params.depth,
    })
}

/// One more level on top of an existing tree: every leaf is split with
/// `split_steep`, leaving the upper levels untouched.
pub fn extend_tree(
    f: &Function,
    tree: &WitnessTree,
    search_depth: u32,
) -> Result<WitnessTree, WitnessError> {
    if tree.depth >= 30 {
        return Err(WitnessError::InvalidArgument(format!(
            "tree depth {} exceeds 30",
            tree.depth + 1
        )));
    }
    fn extend(
        f: &Function,
        node: &mut WitnessNode,
        search_depth: u32,
        addr: &mut String,
    ) -> Result<(), WitnessError> {
        match node.children.as_deref_mut() {
            Some([l, r]) => {
                addr.push('0');
                extend(f, l, search_depth, addr)?;
                addr.pop();
                addr.push('1');
                extend(f, r, search_depth, addr)?;
                addr.pop();
            }
            None => {
                let (l, r) = split_steep(f, &node.steep, search_depth).map_err(|e| match e {
                    WitnessError::ResolutionExhausted {
                        interval,
                        threshold,
                        search_depth,
                        ..
                    } => WitnessError::ResolutionExhausted {
                        addr: addr.clone(),
                        interval,
                        threshold,
                        search_depth,
                    },
                    other => other,
                })?;
                node.children = Some(Box::new([WitnessNode::leaf(l), WitnessNode::leaf(r)]));
            }
        }
        Ok(())
    }
    let mut out = tree.clone();
    extend(f, &mut out.root, search_depth, &mut String::new())?;
    out.depth += 1;
    Ok(out)
}

fn is_exhaustion(e: &WitnessError) -> bool {
    matches!(e, WitnessError::ResolutionExhausted { .. })
}

type FailureKey = (u64, u64, u32);

struct Builder<'a> {
    f: &'a Function,
    search_depth: u32,
    /// Subtrees already known to be impossible, keyed by interval and remaining depth.
    failed: Mutex<HashMap<FailureKey, WitnessError>>,
}

impl Builder<'_> {
    fn key(steep: &SteepInterval, remaining: u32) -> FailureKey {
        (
            steep.interval.a().to_bits(),
            steep.interval.b().to_bits(),
            remaining,
        )
    }

    fn grow(
        &self,
        steep: SteepInterval,
        remaining: u32,
        addr: &str,
    ) -> Result<WitnessNode, WitnessError> {
        if remaining == 0 {
            return Ok(WitnessNode::leaf(steep));
        }
        let key = Self::key(&steep, remaining);
        if let Some(err) = self.failed.lock().expect("failure memo poisoned").get(&key) {
            return Err(err.clone());
        }
        let result = self.grow_uncached(steep, remaining, addr);
        if let Err(err) = &result {
            if is_exhaustion(err) {
                self.failed
                    .lock()
                    .expect("failure memo poisoned")
                    .insert(key, err.clone());
            }
        }
        result
    }

    fn grow_uncached(
        &self,
        steep: SteepInterval,
        remaining: u32,
        addr: &str,
    ) -> Result<WitnessNode, WitnessError> {
        let candidates = steep_candidates(self.f, &steep, self.search_depth)?;
        let left_addr = format!("{addr}0");
        let right_addr = format!("{addr}1");
        // per-candidate subtree results, filled on demand
        let mut as_left: Vec<Option<Result<WitnessNode, WitnessError>>> =
            vec![None; candidates.len()];
        let mut as_right: Vec<Option<Result<WitnessNode, WitnessError>>> =
            vec![None; candidates.len()];
        let mut first_err: Option<WitnessError> = None;
        let mut any_pair = false;
        for (i, j) in disjoint_pairs(&candidates) {
            any_pair = true;
            if matches!(as_left[i], Some(Err(_))) {
                continue;
            }
            if as_left[i].is_none() && as_right[j].is_none() && remaining >= PARALLEL_MIN_DEPTH {
                let (l, r) = rayon::join(
                    || self.grow(candidates[i], remaining - 1, &left_addr),
                    || self.grow(candidates[j], remaining - 1, &right_addr),
                );
                as_left[i] = Some(l);
                as_right[j] = Some(r);
            }
            let l = as_left[i]
                .get_or_insert_with(|| self.grow(candidates[i], remaining - 1, &left_addr));
            if let Err(e) = l {
                if !is_exhaustion(e) {
                    return Err(e.clone());
                }
                first_err.get_or_insert_with(|| e.clone());
                continue;
            }
            let r = as_right[j]
                .get_or_insert_with(|| self.grow(candidates[j], remaining - 1, &right_addr));
            match r {
                Ok(r) => {
                    let l = as_left[i]
                        .take()
                        .expect("left subtree present")
                        .expect("left subtree built");
                    let r = r.clone();
                    return Ok(WitnessNode {
                        steep,
                        children: Some(Box::new([l, r])),
                    });
                }
                Err(e) if !is_exhaustion(e) => return Err(e.clone()),
                Err(e) => {
                    first_err.get_or_insert_with(|| e.clone());
                }
            }
        }
        if !any_pair {
            return Err(exhausted(&steep, self.search_depth, addr));
        }
        Err(first_err.expect("every tried pair recorded its failure"))
    }
}
