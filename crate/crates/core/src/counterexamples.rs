//! Cantor staircases as non-removability counterexamples.
//!
//! A staircase is continuous, rises from 0 to 1, and is exactly constant on
//! every removed gap, so its derivative vanishes off the Cantor set. At the
//! same time its exceptional set is non-empty and carries a witness tree.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::functions::{cantor_value, CantorSpec, FuncSpec, Function, FunctionError};
use crate::interval::Interval;
use crate::lipschitz::{estimate_pointwise, LipschitzError, ScaleSchedule};
use crate::witness::{build_tree, verify_tree, TreeParams, WitnessDocument, WitnessError};

/// Fraction of a gap's width trimmed from each side before sampling.
pub const GAP_SHRINK: f64 = 0.1;
/// Deepest level whose gaps are materialized (`2^(level-1)` of them).
pub const MAX_GAP_LEVEL: u32 = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CounterexampleError {
    #[error(transparent)]
    Spec(#[from] FunctionError),
    #[error("step h = {h} is not below a quarter of the narrowest sampled gap ({limit})")]
    StepTooLarge { h: f64, limit: f64 },
    #[error(transparent)]
    Witness(#[from] WitnessError),
    #[error(transparent)]
    Lipschitz(#[from] LipschitzError),
}

fn spec_err<T>(msg: String) -> Result<T, CounterexampleError> {
    Err(CounterexampleError::Spec(FunctionError::Spec(msg)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapSample {
    pub level: u32,
    /// Closed sampling intervals strictly inside the removed gaps.
    pub gaps: Vec<Interval>,
    pub midpoints: Vec<f64>,
    /// Closures of the removed open gaps themselves.
    pub removed: Vec<Interval>,
}

/// The `2^(level-1)` gaps removed at step `level`, each trimmed inward by
/// [`GAP_SHRINK`] of its width on both sides.
pub fn gap_intervals(spec: &CantorSpec, level: u32) -> Result<GapSample, CounterexampleError> {
    spec.validate()?;
    if level == 0 || level > MAX_GAP_LEVEL {
        return spec_err(format!("gap level {level} not in 1..={MAX_GAP_LEVEL}"));
    }
    let r = spec.ratio;
    let mut lefts = vec![0.0f64];
    let mut len = 1.0f64;
    for _ in 1..level {
        lefts = lefts
            .iter()
            .flat_map(|&l| [l, l + (1.0 - r) * len])
            .collect();
        len *= r;
    }
    let mut sample = GapSample {
        level,
        gaps: Vec::with_capacity(lefts.len()),
        midpoints: Vec::with_capacity(lefts.len()),
        removed: Vec::with_capacity(lefts.len()),
    };
    for l in lefts {
        let (lo, hi) = (l + r * len, l + (1.0 - r) * len);
        let trim = GAP_SHRINK * (hi - lo);
        let (a, b) = (lo + trim, hi - trim);
        if !(lo < a && a < b && b < hi) {
            return spec_err(format!(
                "level-{level} gaps for ratio {r} are too narrow for double precision"
            ));
        }
        sample
            .removed
            .push(Interval::new(lo, hi).map_err(|e| FunctionError::Spec(e.to_string()))?);
        sample
            .gaps
            .push(Interval::new(a, b).map_err(|e| FunctionError::Spec(e.to_string()))?);
        sample.midpoints.push(0.5 * (lo + hi));
    }
    Ok(sample)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FlatnessReport {
    pub level: u32,
    pub h: f64,
    pub gaps_checked: usize,
    /// Largest `|f(m ± h) - f(m)| / h` over all gap midpoints; exactly 0 when flat.
    pub max_quotient: f64,
    /// Largest pointwise estimate at the gap midpoints (windows no wider than `h`).
    pub max_estimate: f64,
    pub flat: bool,
}

/// Checks bit-exact constancy of the staircase around every gap midpoint of
/// levels `1..=level`.
pub fn flatness_check(
    spec: &CantorSpec,
    level: u32,
    h: f64,
) -> Result<FlatnessReport, CounterexampleError> {
    spec.validate()?;
    if level > spec.digit_depth {
        return spec_err(format!(
            "gap level {level} is deeper than digitDepth {}; the truncated staircase is not flat there",
            spec.digit_depth
        ));
    }
    let samples = (1..=level)
        .map(|k| gap_intervals(spec, k))
        .collect::<Result<Vec<_>, _>>()?;
    let narrowest = samples
        .iter()
        .flat_map(|s| s.gaps.iter().map(Interval::length))
        .fold(f64::INFINITY, f64::min);
    let limit = narrowest / 4.0;
    if !(h > 0.0 && h < limit) {
        return Err(CounterexampleError::StepTooLarge { h, limit });
    }

    let f = Function::new(FuncSpec::CantorStaircase(*spec))?;
    let unit = Interval::new(0.0, 1.0).expect("unit interval");
    let schedule = ScaleSchedule::new(h, 0.5, 3, 4)?;
    let mut max_quotient = 0.0f64;
    let mut max_estimate = 0.0f64;
    let mut flat = true;
    let mut gaps_checked = 0;
    for m in samples.iter().flat_map(|s| s.midpoints.iter().copied()) {
        let v = cantor_value(m, spec)?;
        for x in [m - h, m + h] {
            let w = cantor_value(x, spec)?;
            flat &= w == v;
            max_quotient = max_quotient.max((w - v).abs() / h);
        }
        max_estimate = max_estimate.max(estimate_pointwise(&f, m, &unit, &schedule)?.value);
        gaps_checked += 1;
    }
    Ok(FlatnessReport {
        level,
        h,
        gaps_checked,
        max_quotient,
        max_estimate,
        flat: flat && max_quotient == 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DemoConfig {
    pub flatness_level: u32,
    pub search_depth: u32,
    pub resolution_depth: u32,
}

impl Default for DemoConfig {
    fn default() -> Self {
        DemoConfig {
            flatness_level: 5,
            search_depth: 6,
            resolution_depth: 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NonremovabilityReport {
    pub spec: CantorSpec,
    #[serde(rename = "C")]
    pub c: f64,
    /// `f(1) - f(0)`
    pub rise: f64,
    pub nonconstant: bool,
    pub flatness: FlatnessReport,
    pub tree_verified: bool,
    pub leaves: usize,
    pub certificate: WitnessDocument,
    pub passed: bool,
    pub conclusion: String,
}

/// Combines the three facts that make the staircase a counterexample:
/// it is non-constant, flat on the gaps, and has a certified Cantor
/// skeleton inside its `C`-exceptional set.
pub fn nonremovability_demo(
    spec: &CantorSpec,
    c: f64,
    depth: u32,
    config: &DemoConfig,
) -> Result<NonremovabilityReport, CounterexampleError> {
    spec.validate()?;
    let rise = cantor_value(1.0, spec)? - cantor_value(0.0, spec)?;

    let level = config.flatness_level.min(spec.digit_depth).max(1);
    let narrowest = gap_intervals(spec, level)?
        .removed
        .iter()
        .map(Interval::length)
        .fold(f64::INFINITY, f64::min);
    let flatness = flatness_check(spec, level, narrowest / 8.0)?;

    let f = Function::new(FuncSpec::CantorStaircase(*spec))?;
    let unit = Interval::new(0.0, 1.0).expect("unit interval");
    let params = TreeParams {
        depth,
        search_depth: config.search_depth,
        resolution_depth: config.resolution_depth,
    };
    let tree = build_tree(&f, &unit, c, &params)?;
    let tree_verified = verify_tree(&tree).valid;
    let leaves = tree.leaves().len();
    let certificate = if tree_verified {
        WitnessDocument::certified(&tree)?
    } else {
        WitnessDocument::from_tree(&tree)
    };

    let nonconstant = rise == 1.0;
    let passed = nonconstant && flatness.flat && tree_verified;
    let conclusion = if passed {
        format!(
            "The staircase is continuous and non-constant (f(1) - f(0) = 1), is exactly flat on every sampled gap \
             through level {level}, and its {c}-exceptional set contains a verified depth-{depth} Cantor skeleton \
             ({leaves} disjoint leaves). A perfect set is therefore not removable."
        )
    } else {
        "One or more clauses failed; see the individual fields.".to_string()
    };
    Ok(NonremovabilityReport {
        spec: *spec,
        c,
        rise,
        nonconstant,
        flatness,
        tree_verified,
        leaves,
        certificate,
        passed,
        conclusion,
    })
}
