//! Serializable catalog of continuous real functions on intervals.
//!
//! A [`FuncSpec`] is plain data and round-trips through JSON as
//! `{"kind": "<Variant>", ...fields...}`. Evaluation goes through
//! [`Function`], which validates the spec once and caches its domain.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interval::Interval;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FunctionError {
    #[error("x = {x} lies outside the declared domain [{lo}, {hi}]")]
    Domain { x: f64, lo: f64, hi: f64 },
    #[error("invalid function spec: {0}")]
    Spec(String),
    #[error("sampled data: {0}")]
    Csv(String),
}

fn spec_err<T>(msg: impl Into<String>) -> Result<T, FunctionError> {
    Err(FunctionError::Spec(msg.into()))
}

/// Upper bound on the digit-algorithm depth; beyond ~1074 the weights underflow anyway.
pub const MAX_DIGIT_DEPTH: u32 = 1024;

/// Parameters of a generalized Cantor staircase: each surviving piece keeps
/// `ratio` of its parent's length at both ends, the middle is removed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CantorSpec {
    pub ratio: f64,
    pub digit_depth: u32,
}

impl CantorSpec {
    pub fn new(ratio: f64, digit_depth: u32) -> Result<Self, FunctionError> {
        let spec = CantorSpec { ratio, digit_depth };
        spec.validate()?;
        Ok(spec)
    }

    /// Classical middle-thirds staircase.
    pub fn middle_thirds(digit_depth: u32) -> Self {
        CantorSpec {
            ratio: 1.0 / 3.0,
            digit_depth,
        }
    }

    pub fn validate(&self) -> Result<(), FunctionError> {
        if !(self.ratio > 0.0 && self.ratio < 0.5) {
            return spec_err(format!("Cantor ratio {} not in (0, 1/2)", self.ratio));
        }
        if self.digit_depth == 0 || self.digit_depth > MAX_DIGIT_DEPTH {
            return spec_err(format!(
                "Cantor digitDepth {} not in 1..={MAX_DIGIT_DEPTH}",
                self.digit_depth
            ));
        }
        Ok(())
    }

    /// Uniform error bound of the truncated digit algorithm.
    pub fn truncation_error(&self) -> f64 {
        0.5f64.powi(self.digit_depth as i32)
    }
}

/// Generalized Cantor function at `x ∈ [0, 1]`.
///
/// Walks the ternary-like address of `x`: the left piece `[0, r]` halves the
/// value, the right piece `[1-r, 1]` adds the current weight, and the middle
/// gap returns immediately (the function is constant there). After
/// `digit_depth` digits the residual is interpolated linearly, which makes
/// the truncation the `D`-th self-similar iterate of the identity: continuous,
/// monotone, exact at `0` and `1`, and within `2^-D` of the limit.
pub fn cantor_value(x: f64, spec: &CantorSpec) -> Result<f64, FunctionError> {
    spec.validate()?;
    if !(0.0..=1.0).contains(&x) {
        return Err(FunctionError::Domain {
            x,
            lo: 0.0,
            hi: 1.0,
        });
    }
    Ok(cantor_digits(x, spec))
}

pub(crate) fn cantor_digits(x: f64, spec: &CantorSpec) -> f64 {
    let r = spec.ratio;
    let upper = 1.0 - r;
    let mut x = x.clamp(0.0, 1.0);
    let mut value = 0.0;
    let mut weight = 0.5;
    for _ in 0..spec.digit_depth {
        if x < r {
            x /= r;
        } else if x > upper {
            value += weight;
            // reflected form keeps x = 1 fixed exactly
            x = 1.0 - (1.0 - x) / r;
        } else {
            return value + weight;
        }
        x = x.clamp(0.0, 1.0);
        weight *= 0.5;
    }
    value + 2.0 * weight * x
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    #[default]
    Linear,
}

/// Closed description of a continuous real function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum FuncSpec {
    Constant {
        value: f64,
    },
    Affine {
        slope: f64,
        intercept: f64,
    },
    /// `f(x) = |x|`
    Abs {},
    /// Coefficients in ascending degree.
    Polynomial {
        coefficients: Vec<f64>,
    },
    PiecewiseLinear {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
    CantorStaircase(CantorSpec),
    Sampled {
        xs: Vec<f64>,
        ys: Vec<f64>,
        #[serde(default)]
        interpolation: Interpolation,
    },
    /// `x ↦ postScale · inner(preScale · x + preShift) + postShift`
    #[serde(rename_all = "camelCase")]
    AffineReparam {
        inner: Box<FuncSpec>,
        pre_scale: f64,
        pre_shift: f64,
        post_scale: f64,
        post_shift: f64,
    },
    Sum {
        terms: Vec<FuncSpec>,
    },
}

fn check_finite(name: &str, v: f64) -> Result<(), FunctionError> {
    if v.is_finite() {
        Ok(())
    } else {
        spec_err(format!("{name} must be finite, got {v}"))
    }
}

fn check_knots(kind: &str, xs: &[f64], ys: &[f64]) -> Result<(), FunctionError> {
    if xs.len() < 2 {
        return spec_err(format!(
            "{kind} needs at least 2 breakpoints, got {}",
            xs.len()
        ));
    }
    if xs.len() != ys.len() {
        return spec_err(format!(
            "{kind}: {} breakpoints but {} values",
            xs.len(),
            ys.len()
        ));
    }
    if let Some(v) = xs.iter().chain(ys).find(|v| !v.is_finite()) {
        return spec_err(format!("{kind}: non-finite entry {v}"));
    }
    if let Some(w) = xs.windows(2).position(|w| w[0] >= w[1]) {
        return spec_err(format!(
            "{kind}: breakpoints not strictly increasing at index {}",
            w + 1
        ));
    }
    Ok(())
}

impl FuncSpec {
    pub fn constant(value: f64) -> Self {
        FuncSpec::Constant { value }
    }

    pub fn affine(slope: f64, intercept: f64) -> Self {
        FuncSpec::Affine { slope, intercept }
    }

    pub fn abs() -> Self {
        FuncSpec::Abs {}
    }

    pub fn polynomial(coefficients: Vec<f64>) -> Self {
        FuncSpec::Polynomial { coefficients }
    }

    pub fn piecewise_linear(breakpoints: Vec<f64>, values: Vec<f64>) -> Self {
        FuncSpec::PiecewiseLinear {
            breakpoints,
            values,
        }
    }

    pub fn cantor(ratio: f64, digit_depth: u32) -> Self {
        FuncSpec::CantorStaircase(CantorSpec { ratio, digit_depth })
    }

    pub fn sampled(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        FuncSpec::Sampled {
            xs,
            ys,
            interpolation: Interpolation::Linear,
        }
    }

    pub fn reparam(
        inner: FuncSpec,
        pre_scale: f64,
        pre_shift: f64,
        post_scale: f64,
        post_shift: f64,
    ) -> Self {
        FuncSpec::AffineReparam {
            inner: Box::new(inner),
            pre_scale,
            pre_shift,
            post_scale,
            post_shift,
        }
    }

    pub fn sum(terms: Vec<FuncSpec>) -> Self {
        FuncSpec::Sum { terms }
    }

    pub fn from_json(s: &str) -> Result<Self, FunctionError> {
        let spec: FuncSpec =
            serde_json::from_str(s).map_err(|e| FunctionError::Spec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("FuncSpec serialization is infallible")
    }

    pub fn validate(&self) -> Result<(), FunctionError> {
        self.domain().map(|_| ())
    }

    /// Declared domain `(lo, hi)`, possibly unbounded. Validates the spec.
    pub fn domain(&self) -> Result<(f64, f64), FunctionError> {
        use FuncSpec::*;
        match self {
            Constant { value } => {
                check_finite("value", *value)?;
                Ok((f64::NEG_INFINITY, f64::INFINITY))
            }
            Affine { slope, intercept } => {
                check_finite("slope", *slope)?;
                check_finite("intercept", *intercept)?;
                Ok((f64::NEG_INFINITY, f64::INFINITY))
            }
            Abs {} => Ok((f64::NEG_INFINITY, f64::INFINITY)),
            Polynomial { coefficients } => {
                if coefficients.is_empty() {
                    return spec_err("Polynomial needs at least one coefficient");
                }
                for c in coefficients {
                    check_finite("coefficient", *c)?;
                }
                Ok((f64::NEG_INFINITY, f64::INFINITY))
            }
            PiecewiseLinear {
                breakpoints,
                values,
            } => {
                check_knots("PiecewiseLinear", breakpoints, values)?;
                Ok((breakpoints[0], breakpoints[breakpoints.len() - 1]))
            }
            CantorStaircase(spec) => {
                spec.validate()?;
                Ok((0.0, 1.0))
            }
            Sampled { xs, ys, .. } => {
                check_knots("Sampled", xs, ys)?;
                Ok((xs[0], xs[xs.len() - 1]))
            }
            AffineReparam {
                inner,
                pre_scale,
                pre_shift,
                post_scale,
                post_shift,
            } => {
                check_finite("preScale", *pre_scale)?;
                check_finite("preShift", *pre_shift)?;
                check_finite("postScale", *post_scale)?;
                check_finite("postShift", *post_shift)?;
                if *pre_scale == 0.0 {
                    return spec_err("AffineReparam preScale must be non-zero");
                }
                let (lo, hi) = inner.domain()?;
                let p = (lo - pre_shift) / pre_scale;
                let q = (hi - pre_shift) / pre_scale;
                let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
                if lo >= hi {
                    return spec_err("AffineReparam domain collapses to a point");
                }
                Ok((lo, hi))
            }
            Sum { terms } => {
                let mut lo = f64::NEG_INFINITY;
                let mut hi = f64::INFINITY;
                for t in terms {
                    let (tl, th) = t.domain()?;
                    lo = lo.max(tl);
                    hi = hi.min(th);
                }
                if lo >= hi {
                    return spec_err("Sum terms have no common non-degenerate domain");
                }
                Ok((lo, hi))
            }
        }
    }

    /// Evaluation without the domain check; bounded variants clamp their argument.
    fn eval_raw(&self, x: f64) -> f64 {
        use FuncSpec::*;
        match self {
            Constant { value } => *value,
            Affine { slope, intercept } => slope * x + intercept,
            Abs {} => x.abs(),
            Polynomial { coefficients } => {
                coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
            }
            PiecewiseLinear {
                breakpoints,
                values,
            } => interpolate(breakpoints, values, x),
            CantorStaircase(spec) => cantor_digits(x, spec),
            Sampled { xs, ys, .. } => interpolate(xs, ys, x),
            AffineReparam {
                inner,
                pre_scale,
                pre_shift,
                post_scale,
                post_shift,
            } => post_scale * inner.eval_raw(pre_scale * x + pre_shift) + post_shift,
            Sum { terms } => terms.iter().map(|t| t.eval_raw(x)).sum(),
        }
    }

    /// Points where the function may fail to be affine, or `None` when it is
    /// not piecewise linear at all.
    fn kinks(&self) -> Option<Vec<f64>> {
        use FuncSpec::*;
        match self {
            Constant { .. } | Affine { .. } => Some(Vec::new()),
            Abs {} => Some(vec![0.0]),
            Polynomial { coefficients } => {
                if coefficients.iter().skip(2).all(|c| *c == 0.0) {
                    Some(Vec::new())
                } else {
                    None
                }
            }
            PiecewiseLinear { breakpoints, .. } => Some(breakpoints.clone()),
            Sampled { xs, .. } => Some(xs.clone()),
            CantorStaircase(_) => None,
            AffineReparam {
                inner,
                pre_scale,
                pre_shift,
                ..
            } => inner.kinks().map(|ks| {
                ks.into_iter()
                    .map(|k| (k - pre_shift) / pre_scale)
                    .collect()
            }),
            Sum { terms } => {
                let mut all = Vec::new();
                for t in terms {
                    all.extend(t.kinks()?);
                }
                Some(all)
            }
        }
    }

    /// Re-express the restriction to `domain` as an explicit `PiecewiseLinear`.
    /// Returns `None` for functions that are not piecewise linear.
    pub fn to_piecewise_linear(&self, domain: Interval) -> Option<FuncSpec> {
        let f = Function::new(self.clone()).ok()?;
        let (lo, hi) = f.domain();
        if domain.a() < lo || domain.b() > hi {
            return None;
        }
        let mut xs: Vec<f64> = self
            .kinks()?
            .into_iter()
            .filter(|k| domain.a() < *k && *k < domain.b())
            .collect();
        xs.push(domain.a());
        xs.push(domain.b());
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let ys = xs.iter().map(|&x| self.eval_raw(x)).collect();
        Some(FuncSpec::PiecewiseLinear {
            breakpoints: xs,
            values: ys,
        })
    }
}

/// Exact linear interpolation through strictly increasing knots, clamped to the knot range.
fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let i = xs.partition_point(|&k| k <= x) - 1;
    if x == xs[i] {
        return ys[i];
    }
    let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
    ys[i] + t * (ys[i + 1] - ys[i])
}

/// A validated [`FuncSpec`] ready for repeated evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Function {
    spec: FuncSpec,
    lo: f64,
    hi: f64,
}

impl Function {
    pub fn new(spec: FuncSpec) -> Result<Self, FunctionError> {
        let (lo, hi) = spec.domain()?;
        Ok(Function { spec, lo, hi })
    }

    pub fn spec(&self) -> &FuncSpec {
        &self.spec
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// The declared domain as an [`Interval`] when it is bounded.
    pub fn bounded_domain(&self) -> Option<Interval> {
        Interval::new(self.lo, self.hi).ok()
    }

    pub fn covers(&self, i: &Interval) -> bool {
        self.lo <= i.a() && i.b() <= self.hi
    }

    pub fn eval(&self, x: f64) -> Result<f64, FunctionError> {
        if !(x >= self.lo && x <= self.hi) || x.is_nan() {
            return Err(FunctionError::Domain {
                x,
                lo: self.lo,
                hi: self.hi,
            });
        }
        Ok(self.spec.eval_raw(x))
    }

    /// `|f(b) - f(a)| / (b - a)`
    pub fn secant_slope(&self, i: &Interval) -> Result<f64, FunctionError> {
        let fa = self.eval(i.a())?;
        let fb = self.eval(i.b())?;
        Ok((fb - fa).abs() / i.length())
    }
}

/// One-shot evaluation: validates `f`, checks the domain, evaluates.
pub fn evaluate(f: &FuncSpec, x: f64) -> Result<f64, FunctionError> {
    Function::new(f.clone())?.eval(x)
}

/// Exact pointwise Lipschitz constant of a piecewise-linear function.
///
/// Interior of a segment: `|slope|`. Interior breakpoint: the larger of the
/// two adjacent `|slope|`s (the two-sided limsup sees both). Endpoint: the
/// single adjacent `|slope|`.
pub fn exact_pointwise_lipschitz_pl(f: &FuncSpec, x: f64) -> Result<f64, FunctionError> {
    let (xs, ys) = match f {
        FuncSpec::PiecewiseLinear {
            breakpoints,
            values,
        } => (breakpoints, values),
        other => {
            return spec_err(format!(
                "exact oracle needs a PiecewiseLinear function, got {}",
                kind_name(other)
            ))
        }
    };
    check_knots("PiecewiseLinear", xs, ys)?;
    let n = xs.len();
    if !(x >= xs[0] && x <= xs[n - 1]) {
        return Err(FunctionError::Domain {
            x,
            lo: xs[0],
            hi: xs[n - 1],
        });
    }
    let slope = |i: usize| ((ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])).abs();
    match xs.binary_search_by(|k| k.total_cmp(&x)) {
        Ok(0) => Ok(slope(0)),
        Ok(j) if j == n - 1 => Ok(slope(n - 2)),
        Ok(j) => Ok(slope(j - 1).max(slope(j))),
        Err(ins) => Ok(slope(ins - 1)),
    }
}

/// The `kind` tag this spec serializes with.
pub fn kind_name(f: &FuncSpec) -> &'static str {
    match f {
        FuncSpec::Constant { .. } => "Constant",
        FuncSpec::Affine { .. } => "Affine",
        FuncSpec::Abs {} => "Abs",
        FuncSpec::Polynomial { .. } => "Polynomial",
        FuncSpec::PiecewiseLinear { .. } => "PiecewiseLinear",
        FuncSpec::CantorStaircase(_) => "CantorStaircase",
        FuncSpec::Sampled { .. } => "Sampled",
        FuncSpec::AffineReparam { .. } => "AffineReparam",
        FuncSpec::Sum { .. } => "Sum",
    }
}

/// Read a two-column `x,y` CSV into a `Sampled` spec. A non-numeric first
/// row is treated as a header.
pub fn sampled_from_csv<R: Read>(reader: R) -> Result<FuncSpec, FunctionError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| FunctionError::Csv(e.to_string()))?;
        if record.len() != 2 {
            return Err(FunctionError::Csv(format!(
                "row {}: expected 2 columns, found {}",
                row + 1,
                record.len()
            )));
        }
        let parsed = (record[0].parse::<f64>(), record[1].parse::<f64>());
        match parsed {
            (Ok(x), Ok(y)) => {
                xs.push(x);
                ys.push(y);
            }
            _ if row == 0 => continue,
            _ => {
                return Err(FunctionError::Csv(format!(
                    "row {}: cannot parse {:?}",
                    row + 1,
                    record
                )))
            }
        }
    }
    let spec = FuncSpec::sampled(xs, ys);
    spec.validate()?;
    Ok(spec)
}

pub fn sampled_from_csv_path(path: impl AsRef<Path>) -> Result<FuncSpec, FunctionError> {
    let file = std::fs::File::open(path.as_ref())
        .map_err(|e| FunctionError::Csv(format!("{}: {e}", path.as_ref().display())))?;
    sampled_from_csv(file)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn abs_and_pl_examples() {
        assert_eq!(evaluate(&FuncSpec::abs(), -0.5).unwrap(), 0.5);
        let pl = FuncSpec::piecewise_linear(vec![0.0, 1.0], vec![0.0, 2.0]);
        assert_eq!(evaluate(&pl, 0.5).unwrap(), 1.0);
        assert_eq!(evaluate(&pl, 1.0).unwrap(), 2.0);
    }

    #[test]
    fn cantor_endpoints_and_gap() {
        let spec = CantorSpec::middle_thirds(30);
        assert_eq!(cantor_value(0.0, &spec).unwrap(), 0.0);
        assert_eq!(cantor_value(1.0, &spec).unwrap(), 1.0);
        assert_eq!(cantor_value(0.5, &spec).unwrap(), 0.5);
        for r in [0.01, 0.2, 0.25, 0.4, 0.49, 0.4999] {
            let s = CantorSpec::new(r, 40).unwrap();
            assert_eq!(
                cantor_value(1.0, &s).unwrap() - cantor_value(0.0, &s).unwrap(),
                1.0
            );
        }
    }

    #[test]
    fn cantor_rejects_bad_input() {
        let spec = CantorSpec::middle_thirds(10);
        assert!(matches!(
            cantor_value(1.5, &spec),
            Err(FunctionError::Domain { .. })
        ));
        assert!(matches!(
            cantor_value(-0.1, &spec),
            Err(FunctionError::Domain { .. })
        ));
        for r in [0.0, 0.5, 0.7, -0.1, f64::NAN] {
            assert!(matches!(
                CantorSpec::new(r, 10),
                Err(FunctionError::Spec(_))
            ));
        }
        assert!(CantorSpec::new(0.3, 0).is_err());
    }

    #[test]
    fn domain_errors() {
        let pl = FuncSpec::piecewise_linear(vec![0.0, 1.0], vec![0.0, 2.0]);
        assert!(matches!(
            evaluate(&pl, 1.5),
            Err(FunctionError::Domain { .. })
        ));
        assert!(matches!(
            evaluate(&FuncSpec::cantor(0.3, 5), -1e-9),
            Err(FunctionError::Domain { .. })
        ));
        assert!(matches!(
            evaluate(&FuncSpec::abs(), f64::NAN),
            Err(FunctionError::Domain { .. })
        ));
    }

    #[test]
    fn spec_errors() {
        let bad = FuncSpec::piecewise_linear(vec![0.0, 1.0, 1.0], vec![0.0, 1.0, 2.0]);
        assert!(matches!(evaluate(&bad, 0.5), Err(FunctionError::Spec(_))));
        let bad = FuncSpec::piecewise_linear(vec![0.0, 1.0], vec![0.0]);
        assert!(matches!(bad.validate(), Err(FunctionError::Spec(_))));
        let bad = FuncSpec::reparam(FuncSpec::abs(), 0.0, 1.0, 1.0, 0.0);
        assert!(bad.validate().is_err());
        let disjoint = FuncSpec::sum(vec![
            FuncSpec::piecewise_linear(vec![0.0, 1.0], vec![0.0, 1.0]),
            FuncSpec::piecewise_linear(vec![2.0, 3.0], vec![0.0, 1.0]),
        ]);
        assert!(disjoint.validate().is_err());
    }

    #[test]
    fn reparam_and_sum() {
        // 2·|3x - 1| + 1 at x = 0 → 3
        let f = FuncSpec::reparam(FuncSpec::abs(), 3.0, -1.0, 2.0, 1.0);
        assert_eq!(evaluate(&f, 0.0).unwrap(), 3.0);
        // negative pre-scale flips the domain
        let g = FuncSpec::reparam(FuncSpec::cantor(1.0 / 3.0, 20), -1.0, 0.0, 1.0, 0.0);
        assert_eq!(Function::new(g.clone()).unwrap().domain(), (-1.0, 0.0));
        assert_eq!(evaluate(&g, -1.0).unwrap(), 1.0);
        let s = FuncSpec::sum(vec![
            FuncSpec::affine(1.0, 0.0),
            FuncSpec::polynomial(vec![0.0, 0.0, 1.0]),
        ]);
        assert_eq!(evaluate(&s, 3.0).unwrap(), 12.0);
    }

    #[test]
    fn pl_oracle_examples() {
        // slopes 1 then -3
        let f = FuncSpec::piecewise_linear(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, -2.0]);
        assert_eq!(exact_pointwise_lipschitz_pl(&f, 1.5).unwrap(), 3.0);
        assert_eq!(exact_pointwise_lipschitz_pl(&f, 0.5).unwrap(), 1.0);
        assert_eq!(exact_pointwise_lipschitz_pl(&f, 1.0).unwrap(), 3.0);
        assert_eq!(exact_pointwise_lipschitz_pl(&f, 0.0).unwrap(), 1.0);
        assert_eq!(exact_pointwise_lipschitz_pl(&f, 2.0).unwrap(), 3.0);
        assert!(exact_pointwise_lipschitz_pl(&f, 2.5).is_err());
        assert!(exact_pointwise_lipschitz_pl(&FuncSpec::abs(), 0.0).is_err());

        let aff = FuncSpec::affine(7.0, -2.0)
            .to_piecewise_linear(Interval::new(-1.0, 4.0).unwrap())
            .unwrap();
        assert_eq!(exact_pointwise_lipschitz_pl(&aff, 0.3).unwrap(), 7.0);
    }

    #[test]
    fn to_piecewise_linear_merges_kinks() {
        let f = FuncSpec::sum(vec![
            FuncSpec::abs(),
            FuncSpec::reparam(FuncSpec::abs(), 1.0, -0.5, 2.0, 0.0),
        ]);
        let pl = f
            .to_piecewise_linear(Interval::new(-1.0, 1.0).unwrap())
            .unwrap();
        match &pl {
            FuncSpec::PiecewiseLinear { breakpoints, .. } => {
                assert_eq!(breakpoints, &vec![-1.0, 0.0, 0.5, 1.0])
            }
            _ => unreachable!(),
        }
        for x in [-1.0, -0.3, 0.0, 0.25, 0.5, 0.9] {
            assert!((evaluate(&pl, x).unwrap() - evaluate(&f, x).unwrap()).abs() < 1e-15);
        }
        assert!(FuncSpec::cantor(0.3, 4)
            .to_piecewise_linear(Interval::new(0.0, 1.0).unwrap())
            .is_none());
        assert!(FuncSpec::polynomial(vec![0.0, 0.0, 1.0])
            .to_piecewise_linear(Interval::new(0.0, 1.0).unwrap())
            .is_none());
    }

    #[test]
    fn json_shape() {
        let f = FuncSpec::cantor(0.25, 12);
        let json = f.to_json();
        assert_eq!(
            json,
            r#"{"kind":"CantorStaircase","ratio":0.25,"digitDepth":12}"#
        );
        let r = FuncSpec::reparam(FuncSpec::abs(), 2.0, 0.5, -1.0, 0.0);
        let json = r.to_json();
        assert!(json.contains(r#""preScale":2.0"#) && json.contains(r#""inner":{"kind":"Abs"}"#));
        assert_eq!(FuncSpec::from_json(&json).unwrap(), r);
        let s: FuncSpec =
            serde_json::from_str(r#"{"kind":"Sampled","xs":[0,1],"ys":[1,2]}"#).unwrap();
        assert_eq!(s, FuncSpec::sampled(vec![0.0, 1.0], vec![1.0, 2.0]));
        assert!(
            FuncSpec::from_json(r#"{"kind":"CantorStaircase","ratio":0.5,"digitDepth":3}"#)
                .is_err()
        );
    }

    #[test]
    fn csv_ingestion() {
        let data = "x,y\n0,0\n0.5,2\n1,1\n";
        let f = sampled_from_csv(data.as_bytes()).unwrap();
        assert_eq!(evaluate(&f, 0.25).unwrap(), 1.0);
        assert_eq!(evaluate(&f, 0.75).unwrap(), 1.5);
        assert!(sampled_from_csv("0,0\n0,1\n".as_bytes()).is_err());
        assert!(sampled_from_csv("0,0\nfoo,1\n".as_bytes()).is_err());
        assert!(sampled_from_csv("0,0,1\n".as_bytes()).is_err());
    }
}
