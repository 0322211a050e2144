//! Shrinking-window estimates of pointwise Lipschitz constants.
//!
//! The limsup in `L(f, x0) = limsup_{x→x0} |f(x) - f(x0)| / |x - x0|` is
//! discretized by a decreasing list of window radii `h_0 > h_1 > … > h_{K-1}`.
//! Window `k` samples the annulus `h_{k+1} < |x - x0| ≤ h_k` at `m` evenly
//! spaced distances per side (the last window's inner radius continues the
//! final ratio). At an endpoint of the domain only the inner side is sampled.
//! The estimate is the largest of the last `⌈K/2⌉` window maxima, or `+∞`
//! when those maxima grow geometrically.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::functions::{FuncSpec, Function, FunctionError};
use crate::interval::Interval;

pub const DEFAULT_REL_TOL: f64 = 1e-9;
pub const DEFAULT_DIVERGENCE_RATIO: f64 = 1.2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LipschitzError {
    #[error("x0 = {x0} lies outside the domain {domain}")]
    Domain { x0: f64, domain: Interval },
    #[error("invalid scale schedule: {0}")]
    Schedule(String),
    #[error(transparent)]
    Function(#[from] FunctionError),
    #[error("at grid point x = {x}: {source}")]
    AtGridPoint {
        x: f64,
        #[source]
        source: Box<LipschitzError>,
    },
    #[error(
        "pointwise and pairwise checks disagree at C = {c}: max pointwise {max_pointwise}, \
         max pairwise {max_pairwise} (estimator misconfiguration, not a counterexample)"
    )]
    Disagreement {
        c: f64,
        max_pointwise: f64,
        max_pairwise: f64,
    },
}

/// Geometric window schedule: window `k` has radius `h0 · shrinkFactor^k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScaleSchedule {
    pub h0: f64,
    pub shrink_factor: f64,
    pub window_count: u32,
    /// Samples per side of each window.
    pub samples_per_window: u32,
}

impl Default for ScaleSchedule {
    fn default() -> Self {
        ScaleSchedule {
            h0: 0.125,
            shrink_factor: 0.5,
            window_count: 8,
            samples_per_window: 4,
        }
    }
}

impl ScaleSchedule {
    pub fn new(
        h0: f64,
        shrink_factor: f64,
        window_count: u32,
        samples_per_window: u32,
    ) -> Result<Self, LipschitzError> {
        let s = ScaleSchedule {
            h0,
            shrink_factor,
            window_count,
            samples_per_window,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), LipschitzError> {
        if !(self.h0 > 0.0 && self.h0.is_finite()) {
            return Err(LipschitzError::Schedule(format!(
                "h0 must be positive, got {}",
                self.h0
            )));
        }
        if !(self.shrink_factor > 0.0 && self.shrink_factor < 1.0) {
            return Err(LipschitzError::Schedule(format!(
                "shrinkFactor must lie in (0, 1), got {}",
                self.shrink_factor
            )));
        }
        if self.window_count < 3 {
            return Err(LipschitzError::Schedule(format!(
                "windowCount must be at least 3, got {}",
                self.window_count
            )));
        }
        if self.samples_per_window < 4 {
            return Err(LipschitzError::Schedule(format!(
                "samplesPerWindow must be at least 4, got {}",
                self.samples_per_window
            )));
        }
        Ok(())
    }

    pub fn scales(&self) -> Vec<f64> {
        (0..self.window_count)
            .map(|k| self.h0 * self.shrink_factor.powi(k as i32))
            .collect()
    }

    pub fn finest(&self) -> f64 {
        self.h0 * self.shrink_factor.powi(self.window_count as i32 - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sided {
    #[serde(rename = "two-sided")]
    TwoSided,
    /// Only points left of `x0` are available (right endpoint).
    #[serde(rename = "left")]
    Left,
    #[serde(rename = "right")]
    Right,
}

impl Sided {
    pub fn as_str(&self) -> &'static str {
        match self {
            Sided::TwoSided => "two-sided",
            Sided::Left => "left",
            Sided::Right => "right",
        }
    }
}

/// `+∞` serializes as the string `"inf"`; JSON has no infinity literal.
mod extended_real {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Text(t) => Err(de::Error::custom(format!(
                "expected number or \"inf\", got {t:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LipEstimate {
    #[serde(with = "extended_real")]
    pub value: f64,
    pub window_maxima: Vec<f64>,
    pub divergent: bool,
    pub sided: Sided,
}

impl LipEstimate {
    /// Wraps an exactly known constant (e.g. from the piecewise-linear oracle).
    pub fn exact(value: f64, sided: Sided) -> Self {
        LipEstimate {
            value,
            window_maxima: vec![value],
            divergent: false,
            sided,
        }
    }

    pub fn exceeds(&self, c: f64, rel_tol: f64) -> bool {
        self.divergent || self.value > c * (1.0 + rel_tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    pub divergence_ratio: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            divergence_ratio: DEFAULT_DIVERGENCE_RATIO,
        }
    }
}

pub fn estimate_pointwise(
    f: &Function,
    x0: f64,
    domain: &Interval,
    schedule: &ScaleSchedule,
) -> Result<LipEstimate, LipschitzError> {
    schedule.validate()?;
    estimate_at_scales(
        f,
        x0,
        domain,
        &schedule.scales(),
        schedule.samples_per_window,
        &EstimatorConfig::default(),
    )
}

/// Estimator with an explicit, strictly decreasing list of window radii.
pub fn estimate_at_scales(
    f: &Function,
    x0: f64,
    domain: &Interval,
    scales: &[f64],
    samples_per_window: u32,
    config: &EstimatorConfig,
) -> Result<LipEstimate, LipschitzError> {
    if !domain.contains(x0) {
        return Err(LipschitzError::Domain {
            x0,
            domain: *domain,
        });
    }
    if !f.covers(domain) {
        let (lo, hi) = f.domain();
        let x = if domain.a() < lo {
            domain.a()
        } else {
            domain.b()
        };
        return Err(FunctionError::Domain { x, lo, hi }.into());
    }
    validate_scales(scales, samples_per_window)?;

    let fx0 = f.eval(x0)?;
    let left_reach = x0 - domain.a();
    let right_reach = domain.b() - x0;
    let sided = if left_reach <= 0.0 {
        Sided::Right
    } else if right_reach <= 0.0 {
        Sided::Left
    } else {
        Sided::TwoSided
    };

    let k_total = scales.len();
    let mut window_maxima = Vec::with_capacity(k_total);
    for k in 0..k_total {
        let outer = scales[k];
        let inner = inner_radius(scales, k);
        let mut best: Option<f64> = None;
        for x in window_samples(x0, domain, inner, outer, samples_per_window) {
            let q = (f.eval(x)? - fx0).abs() / (x - x0).abs();
            best = Some(best.map_or(q, |b: f64| b.max(q)));
        }
        match best {
            Some(b) => window_maxima.push(b),
            None => {
                return Err(LipschitzError::Schedule(format!(
                    "window {k} (radius {outer}) has no usable sample points around x0 = {x0} in {domain}"
                )))
            }
        }
    }

    let tail = &window_maxima[k_total - k_total.div_ceil(2)..];
    let divergent = tail
        .windows(2)
        .all(|w| w[1] > w[0] && w[1] >= config.divergence_ratio * w[0]);
    let value = if divergent {
        f64::INFINITY
    } else {
        tail.iter().copied().fold(0.0, f64::max)
    };
    Ok(LipEstimate {
        value,
        window_maxima,
        divergent,
        sided,
    })
}

fn validate_scales(scales: &[f64], samples_per_window: u32) -> Result<(), LipschitzError> {
    if scales.len() < 3 {
        return Err(LipschitzError::Schedule(format!(
            "need at least 3 windows, got {}",
            scales.len()
        )));
    }
    if samples_per_window < 4 {
        return Err(LipschitzError::Schedule(format!(
            "samplesPerWindow must be at least 4, got {samples_per_window}"
        )));
    }
    if scales.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
        return Err(LipschitzError::Schedule(
            "window radii must be positive and finite".into(),
        ));
    }
    if scales.windows(2).any(|w| w[1] >= w[0]) {
        return Err(LipschitzError::Schedule(
            "window radii must strictly decrease".into(),
        ));
    }
    Ok(())
}

fn inner_radius(scales: &[f64], k: usize) -> f64 {
    match scales.get(k + 1) {
        Some(next) => *next,
        None => scales[k] * (scales[k] / scales[k - 1]),
    }
}

/// Sample points of one window: `m` evenly spaced distances in
/// `(inner, min(outer, reach)]` on each side of `x0` that has room, clamped
/// into `domain`; points that round onto `x0` are dropped. A window whose
/// annulus lies wholly outside `domain` falls back to the farthest domain
/// point on each side.
pub(crate) fn window_samples(
    x0: f64,
    domain: &Interval,
    inner: f64,
    outer: f64,
    m: u32,
) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * m as usize);
    let sides = [(domain.b() - x0, 1.0), (x0 - domain.a(), -1.0)];
    for (reach, dir) in sides {
        let outer = outer.min(reach);
        if outer <= inner {
            continue;
        }
        for j in 1..=m {
            let d = if j == m {
                outer
            } else {
                outer - (outer - inner) * f64::from(m - j) / f64::from(m)
            };
            let x = (x0 + dir * d).clamp(domain.a(), domain.b());
            if x != x0 {
                out.push(x);
            }
        }
    }
    if out.is_empty() {
        out.extend([domain.b(), domain.a()].into_iter().filter(|&x| x != x0));
    }
    out
}

/// Evenly spaced grid over `domain` with both endpoints included exactly.
pub fn grid(domain: &Interval, count: usize) -> Vec<f64> {
    let n = count.max(2);
    let span = domain.length();
    let last = (n - 1) as f64;
    (0..n)
        .map(|i| {
            if i == n - 1 {
                domain.b()
            } else {
                domain.a() + span * i as f64 / last
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LipschitzProfile {
    pub grid_points: Vec<f64>,
    pub estimates: Vec<LipEstimate>,
    pub schedule: ScaleSchedule,
    pub domain: Interval,
    #[serde(rename = "func")]
    pub func_ref: FuncSpec,
}

pub fn profile(
    f: &Function,
    domain: &Interval,
    grid_count: usize,
    schedule: &ScaleSchedule,
) -> Result<LipschitzProfile, LipschitzError> {
    if grid_count < 2 {
        return Err(LipschitzError::Schedule(format!(
            "gridCount must be at least 2, got {grid_count}"
        )));
    }
    schedule.validate()?;
    let points = grid(domain, grid_count);
    let estimates = points
        .par_iter()
        .map(|&x| {
            estimate_pointwise(f, x, domain, schedule).map_err(|e| LipschitzError::AtGridPoint {
                x,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(LipschitzProfile {
        grid_points: points,
        estimates,
        schedule: *schedule,
        domain: *domain,
        func_ref: f.spec().clone(),
    })
}

impl LipschitzProfile {
    pub fn grid_step(&self) -> f64 {
        self.domain.length() / (self.grid_points.len() - 1) as f64
    }

    pub fn max_value(&self) -> f64 {
        self.estimates.iter().map(|e| e.value).fold(0.0, f64::max)
    }

    /// CSV with header `x,value,divergent,sided,windowMax0,…,windowMax{K-1}`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        let k = self.estimates.first().map_or(0, |e| e.window_maxima.len());
        let mut header = vec![
            "x".to_string(),
            "value".into(),
            "divergent".into(),
            "sided".into(),
        ];
        header.extend((0..k).map(|i| format!("windowMax{i}")));
        w.write_record(&header)?;
        for (x, e) in self.grid_points.iter().zip(&self.estimates) {
            let mut row = vec![
                x.to_string(),
                if e.value.is_infinite() {
                    "inf".into()
                } else {
                    e.value.to_string()
                },
                e.divergent.to_string(),
                e.sided.as_str().to_string(),
            ];
            row.extend(e.window_maxima.iter().map(f64::to_string));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExceptionalPoint {
    pub x: f64,
    pub estimate: LipEstimate,
}

/// Grid points whose estimate exceeds `C·(1 + relTol)` or diverges, in grid order.
pub fn exceptional_points(p: &LipschitzProfile, c: f64) -> Vec<ExceptionalPoint> {
    exceptional_points_with_tol(p, c, DEFAULT_REL_TOL)
}

pub fn exceptional_points_with_tol(
    p: &LipschitzProfile,
    c: f64,
    rel_tol: f64,
) -> Vec<ExceptionalPoint> {
    p.grid_points
        .iter()
        .zip(&p.estimates)
        .filter(|(_, e)| e.exceeds(c, rel_tol))
        .map(|(x, e)| ExceptionalPoint {
            x: *x,
            estimate: e.clone(),
        })
        .collect()
}

/// Largest secant slope over adjacent pairs of an evenly spaced grid; a lower
/// bound on the Lipschitz seminorm on `interval`.
pub fn seminorm_estimate(
    f: &Function,
    interval: &Interval,
    grid_count: usize,
) -> Result<f64, LipschitzError> {
    let points = grid(interval, grid_count);
    seminorm_on_points(f, &points)
}

fn seminorm_on_points(f: &Function, points: &[f64]) -> Result<f64, LipschitzError> {
    let values = points
        .iter()
        .map(|&x| f.eval(x))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(points
        .windows(2)
        .zip(values.windows(2))
        .map(|(x, y)| (y[1] - y[0]).abs() / (x[1] - x[0]))
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EquivalenceReport {
    #[serde(rename = "C")]
    pub c: f64,
    pub rel_tol: f64,
    #[serde(with = "extended_real")]
    pub max_pointwise: f64,
    pub max_pairwise: f64,
    /// (a): every pointwise constant is at most `C`.
    pub pointwise_holds: bool,
    /// (b): every secant slope is at most `C`.
    pub pairwise_holds: bool,
    pub breakpoint_aligned: bool,
    pub maxima_agree: bool,
}

/// Compares the largest pointwise estimate with the largest secant slope on
/// the same grid; the two bounds by `C` must stand or fall together.
pub fn check_equivalence(
    f: &Function,
    interval: &Interval,
    c: f64,
    grid_count: usize,
    schedule: &ScaleSchedule,
) -> Result<EquivalenceReport, LipschitzError> {
    let rel_tol = DEFAULT_REL_TOL;
    let prof = profile(f, interval, grid_count, schedule)?;
    let max_pointwise = prof.max_value();
    let max_pairwise = seminorm_on_points(f, &prof.grid_points)?;
    let bound = c * (1.0 + rel_tol);
    let pointwise_holds = max_pointwise <= bound;
    let pairwise_holds = max_pairwise <= bound;

    let breakpoint_aligned = match f.spec() {
        FuncSpec::PiecewiseLinear { breakpoints, .. } => breakpoints
            .iter()
            .filter(|bp| interval.contains(**bp))
            .all(|bp| {
                prof.grid_points
                    .binary_search_by(|g| g.total_cmp(bp))
                    .is_ok()
            }),
        _ => false,
    };
    let scale = max_pointwise.max(max_pairwise);
    let maxima_agree =
        max_pointwise == max_pairwise || (max_pointwise - max_pairwise).abs() <= rel_tol * scale;

    if pointwise_holds != pairwise_holds || (breakpoint_aligned && !maxima_agree) {
        return Err(LipschitzError::Disagreement {
            c,
            max_pointwise,
            max_pairwise,
        });
    }
    Ok(EquivalenceReport {
        c,
        rel_tol,
        max_pointwise,
        max_pairwise,
        pointwise_holds,
        pairwise_holds,
        breakpoint_aligned,
        maxima_agree,
    })
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct IsolationReport {
    pub checked: usize,
    pub grid_step: f64,
    /// Non-divergent exceptional points with no exceptional neighbour within `2·gridStep`.
    pub violations: Vec<f64>,
    /// Isolated points whose estimate diverges: the exceptional set there may
    /// be thinner than the grid, so isolation is a resolution artefact.
    pub resolution_limited: Vec<f64>,
}

impl IsolationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Every exceptional grid point should have another one within `2·gridStep`.
pub fn no_isolated_check(points: &[ExceptionalPoint], grid_step: f64) -> IsolationReport {
    let mut sorted: Vec<&ExceptionalPoint> = points.iter().collect();
    sorted.sort_by(|p, q| p.x.total_cmp(&q.x));
    let reach = 2.0 * grid_step * (1.0 + DEFAULT_REL_TOL);
    let mut report = IsolationReport {
        checked: sorted.len(),
        grid_step,
        ..Default::default()
    };
    for (i, p) in sorted.iter().enumerate() {
        let near_left = i > 0 && p.x - sorted[i - 1].x <= reach;
        let near_right = i + 1 < sorted.len() && sorted[i + 1].x - p.x <= reach;
        if near_left || near_right {
            continue;
        }
        if p.estimate.divergent {
            report.resolution_limited.push(p.x);
        } else {
            report.violations.push(p.x);
        }
    }
    report
}
