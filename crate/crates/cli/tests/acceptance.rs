//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the report is always printed.

use std::panic::{self, AssertUnwindSafe};
use std::process::Command;
use std::time::Instant;

use pointlip::counterexamples::{nonremovability_demo, DemoConfig};
use pointlip::lipschitz::{grid, profile};
use pointlip::witness::BisectionStep;
use pointlip::{
    bisect_chain, build_tree, check_equivalence, estimate_at_scales, estimate_pointwise,
    exact_pointwise_lipschitz_pl, find_seed, no_isolated_check, seminorm_estimate, verify_tree,
    CantorSpec, EstimatorConfig, ExceptionalPoint, FuncSpec, Function, Interval, LipEstimate,
    ScaleSchedule, Sided, TreeParams, VerificationReport, WitnessDocument, WitnessTree,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// tolerances pinned by the acceptance criteria
const ORACLE_REL_TOL: f64 = 1e-6;
const SEMINORM_REL_TOL: f64 = 1e-9;
const NESTED_REL_TOL: f64 = 1e-3;
const CANTOR_WINDOW_REL_TOL: f64 = 1e-6;
const STEP_SOUNDNESS_TOL: f64 = 1e-9;

const CORPUS_SIZE: usize = 100;
const CORPUS_SEED: u64 = 0x5EED_0001;
const MAX_SEGMENTS: usize = 20;
const LATTICE: f64 = 1.0 / 16.0;

const CANTOR_C: f64 = 10.0;
const CANTOR_PARAMS: TreeParams = TreeParams {
    depth: 8,
    search_depth: 6,
    resolution_depth: 12,
};

/// Piecewise-linear corpus member: breakpoints on a 1/16 lattice, segment
/// lengths of 1..=8 lattice steps, slopes uniform in [-10, 10] (about one
/// segment in ten flat).
struct Pl {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl Pl {
    fn spec(&self) -> FuncSpec {
        FuncSpec::piecewise_linear(self.xs.clone(), self.ys.clone())
    }

    fn domain(&self) -> Interval {
        Interval::new(self.xs[0], *self.xs.last().unwrap()).unwrap()
    }

    fn slopes(&self) -> Vec<f64> {
        self.xs
            .windows(2)
            .zip(self.ys.windows(2))
            .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
            .collect()
    }

    fn max_abs_slope(&self) -> f64 {
        self.slopes().iter().map(|s| s.abs()).fold(0.0, f64::max)
    }

    fn min_segment(&self) -> f64 {
        self.xs
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    fn lattice_steps(&self) -> usize {
        (self.domain().length() / LATTICE).round() as usize
    }
}

fn corpus() -> Vec<Pl> {
    let mut rng = ChaCha8Rng::seed_from_u64(CORPUS_SEED);
    (0..CORPUS_SIZE)
        .map(|_| {
            let segments = rng.gen_range(1..=MAX_SEGMENTS);
            let mut xs = vec![rng.gen_range(-16i32..=16) as f64 * LATTICE];
            let mut ys = vec![rng.gen_range(-5.0..5.0)];
            for _ in 0..segments {
                let len = rng.gen_range(1u32..=8) as f64 * LATTICE;
                let slope = if rng.gen_bool(0.1) {
                    0.0
                } else {
                    rng.gen_range(-10.0..=10.0)
                };
                let (x, y) = (*xs.last().unwrap(), *ys.last().unwrap());
                xs.push(x + len);
                ys.push(y + slope * len);
            }
            Pl { xs, ys }
        })
        .collect()
}

fn rel_close(got: f64, want: f64, tol: f64) -> bool {
    if want == 0.0 {
        got.abs() <= 1e-12
    } else {
        (got - want).abs() <= tol * want.abs()
    }
}

fn cantor() -> Function {
    Function::new(FuncSpec::cantor(1.0 / 3.0, 40)).unwrap()
}

fn unit() -> Interval {
    Interval::new(0.0, 1.0).unwrap()
}

fn cantor_tree() -> WitnessTree {
    build_tree(&cantor(), &unit(), CANTOR_C, &CANTOR_PARAMS).unwrap()
}

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn criterion_1_pl_oracle() -> Outcome {
    let start = Instant::now();
    let mut checked = 0usize;
    for (n, pl) in corpus().iter().enumerate() {
        let f = Function::new(pl.spec()).map_err(|e| e.to_string())?;
        let d = pl.domain();
        let sched = ScaleSchedule::new(0.45 * pl.min_segment(), 0.5, 6, 4).unwrap();
        ensure!(
            sched.finest() < 0.5 * pl.min_segment(),
            "function {n}: finest window too wide"
        );
        let mids: Vec<f64> = pl.xs.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        for &x in pl.xs.iter().chain(&mids) {
            let want = exact_pointwise_lipschitz_pl(&pl.spec(), x).map_err(|e| e.to_string())?;
            let got = estimate_pointwise(&f, x, &d, &sched)
                .map_err(|e| e.to_string())?
                .value;
            ensure!(
                rel_close(got, want, ORACLE_REL_TOL),
                "function {n}, x = {x}: estimate {got}, oracle {want}"
            );
            checked += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 10.0, "took {secs:.2} s (target < 10 s)");
    Ok(format!("{checked} points over {CORPUS_SIZE} functions agree within {ORACLE_REL_TOL:e} ({secs:.2} s)"))
}

fn criterion_2_seminorm_equivalence() -> Outcome {
    let mut runs = 0usize;
    for (n, pl) in corpus().iter().enumerate() {
        let f = Function::new(pl.spec()).map_err(|e| e.to_string())?;
        let d = pl.domain();
        let count = pl.lattice_steps() + 1;
        let sched = ScaleSchedule::new(0.45 * LATTICE, 0.5, 6, 4).unwrap();
        let m = pl.max_abs_slope();
        let prof = profile(&f, &d, count, &sched).map_err(|e| e.to_string())?;
        let semi = seminorm_estimate(&f, &d, count).map_err(|e| e.to_string())?;
        ensure!(
            rel_close(prof.max_value(), m, SEMINORM_REL_TOL),
            "function {n}: max profile {} vs max slope {m}",
            prof.max_value()
        );
        ensure!(
            rel_close(semi, m, SEMINORM_REL_TOL),
            "function {n}: seminorm {semi} vs max slope {m}"
        );
        for c in [0.9 * m, m, 1.1 * m] {
            let r = check_equivalence(&f, &d, c, count, &sched)
                .map_err(|e| format!("function {n}, C = {c}: {e}"))?;
            ensure!(
                r.breakpoint_aligned && r.maxima_agree,
                "function {n}, C = {c}: grid not aligned or maxima differ"
            );
            ensure!(
                r.pointwise_holds == r.pairwise_holds,
                "function {n}, C = {c}: biconditional fails"
            );
            if m > 0.0 {
                ensure!(
                    r.pointwise_holds == (c >= m),
                    "function {n}, C = {c}: wrong verdict {}",
                    r.pointwise_holds
                );
            }
            runs += 1;
        }
    }
    Ok(format!(
        "{runs} equivalence checks, maxima agree within {SEMINORM_REL_TOL:e}"
    ))
}

fn criterion_3_no_isolated_points() -> Outcome {
    let mut nonempty = 0usize;
    for (n, pl) in corpus().iter().enumerate() {
        let spec = pl.spec();
        let d = pl.domain();
        let points = grid(&d, pl.lattice_steps() + 1);
        let values = points
            .iter()
            .map(|&x| exact_pointwise_lipschitz_pl(&spec, x))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        let m = pl.max_abs_slope();
        for frac in [0.0, 0.25, 0.5, 0.75, 0.95] {
            let c = frac * m;
            let exceptional: Vec<ExceptionalPoint> = points
                .iter()
                .zip(&values)
                .filter(|(_, v)| **v > c)
                .map(|(x, v)| ExceptionalPoint {
                    x: *x,
                    estimate: LipEstimate::exact(*v, Sided::TwoSided),
                })
                .collect();
            if !exceptional.is_empty() {
                nonempty += 1;
            }
            let report = no_isolated_check(&exceptional, LATTICE);
            ensure!(
                report.passed(),
                "function {n}, C = {c}: isolated points {:?}",
                report.violations
            );
        }
    }
    Ok(format!(
        "{} exceptional sets ({nonempty} non-empty), zero isolated points",
        5 * CORPUS_SIZE
    ))
}

fn criterion_4_cantor_tree() -> Outcome {
    let start = Instant::now();
    let t = build_tree(&cantor(), &unit(), CANTOR_C, &CANTOR_PARAMS).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let report = verify_tree(&t);
    ensure!(
        report.valid,
        "{} violations, first {:?}",
        report.violations.len(),
        report.violations.first()
    );
    let leaves = t.leaves();
    ensure!(leaves.len() == 256, "{} leaves", leaves.len());
    ensure!(
        leaves
            .windows(2)
            .all(|w| w[0].1.interval().b() < w[1].1.interval().a()),
        "leaves overlap"
    );
    ensure!(t.c_prime > CANTOR_C, "C' = {} not above C", t.c_prime);
    let mut min_slope = f64::INFINITY;
    t.root.walk(&mut String::new(), &mut |_, n| {
        min_slope = min_slope.min(n.steep.slope)
    });
    ensure!(
        min_slope > t.c_prime,
        "node slope {min_slope} not above C' = {}",
        t.c_prime
    );
    let bound = t.root.interval().length() / 256.0;
    ensure!(
        leaves.iter().all(|(_, l)| l.interval().length() <= bound),
        "leaf longer than seed/2^8"
    );
    ensure!(secs < 30.0, "took {secs:.2} s (target < 30 s)");
    Ok(format!(
        "256 disjoint leaves, min node slope {min_slope} > C' = {} > 10 ({secs:.2} s)",
        t.c_prime
    ))
}

fn criterion_5_nested_lemma() -> Outcome {
    let t = cantor_tree();
    let f = cantor();
    let config = EstimatorConfig::default();
    let mut worst = f64::INFINITY;
    for (addr, leaf) in t.leaves() {
        let scales: Vec<f64> = t
            .branch(&addr)
            .unwrap()
            .iter()
            .map(|n| n.interval().length())
            .collect();
        let e = estimate_at_scales(&f, leaf.interval().midpoint(), &unit(), &scales, 4, &config)
            .map_err(|e| format!("branch {addr}: {e}"))?;
        ensure!(
            e.value >= t.c_prime * (1.0 - NESTED_REL_TOL),
            "branch {addr}: {} < C' = {}",
            e.value,
            t.c_prime
        );
        worst = worst.min(e.value);
    }
    Ok(format!(
        "256 branches, smallest estimate {worst} >= C'(1 - {NESTED_REL_TOL:e}) with C' = {}",
        t.c_prime
    ))
}

fn criterion_6_cantor_divergence() -> Outcome {
    let sched = ScaleSchedule::new(1.0 / 3.0, 1.0 / 3.0, 12, 4).unwrap();
    let e = estimate_pointwise(&cantor(), 0.0, &unit(), &sched).map_err(|e| e.to_string())?;
    ensure!(
        e.window_maxima.len() == 12,
        "{} windows",
        e.window_maxima.len()
    );
    for (k, w) in e.window_maxima.iter().enumerate() {
        let want = 1.5f64.powi(k as i32 + 1);
        ensure!(
            rel_close(*w, want, CANTOR_WINDOW_REL_TOL),
            "window {}: {w} vs (3/2)^{} = {want}",
            k + 1,
            k + 1
        );
    }
    ensure!(
        e.divergent && e.value.is_infinite(),
        "not flagged divergent"
    );
    Ok(format!(
        "12 windows match (3/2)^n within {CANTOR_WINDOW_REL_TOL:e}, divergent"
    ))
}

fn criterion_7_nonremovability() -> Outcome {
    let r = nonremovability_demo(
        &CantorSpec::middle_thirds(40),
        0.0,
        6,
        &DemoConfig::default(),
    )
    .map_err(|e| e.to_string())?;
    ensure!(r.rise == 1.0, "f(1) - f(0) = {}", r.rise);
    ensure!(
        r.flatness.max_quotient == 0.0,
        "max gap quotient {}",
        r.flatness.max_quotient
    );
    ensure!(
        r.nonconstant && r.flatness.flat && r.tree_verified && r.passed,
        "clauses {} {} {}",
        r.nonconstant,
        r.flatness.flat,
        r.tree_verified
    );
    Ok(format!(
        "rise 1, {} gaps exactly flat, {} verified leaves",
        r.flatness.gaps_checked, r.leaves
    ))
}

/// Runs the binary; returns its exit code and standard error.
fn pointlip(args: &[&std::ffi::OsStr]) -> Result<(Option<i32>, String), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_pointlip"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    Ok((
        out.status.code(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    ))
}

fn read_report(path: &std::path::Path) -> Result<VerificationReport, String> {
    let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

/// Moves the left endpoint of some right child a quarter of the way back
/// into its left sibling. The stored slope is updated and the node stays steep, contained,
/// short enough, and no branch minimum changes, so overlap is the only fault.
fn widen_right_child(doc: &mut WitnessDocument, f: &Function) -> Option<String> {
    let cert = doc.certificate.clone()?;
    for i in 0..doc.nodes.len() {
        let addr = doc.nodes[i].addr.clone();
        if !addr.ends_with('1') || addr.len() as u32 >= doc.depth {
            continue;
        }
        let parent_addr = &addr[..addr.len() - 1];
        let sibling = doc
            .nodes
            .iter()
            .find(|n| n.addr == format!("{parent_addr}0"))?;
        let parent = doc.nodes.iter().find(|n| n.addr == parent_addr)?;
        let a = sibling.b - 0.25 * (sibling.b - sibling.a);
        let b = doc.nodes[i].b;
        let widened = Interval::new(a, b).ok()?;
        let slope = f.secant_slope(&widened).ok()?;
        let below_min = cert
            .addresses
            .iter()
            .zip(&cert.branch_slope_minima)
            .filter(|(leaf, _)| leaf.starts_with(&addr))
            .map(|(_, m)| *m)
            .fold(f64::INFINITY, f64::min);
        let fits = widened.length() <= 0.5 * (parent.b - parent.a);
        if fits && slope > doc.c_prime * (1.0 + 1e-6) && slope >= below_min {
            doc.nodes[i].a = a;
            doc.nodes[i].slope = slope;
            return Some(addr);
        }
    }
    None
}

fn criterion_8_round_trip() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cert = dir.path().join("cert.json");
    let report = dir.path().join("report.json");
    let func = FuncSpec::cantor(1.0 / 3.0, 40).to_json();
    let os = |s: &'static str| std::ffi::OsStr::new(s);
    let certify = [
        os("certify"),
        os("--func"),
        func.as_ref(),
        os("--C"),
        os("10"),
        os("--depth"),
        os("8"),
        os("--search-depth"),
        os("6"),
        os("--resolution-depth"),
        os("12"),
        os("--out"),
        cert.as_os_str(),
    ];
    let (code, err) = pointlip(&certify)?;
    ensure!(code == Some(0), "certify exited with {code:?}: {err}");
    let (code, err) = pointlip(&[
        os("verify"),
        cert.as_os_str(),
        os("--out"),
        report.as_os_str(),
    ])?;
    ensure!(
        code == Some(0),
        "verify of a fresh certificate exited with {code:?}: {err}"
    );
    ensure!(
        read_report(&report)?.valid,
        "fresh certificate reported invalid"
    );

    let text = std::fs::read_to_string(&cert).map_err(|e| e.to_string())?;
    let mut doc = WitnessDocument::from_json(&text).map_err(|e| e.to_string())?;
    let addr = widen_right_child(&mut doc, &cantor()).ok_or("no node could be widened cleanly")?;
    let bad = dir.path().join("corrupt.json");
    std::fs::write(&bad, doc.to_json_pretty()).map_err(|e| e.to_string())?;
    let (code, err) = pointlip(&[
        os("verify"),
        bad.as_os_str(),
        os("--out"),
        report.as_os_str(),
    ])?;
    ensure!(
        code == Some(2),
        "verify of the corrupted certificate exited with {code:?}: {err}"
    );
    let r = read_report(&report)?;
    ensure!(
        r.violations.len() == 1,
        "expected one violation, got {:?}",
        r.violations
    );
    let v = &r.violations[0];
    ensure!(
        format!("{:?}", v.kind) == "NotDisjoint" && v.addr == addr,
        "got {:?} at {:?}, corrupted {addr:?}",
        v.kind,
        v.addr
    );
    Ok(format!("certify/verify exit 0; widened node {addr:?} gives exit 2 with one NotDisjoint at {addr:?}"))
}

fn criterion_9_step_soundness() -> Outcome {
    let mut steps: Vec<BisectionStep> = Vec::new();
    let mut chains = 0usize;
    let mut run = |f: &Function, seed: &Interval, c_prime: f64, depth: u32| -> Result<(), String> {
        let chain = bisect_chain(f, seed, c_prime, depth).map_err(|e| e.to_string())?;
        steps.extend(chain.steps);
        chains += 1;
        Ok(())
    };
    let f = cantor();
    let seed = find_seed(&f, &unit(), CANTOR_C, 12).map_err(|e| e.to_string())?;
    run(&f, &seed.interval, seed.c_prime, 20)?;
    let t = cantor_tree();
    for (_, leaf) in t.leaves() {
        run(&f, &leaf.interval(), t.c_prime, 10)?;
    }
    run(
        &Function::new(FuncSpec::affine(2.0, 0.0)).unwrap(),
        &unit(),
        1.5,
        10,
    )?;
    for pl in corpus() {
        let g = Function::new(pl.spec()).unwrap();
        let m = pl.max_abs_slope();
        if m == 0.0 {
            continue;
        }
        let s = find_seed(&g, &pl.domain(), 0.5 * m, 12).map_err(|e| e.to_string())?;
        run(&g, &s.interval, s.c_prime, 30)?;
    }
    let bad = steps
        .iter()
        .filter(|s| !s.is_sound(STEP_SOUNDNESS_TOL))
        .count();
    ensure!(bad == 0, "{bad} unsound steps out of {}", steps.len());
    Ok(format!(
        "{} steps over {chains} chains, zero exceptions",
        steps.len()
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("PL-oracle equivalence", criterion_1_pl_oracle),
        ("seminorm equivalence", criterion_2_seminorm_equivalence),
        (
            "no isolated exceptional points",
            criterion_3_no_isolated_points,
        ),
        ("Cantor witness tree", criterion_4_cantor_tree),
        ("nested-interval lower bound", criterion_5_nested_lemma),
        ("divergence at Cantor points", criterion_6_cantor_divergence),
        ("non-removability demo", criterion_7_nonremovability),
        ("certificate round trip", criterion_8_round_trip),
        ("bisection step soundness", criterion_9_step_soundness),
    ];
    // quiet the default hook; panics are reported as FAIL lines
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS  {}. {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {}. {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
