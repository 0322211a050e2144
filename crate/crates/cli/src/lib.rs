//! Command-line front end for `pointlip`.
//!
//! Every command writes its data to `--out` (or standard output) and its
//! diagnostics to standard error. Exit codes: 0 success, 1 usage or
//! configuration error, 2 verification failure, 3 construction failure.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use pointlip::counterexamples::{nonremovability_demo, CounterexampleError, DemoConfig};
use pointlip::functions::sampled_from_csv_path;
use pointlip::lipschitz::{exceptional_points, profile, IsolationReport};
use pointlip::witness::verify_document;
use pointlip::{
    build_tree, check_equivalence, no_isolated_check, CantorSpec, EquivalenceReport, FuncSpec,
    Function, Interval, LipschitzError, ScaleSchedule, TreeParams, WitnessDocument, WitnessError,
};
use serde::Serialize;

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_VERIFY: u8 = 2;
pub const EXIT_CONSTRUCT: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "pointlip",
    version,
    about = "Pointwise Lipschitz constants and Cantor witness certificates"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the pointwise Lipschitz constant on a grid.
    Profile(ProfileArgs),
    /// Build and certify a witness tree inside the C-exceptional set.
    Certify(CertifyArgs),
    /// Run the non-removability demo for a Cantor staircase.
    Cantor(CantorArgs),
    /// Re-verify a certificate document from scratch.
    Verify(VerifyArgs),
    /// Check the seminorm equivalence and the no-isolated-points property.
    Check(CheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct FuncArgs {
    /// Function: inline JSON, a JSON file, or a two-column x,y CSV file.
    #[arg(long)]
    pub func: String,
    /// Interval `a,b`; defaults to the function's own bounded domain.
    #[arg(long, allow_hyphen_values = true)]
    pub domain: Option<String>,
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    #[arg(long, default_value_t = 0.125)]
    pub h0: f64,
    #[arg(long, default_value_t = 0.5)]
    pub shrink: f64,
    #[arg(long, default_value_t = 8)]
    pub windows: u32,
    #[arg(long, default_value_t = 4)]
    pub samples: u32,
}

#[derive(Debug, Args)]
pub struct TreeArgs {
    #[arg(long, default_value_t = 8)]
    pub depth: u32,
    #[arg(long, default_value_t = 6)]
    pub search_depth: u32,
    #[arg(long, default_value_t = 12)]
    pub resolution_depth: u32,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    #[command(flatten)]
    pub func: FuncArgs,
    #[arg(long, default_value_t = 101)]
    pub grid: usize,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub func: FuncArgs,
    /// Exceptional-set level.
    #[arg(long = "C", alias = "c")]
    pub c: f64,
    #[command(flatten)]
    pub tree: TreeArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CantorArgs {
    /// CantorStaircase spec as JSON or a file; overrides --ratio/--digit-depth.
    #[arg(long)]
    pub func: Option<String>,
    #[arg(long, default_value_t = 1.0 / 3.0)]
    pub ratio: f64,
    #[arg(long, default_value_t = 40)]
    pub digit_depth: u32,
    #[arg(long = "C", alias = "c", default_value_t = 0.0)]
    pub c: f64,
    #[arg(long, default_value_t = 6)]
    pub depth: u32,
    #[arg(long, default_value_t = 6)]
    pub search_depth: u32,
    #[arg(long, default_value_t = 12)]
    pub resolution_depth: u32,
    #[arg(long, default_value_t = 5)]
    pub flatness_level: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Certificate document written by `certify`.
    pub certificate: PathBuf,
    /// Where to write the verification report (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub func: FuncArgs,
    #[arg(long = "C", alias = "c")]
    pub c: f64,
    #[arg(long, default_value_t = 101)]
    pub grid: usize,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

/// Runs one command. `Err` means a usage or configuration problem; the other
/// outcomes are reported through the returned exit code.
pub fn run(cli: &Cli) -> anyhow::Result<u8> {
    match &cli.command {
        Command::Profile(a) => run_profile(a),
        Command::Certify(a) => run_certify(a),
        Command::Cantor(a) => run_cantor(a),
        Command::Verify(a) => run_verify(a),
        Command::Check(a) => run_check(a),
    }
}

/// Inline JSON when the text starts with `{`, otherwise a path: `.csv`
/// files become `Sampled`, anything else is read as JSON.
pub fn load_func(source: &str) -> anyhow::Result<FuncSpec> {
    let trimmed = source.trim_start();
    if trimmed.starts_with('{') {
        return FuncSpec::from_json(trimmed).context("invalid inline function JSON");
    }
    let path = Path::new(source);
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        return sampled_from_csv_path(path).with_context(|| format!("reading {}", path.display()));
    }
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    FuncSpec::from_json(&text)
        .with_context(|| format!("invalid function JSON in {}", path.display()))
}

pub fn parse_domain(s: &str) -> anyhow::Result<Interval> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| anyhow!("domain must look like a,b (got {s:?})"))?;
    let a: f64 = a
        .trim()
        .parse()
        .with_context(|| format!("bad domain start {a:?}"))?;
    let b: f64 = b
        .trim()
        .parse()
        .with_context(|| format!("bad domain end {b:?}"))?;
    Ok(Interval::new(a, b)?)
}

fn resolve(args: &FuncArgs) -> anyhow::Result<(Function, Interval)> {
    let f = Function::new(load_func(&args.func)?)?;
    let domain = match &args.domain {
        Some(d) => parse_domain(d)?,
        None => f.bounded_domain().ok_or_else(|| {
            anyhow!("the function is defined on the whole line; pass --domain a,b")
        })?,
    };
    if !f.covers(&domain) {
        let (lo, hi) = f.domain();
        bail!("domain {domain} is not inside the function's domain [{lo}, {hi}]");
    }
    Ok((f, domain))
}

fn schedule(a: &ScheduleArgs) -> anyhow::Result<ScaleSchedule> {
    Ok(ScaleSchedule::new(a.h0, a.shrink, a.windows, a.samples)?)
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn write_json<T: Serialize>(out: Option<&Path>, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_output(out, text.as_bytes())
}

fn run_profile(a: &ProfileArgs) -> anyhow::Result<u8> {
    let (f, domain) = resolve(&a.func)?;
    let sched = schedule(&a.schedule)?;
    if a.grid < 2 {
        bail!("--grid must be at least 2");
    }
    let prof = profile(&f, &domain, a.grid, &sched)?;
    match a.format {
        Format::Json => write_json(a.out.as_deref(), &prof)?,
        Format::Csv => {
            let mut buf = Vec::new();
            prof.write_csv(&mut buf)?;
            write_output(a.out.as_deref(), &buf)?;
        }
    }
    Ok(EXIT_OK)
}

/// Written instead of a certificate when the construction cannot finish.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FailureDocument {
    pub version: u32,
    pub status: &'static str,
    pub kind: &'static str,
    pub message: String,
    pub explanation: &'static str,
    pub func: FuncSpec,
    #[serde(rename = "C")]
    pub c: f64,
}

fn explanation(e: &WitnessError) -> &'static str {
    match e {
        WitnessError::NoSeedFound { .. } => {
            "No scanned dyadic subinterval is steeper than C. The C-exceptional set may be empty, \
             or its features are finer than the resolution depth."
        }
        WitnessError::ResolutionExhausted { .. } => {
            "The finite dyadic search found no disjoint steep pair. This is a limit of the search \
             (search depth too small or threshold too close to the true steepness), not a counterexample."
        }
        WitnessError::NumericalBreakdown { .. } => {
            "Floating-point cancellation made the steepness test unreliable at this scale."
        }
        _ => "Construction failed.",
    }
}

fn is_construction_failure(e: &WitnessError) -> bool {
    matches!(
        e,
        WitnessError::NoSeedFound { .. }
            | WitnessError::ResolutionExhausted { .. }
            | WitnessError::NumericalBreakdown { .. }
    )
}

fn report_construction_failure(
    out: Option<&Path>,
    e: &WitnessError,
    func: &FuncSpec,
    c: f64,
) -> anyhow::Result<u8> {
    let doc = FailureDocument {
        version: pointlip::witness::DOCUMENT_VERSION,
        status: "failed",
        kind: e.kind(),
        message: e.to_string(),
        explanation: explanation(e),
        func: func.clone(),
        c,
    };
    eprintln!("construction failed: {e}");
    write_json(out, &doc)?;
    Ok(EXIT_CONSTRUCT)
}

fn run_certify(a: &CertifyArgs) -> anyhow::Result<u8> {
    let (f, domain) = resolve(&a.func)?;
    let params = TreeParams {
        depth: a.tree.depth,
        search_depth: a.tree.search_depth,
        resolution_depth: a.tree.resolution_depth,
    };
    let tree = match build_tree(&f, &domain, a.c, &params) {
        Ok(t) => t,
        Err(e) if is_construction_failure(&e) => {
            return report_construction_failure(a.out.as_deref(), &e, f.spec(), a.c);
        }
        Err(e) => return Err(e.into()),
    };
    match WitnessDocument::certified(&tree) {
        Ok(doc) => {
            write_json(a.out.as_deref(), &doc)?;
            eprintln!(
                "certified {} leaves at C' = {}",
                1u64 << tree.depth,
                tree.c_prime
            );
            Ok(EXIT_OK)
        }
        Err(e) => {
            eprintln!("built tree failed its own verification: {e}");
            Ok(EXIT_VERIFY)
        }
    }
}

fn run_cantor(a: &CantorArgs) -> anyhow::Result<u8> {
    let spec = match &a.func {
        Some(src) => match load_func(src)? {
            FuncSpec::CantorStaircase(s) => s,
            other => bail!(
                "the cantor command needs a CantorStaircase, got {}",
                pointlip::functions::kind_name(&other)
            ),
        },
        None => CantorSpec::new(a.ratio, a.digit_depth)?,
    };
    let config = DemoConfig {
        flatness_level: a.flatness_level,
        search_depth: a.search_depth,
        resolution_depth: a.resolution_depth,
    };
    match nonremovability_demo(&spec, a.c, a.depth, &config) {
        Ok(report) => {
            write_json(a.out.as_deref(), &report)?;
            if report.passed {
                eprintln!("{}", report.conclusion);
                Ok(EXIT_OK)
            } else {
                eprintln!("demo failed: {}", report.conclusion);
                Ok(EXIT_VERIFY)
            }
        }
        Err(CounterexampleError::Witness(e)) if is_construction_failure(&e) => {
            report_construction_failure(a.out.as_deref(), &e, &FuncSpec::CantorStaircase(spec), a.c)
        }
        Err(e) => Err(e.into()),
    }
}

fn run_verify(a: &VerifyArgs) -> anyhow::Result<u8> {
    let text = fs::read_to_string(&a.certificate)
        .with_context(|| format!("reading {}", a.certificate.display()))?;
    let report = match WitnessDocument::from_json(&text) {
        Ok(doc) => verify_document(&doc),
        Err(e) => pointlip::VerificationReport {
            valid: false,
            nodes_checked: 0,
            violations: vec![pointlip::Violation {
                addr: String::new(),
                kind: pointlip::ViolationKind::MalformedDocument,
                detail: e.to_string(),
            }],
        },
    };
    write_json(a.out.as_deref(), &report)?;
    if report.valid {
        eprintln!("valid: {} nodes checked", report.nodes_checked);
        Ok(EXIT_OK)
    } else {
        eprintln!("invalid: {} violation(s)", report.violations.len());
        for v in &report.violations {
            eprintln!("  {:?} at {:?}: {}", v.kind, v.addr, v.detail);
        }
        Ok(EXIT_VERIFY)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CheckReport {
    pub equivalence: Option<EquivalenceReport>,
    /// Set when the two sides of the equivalence disagree.
    pub disagreement: Option<String>,
    pub exceptional_count: usize,
    pub isolation: IsolationReport,
    pub passed: bool,
}

fn run_check(a: &CheckArgs) -> anyhow::Result<u8> {
    let (f, domain) = resolve(&a.func)?;
    let sched = schedule(&a.schedule)?;
    if a.grid < 2 {
        bail!("--grid must be at least 2");
    }
    let (equivalence, disagreement) = match check_equivalence(&f, &domain, a.c, a.grid, &sched) {
        Ok(r) => (Some(r), None),
        Err(e @ LipschitzError::Disagreement { .. }) => (None, Some(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    let prof = profile(&f, &domain, a.grid, &sched)?;
    let exceptional = exceptional_points(&prof, a.c);
    let isolation = no_isolated_check(&exceptional, prof.grid_step());
    let passed = disagreement.is_none() && isolation.passed();
    let report = CheckReport {
        equivalence,
        disagreement,
        exceptional_count: exceptional.len(),
        isolation,
        passed,
    };
    write_json(a.out.as_deref(), &report)?;
    if passed {
        Ok(EXIT_OK)
    } else {
        if let Some(d) = &report.disagreement {
            eprintln!("equivalence check failed: {d}");
        }
        if !report.isolation.passed() {
            eprintln!(
                "isolated exceptional points: {:?}",
                report.isolation.violations
            );
        }
        Ok(EXIT_VERIFY)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domains() {
        let d = parse_domain("-1.5, 2").unwrap();
        assert_eq!((d.a(), d.b()), (-1.5, 2.0));
        assert!(parse_domain("1").is_err());
        assert!(parse_domain("2,1").is_err());
        assert!(parse_domain("a,1").is_err());
    }

    #[test]
    fn inline_function() {
        let f = load_func(r#"  {"kind":"Affine","slope":2,"intercept":1}"#).unwrap();
        assert_eq!(f, FuncSpec::affine(2.0, 1.0));
        assert!(load_func(r#"{"kind":"CantorStaircase","ratio":0.5,"digitDepth":4}"#).is_err());
        assert!(load_func("/no/such/file.json").is_err());
    }

    #[test]
    fn capital_c_flag() {
        let cli =
            Cli::try_parse_from(["pointlip", "certify", "--func", "{}", "--C", "2.5"]).unwrap();
        match cli.command {
            Command::Certify(a) => {
                assert_eq!(a.c, 2.5);
                assert_eq!(
                    (a.tree.depth, a.tree.search_depth, a.tree.resolution_depth),
                    (8, 6, 12)
                );
            }
            other => panic!("parsed as {other:?}"),
        }
    }
}
