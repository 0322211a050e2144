//! Pointwise Lipschitz constants of real functions on intervals, detection of
//! `C`-exceptional sets, and Cantor-type witness trees certifying that a
//! non-empty exceptional set contains a perfect subset.
//!
//! * [`functions`]: serializable function catalog, generalized Cantor staircase,
//!   exact oracle for piecewise-linear functions.
//! * [`lipschitz`]: shrinking-window estimator, grid profiles, exceptional points,
//!   seminorm comparison.
//! * [`witness`]: steep-interval splitting, witness trees, certificates.
//! * [`counterexamples`]: staircase gap geometry and non-removability reports.

pub mod counterexamples;
pub mod functions;
pub mod interval;
pub mod lipschitz;
pub mod witness;

pub use counterexamples::{
    flatness_check, gap_intervals, nonremovability_demo, CounterexampleError, DemoConfig,
    FlatnessReport, GapSample, NonremovabilityReport,
};
pub use functions::{
    cantor_value, evaluate, exact_pointwise_lipschitz_pl, CantorSpec, FuncSpec, Function,
    FunctionError,
};
pub use interval::{Interval, IntervalError};
pub use lipschitz::{
    check_equivalence, estimate_at_scales, estimate_pointwise, exceptional_points,
    no_isolated_check, profile, seminorm_estimate, EquivalenceReport, EstimatorConfig,
    ExceptionalPoint, IsolationReport, LipEstimate, LipschitzError, LipschitzProfile,
    ScaleSchedule, Sided,
};
pub use witness::{
    bisect_chain, build_tree, certificate, extend_tree, find_seed, split_steep, verify_tree,
    BisectionChain, CantorCertificate, SteepInterval, TreeParams, VerificationReport, Violation,
    ViolationKind, WitnessDocument, WitnessError, WitnessNode, WitnessTree,
};
