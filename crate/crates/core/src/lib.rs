//! Sequential path selection on stochastic DAGs.
//!
//! A decision maker walks from `s` to `t` in a DAG whose edge values are
//! revealed node by node. This crate provides the prophet (offline) and
//! optimal online oracles, minimum path covers, and four online policies with
//! provable competitive ratios, plus generators for the standard hard
//! instances.
//!
//! ```
//! use prophet_dag::{instances, simulator, Evaluation, Limits};
//!
//! let inst = instances::classic_two_candidate();
//! let policy = simulator::PreparedPolicy::prepare(&inst, simulator::PolicyKind::Width1, &Default::default()).unwrap();
//! let report = simulator::competitive_report(&inst, &policy, Evaluation::Exact, false, &Limits::default()).unwrap();
//! assert!((report.alg.mean - 0.75).abs() < 1e-9);
//! assert!((report.opt.mean - 1.5).abs() < 1e-9);
//! ```

pub mod cover;
pub mod error;
pub mod graph;
pub mod instances;
pub mod numeric;
pub mod oracle;
pub mod policies;
pub mod rng;
pub mod schema;
pub mod simulator;

pub use cover::{
    max_antichain_bruteforce, min_path_cover, min_path_cover_seeded, width, PathCover,
};
pub use error::{Error, Result};
pub use graph::{
    validate_instance, validate_with_limits, EdgeId, Instance, InstanceBuilder, InstanceGraph,
    LabelId, Limits, NodeId, Outcome, OutcomeTable, Realization, ValidationReport, Violation,
};
pub use oracle::{
    conditional_choice_distribution, edge_probabilities, expected_opt, opt_path,
    optimal_online_value, ChoiceDistribution, EdgeProbabilities, Estimate, Evaluation, OfflineSpec,
    PathSelection,
};
pub use policies::{
    alpha_schedule, AlphaSchedule, FeasibilityMode, FeasibilityProbs, FocalPath, FocalPolicy,
    Trajectory,
};
pub use schema::{InstanceFile, Metadata};
pub use simulator::{
    competitive_report, monte_carlo_estimate, PolicyKind, PolicyOptions, PolicyRunReport,
    PreparedPolicy,
};
