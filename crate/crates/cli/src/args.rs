use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use prophet_dag::simulator::PolicyKind;

pub const ENUM_CAP_ENV: &str = "PROPHET_ENUM_CAP";

const SIMULATE_FIELDS: &str = "\
Report fields:
  policy                  policy name
  mode                    exact, or monte_carlo with trials and seed
  cover_size              number of cover paths k
  d                       largest number of labels on one edge
  alg                     E(ALG): mean, std_error, trials, seed (the last three
                          are null in exact mode)
  alg_without_connectors  E(ALG) ignoring connector edges of contracted
                          instances (general policy, exact mode)
  opt                     E(OPT), evaluated in the same mode as alg
  online_opt              optimal online value (with --online)
  ratio                   E(ALG) / E(OPT)
  bound                   guaranteed ratio for this policy and instance
  bound_name              1/2, 1/(d+2), 1/(k(d+2)) or 1/(k+1)
  bound_satisfied         ratio >= bound (up to 1e-9, or 4 standard errors)
  wall_clock_seconds      time spent on the report
  feasibility             how p(e) was obtained (labeled policies)";

/// Sequential path selection on stochastic DAGs.
#[derive(Debug, Parser)]
#[command(name = "prophet-dag", version, about)]
pub struct Cli {
    /// Emit structured JSON instead of tables.
    #[arg(long, global = true)]
    pub json: bool,

    /// Cap on the number of enumerated realizations and DP states
    /// [default: $PROPHET_ENUM_CAP, else 10000000].
    #[arg(long, global = true, value_name = "N")]
    pub enum_cap: Option<u128>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check an instance file against every model assumption.
    Validate { file: PathBuf },
    /// Print the width (minimum number of covering s,t-paths).
    Width { file: PathBuf },
    /// Print a minimum path cover.
    Cover {
        file: PathBuf,
        #[command(flatten)]
        cover: CoverArgs,
    },
    /// Expected value of the prophet E(OPT).
    Opt {
        file: PathBuf,
        #[command(flatten)]
        eval: EvalArgs,
    },
    /// Probability that OPT takes each edge, or with --node the conditional
    /// choice law at one node.
    Xprobs {
        file: PathBuf,
        /// Node name for a conditional law.
        #[arg(long, requires = "outcome")]
        node: Option<String>,
        /// Outcome index at --node.
        #[arg(long, requires = "node")]
        outcome: Option<usize>,
    },
    /// Value of the optimal online policy, by backward induction.
    OnlineOpt { file: PathBuf },
    /// Evaluate a policy and compare it with the prophet.
    #[command(after_long_help = SIMULATE_FIELDS)]
    Simulate {
        file: PathBuf,
        #[command(flatten)]
        policy: PolicyArgs,
        #[command(flatten)]
        eval: EvalArgs,
        /// Also compute the optimal online value.
        #[arg(long)]
        online: bool,
    },
    /// Write a generated instance file.
    Gen(gen::GenArgs),
    /// Run a policy once and print every decision.
    Trace {
        file: PathBuf,
        #[command(flatten)]
        policy: PolicyArgs,
        /// Seed of the run; a fresh one is drawn and reported when absent.
        #[arg(long)]
        seed: Option<u64>,
    },
}

use crate::gen;

#[derive(Debug, Args)]
pub struct CoverArgs {
    /// Use a cover stored in the instance metadata under this name.
    #[arg(long = "cover", value_name = "NAME")]
    pub name: Option<String>,
    /// Shuffle the matching search; any seed yields a minimum cover.
    #[arg(long, value_name = "SEED", conflicts_with = "name")]
    pub cover_seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Exact enumeration (default).
    #[arg(long, conflicts_with = "mc")]
    pub exact: bool,
    /// Monte Carlo estimation.
    #[arg(long)]
    pub mc: bool,
    /// Monte Carlo trials.
    #[arg(long, default_value_t = 100_000, requires = "mc")]
    pub trials: u64,
    /// Master seed; a fresh one is drawn and reported when absent.
    #[arg(long, requires = "mc")]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct PolicyArgs {
    /// Policy to run.
    #[arg(long, value_enum)]
    pub policy: PolicyArg,
    #[command(flatten)]
    pub cover: CoverArgs,
    /// Estimate p(e) with this many Monte Carlo particles instead of exactly.
    #[arg(long, value_name = "N")]
    pub feasibility_particles: Option<u64>,
    /// Seed for --feasibility-particles; a fresh one is drawn when absent.
    #[arg(long, requires = "feasibility_particles")]
    pub feasibility_seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum PolicyArg {
    Width1,
    Width1Labeled,
    General,
    Disjoint,
}

impl From<PolicyArg> for PolicyKind {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Width1 => PolicyKind::Width1,
            PolicyArg::Width1Labeled => PolicyKind::Width1Labeled,
            PolicyArg::General => PolicyKind::General,
            PolicyArg::Disjoint => PolicyKind::Disjoint,
        }
    }
}
