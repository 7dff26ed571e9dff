//! Exact and Monte Carlo evaluation of the policies, and competitive reports.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cover::{min_path_cover, PathCover};
use crate::error::{Error, Result};
use crate::graph::{EdgeId, Instance, Limits};
use crate::numeric::{mean_and_std_error, CompensatedSum, TOLERANCE};
use crate::oracle::{expected_opt, optimal_online_value, Estimate, Evaluation, OfflineSpec};
use crate::policies::{
    build_contracted_instance, build_disjoint_plan, ContractedInstance, DisjointPlan,
    FeasibilityMode, FocalPolicy, Trajectory,
};
use crate::rng::trial_rng;

/// The four online policies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    /// Unlabeled width-1 rule, 1/2-competitive.
    Width1,
    /// Labeled width-1 rule, 1/(d+2)-competitive.
    Width1Labeled,
    /// Random cover path plus contraction, 1/(k(d+2))-competitive.
    General,
    /// Best strand of a disjoint cover, 1/(k+1)-competitive.
    Disjoint,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 4] = [
        Self::Width1,
        Self::Width1Labeled,
        Self::General,
        Self::Disjoint,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Width1 => "width1",
            Self::Width1Labeled => "width1-labeled",
            Self::General => "general",
            Self::Disjoint => "disjoint",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Params(format!("unknown policy {s:?}")))
    }
}

/// Options for preparing a policy.
#[derive(Clone, Debug)]
pub struct PolicyOptions {
    /// Cover to use; a minimum cover is computed when absent.
    pub cover: Option<PathCover>,
    pub feasibility: FeasibilityMode,
    pub limits: Limits,
}

impl Default for PolicyOptions {
    fn default() -> Self {
        Self {
            cover: None,
            feasibility: FeasibilityMode::Exact,
            limits: Limits::default(),
        }
    }
}

/// A policy with all its offline tables precomputed.
#[derive(Clone, Debug)]
pub enum PreparedPolicy {
    Width1(FocalPolicy),
    Width1Labeled(FocalPolicy),
    General {
        cover: PathCover,
        /// Max labels per edge of the original graph.
        d: usize,
        components: Vec<(ContractedInstance, FocalPolicy)>,
    },
    Disjoint {
        cover: PathCover,
        plan: Box<DisjointPlan>,
    },
}

/// Exact value of a policy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExactValue {
    pub value: f64,
    /// Value ignoring connector edges of contracted instances.
    pub without_connectors: f64,
}

impl PreparedPolicy {
    pub fn prepare(instance: &Instance, kind: PolicyKind, options: &PolicyOptions) -> Result<Self> {
        let g = &instance.graph;
        let limits = &options.limits;
        let cover = match &options.cover {
            Some(c) => c.clone(),
            None => min_path_cover(g)?,
        };
        let single_path = |cover: &PathCover| -> Result<Vec<EdgeId>> {
            if cover.k() != 1 {
                return Err(Error::Policy(format!(
                    "{kind} needs a width-1 graph, cover has {} paths",
                    cover.k()
                )));
            }
            Ok(cover.paths[0].clone())
        };
        Ok(match kind {
            PolicyKind::Width1 => {
                Self::Width1(FocalPolicy::width1(instance, single_path(&cover)?, limits)?)
            }
            PolicyKind::Width1Labeled => Self::Width1Labeled(FocalPolicy::width1_labeled(
                instance,
                single_path(&cover)?,
                options.feasibility,
                limits,
            )?),
            PolicyKind::General => {
                let components = (0..cover.k())
                    .map(|i| {
                        let c = build_contracted_instance(instance, &cover, i)?;
                        let p = FocalPolicy::width1_labeled(
                            &c.instance,
                            c.focal.clone(),
                            options.feasibility,
                            limits,
                        )?;
                        Ok((c, p))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Self::General {
                    cover,
                    d: g.max_labels(),
                    components,
                }
            }
            PolicyKind::Disjoint => {
                let plan = build_disjoint_plan(instance, &cover, limits)?;
                Self::Disjoint {
                    cover,
                    plan: Box::new(plan),
                }
            }
        })
    }

    pub fn kind(&self) -> PolicyKind {
        match self {
            Self::Width1(_) => PolicyKind::Width1,
            Self::Width1Labeled(_) => PolicyKind::Width1Labeled,
            Self::General { .. } => PolicyKind::General,
            Self::Disjoint { .. } => PolicyKind::Disjoint,
        }
    }

    /// Guaranteed competitive ratio for this policy on `instance`.
    pub fn bound(&self, instance: &Instance) -> f64 {
        let d = instance.graph.max_labels() as f64;
        match self {
            Self::Width1(_) => 0.5,
            Self::Width1Labeled(_) => 1.0 / (d + 2.0),
            Self::General { cover, .. } => 1.0 / (cover.k() as f64 * (d + 2.0)),
            Self::Disjoint { cover, .. } => 1.0 / (cover.k() as f64 + 1.0),
        }
    }

    pub fn bound_name(&self) -> &'static str {
        match self {
            Self::Width1(_) => "1/2",
            Self::Width1Labeled(_) => "1/(d+2)",
            Self::General { .. } => "1/(k(d+2))",
            Self::Disjoint { .. } => "1/(k+1)",
        }
    }

    /// E(ALG) by exact forward dynamic programming.
    pub fn exact_value(&self) -> Result<ExactValue> {
        match self {
            Self::Width1(p) | Self::Width1Labeled(p) => {
                let v = p.evaluate()?.value;
                Ok(ExactValue {
                    value: v,
                    without_connectors: v,
                })
            }
            Self::Disjoint { plan, .. } => {
                let v = plan.policy.evaluate()?.value;
                Ok(ExactValue {
                    value: v,
                    without_connectors: v,
                })
            }
            Self::General { components, .. } => {
                let k = components.len() as f64;
                let mut with = CompensatedSum::new();
                let mut without = CompensatedSum::new();
                for (c, p) in components {
                    let eval = p.evaluate()?;
                    without.add(eval.value / k);
                    with.add(eval.value / k);
                    // connector nodes lie off the cover path, so their values
                    // are independent of everything the policy has seen
                    for art in &c.artificial {
                        with.add(eval.taken[art.edge.index()] * art.connector_mean / k);
                    }
                }
                Ok(ExactValue {
                    value: with.value(),
                    without_connectors: without.value(),
                })
            }
        }
    }

    /// One run against the realization `outcomes` of `instance`.
    pub fn run_with<R: Rng + ?Sized>(
        &self,
        instance: &Instance,
        outcomes: &[usize],
        rng: &mut R,
    ) -> Result<Trajectory> {
        match self {
            Self::Width1(p) | Self::Width1Labeled(p) => p.run_with(outcomes, rng),
            Self::Disjoint { plan, .. } => plan.policy.run_with(outcomes, rng),
            Self::General { components, .. } => {
                let i = rng.gen_range(0..components.len());
                let (c, p) = &components[i];
                let local: Vec<usize> = c.node_map.iter().map(|u| outcomes[u.index()]).collect();
                let sub = p.run_with(&local, rng)?;
                let mut edges = Vec::new();
                let mut value = CompensatedSum::new();
                let mut connector = CompensatedSum::new();
                let mut decisions = sub.decisions;
                for d in decisions.iter_mut() {
                    let expanded = c.expand(d.action);
                    for (j, e) in expanded.iter().enumerate() {
                        let src = instance.graph.edge(*e).src;
                        let w = instance.value_at(*e, outcomes[src.index()]);
                        value.add(w);
                        if j > 0 {
                            connector.add(w);
                        }
                    }
                    edges.extend(expanded);
                    d.node = c.node_map[d.node.index()];
                    d.action = c.edge_map[d.action.index()];
                    d.tentative = d.tentative.map(|e| c.edge_map[e.index()]);
                }
                Ok(Trajectory {
                    edges,
                    value: value.value(),
                    connector_value: connector.value(),
                    component: Some(i),
                    decisions,
                })
            }
        }
    }

    /// Samples a realization of `instance` and runs the policy on it.
    pub fn run<R: Rng + ?Sized>(&self, instance: &Instance, rng: &mut R) -> Result<Trajectory> {
        let r = instance.sample_realization(rng);
        self.run_with(instance, &r.outcomes, rng)
    }
}

/// Monte Carlo estimate of E(ALG); trial `j` draws from stream `j` of
/// `seed`, so results do not depend on thread scheduling.
pub fn monte_carlo_estimate(
    instance: &Instance,
    policy: &PreparedPolicy,
    trials: u64,
    seed: u64,
) -> Result<Estimate> {
    if trials == 0 {
        return Err(Error::Params("trials must be at least 1".into()));
    }
    let values = (0..trials)
        .into_par_iter()
        .map(|j| {
            policy
                .run(instance, &mut trial_rng(seed, j))
                .map(|t| t.value)
        })
        .collect::<Result<Vec<f64>>>()?;
    let (mean, se) = mean_and_std_error(&values);
    Ok(Estimate {
        mean,
        std_error: Some(se),
        trials: Some(trials),
        seed: Some(seed),
    })
}

/// E(ALG) against E(OPT), with the applicable guarantee.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PolicyRunReport {
    pub policy: PolicyKind,
    pub mode: Evaluation,
    pub cover_size: usize,
    pub d: usize,
    pub alg: Estimate,
    /// E(ALG) ignoring connector values (general policy, exact mode only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alg_without_connectors: Option<f64>,
    pub opt: Estimate,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub online_opt: Option<f64>,
    pub ratio: f64,
    pub bound: f64,
    pub bound_name: String,
    pub bound_satisfied: bool,
    pub wall_clock_seconds: f64,
}

impl PolicyRunReport {
    /// The report with the wall-clock field zeroed, for comparisons.
    pub fn without_timing(&self) -> Self {
        Self {
            wall_clock_seconds: 0.0,
            ..self.clone()
        }
    }
}

/// Evaluates `policy` in `mode`, compares with E(OPT) and, when requested,
/// with the optimal online value.
pub fn competitive_report(
    instance: &Instance,
    policy: &PreparedPolicy,
    mode: Evaluation,
    include_online: bool,
    limits: &Limits,
) -> Result<PolicyRunReport> {
    let start = Instant::now();
    let (alg, without) = match mode {
        Evaluation::Exact => {
            let v = policy.exact_value()?;
            (Estimate::exact(v.value), Some(v.without_connectors))
        }
        Evaluation::MonteCarlo { trials, seed } => {
            (monte_carlo_estimate(instance, policy, trials, seed)?, None)
        }
    };
    let opt = expected_opt(instance, &OfflineSpec::Opt, mode, limits)?;
    let online_opt = if include_online {
        Some(optimal_online_value(instance, limits)?)
    } else {
        None
    };
    let ratio = if opt.mean > 0.0 {
        alg.mean / opt.mean
    } else {
        1.0
    };
    let bound = policy.bound(instance);
    // the guarantee is on the value without connectors
    let guaranteed = without.unwrap_or(alg.mean);
    let bound_satisfied = match (alg.std_error, opt.std_error) {
        (None, None) => guaranteed >= bound * opt.mean - TOLERANCE,
        (a, o) => alg.mean + 4.0 * a.unwrap_or(0.0) >= bound * (opt.mean - 4.0 * o.unwrap_or(0.0)),
    };
    let cover_size = match policy {
        PreparedPolicy::General { cover, .. } | PreparedPolicy::Disjoint { cover, .. } => cover.k(),
        _ => 1,
    };
    Ok(PolicyRunReport {
        policy: policy.kind(),
        mode,
        cover_size,
        d: instance.graph.max_labels(),
        alg,
        alg_without_connectors: without.filter(|w| (w - alg.mean).abs() > 0.0),
        opt,
        online_opt,
        ratio,
        bound,
        bound_name: policy.bound_name().to_string(),
        bound_satisfied,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    })
}
