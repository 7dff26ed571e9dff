//! Offline (prophet) and online oracles.
//!
//! All offline quantities come from one deterministic selection function,
//! [`OptSolver`]: among the maximum-value label-feasible s,t-paths it returns
//! the lexicographically smallest sequence of edge ids. `x_e`, the
//! conditional tentative laws and E(OPT) are all sums over realizations of
//! that one function, so they stay mutually consistent.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{CapacityStates, EdgeId, Instance, LabelId, Limits, NodeId};
use crate::numeric::{mean_and_std_error, CompensatedSum, TOLERANCE};
use crate::rng::trial_rng;

/// Offline strategy: the prophet, or the prophet restricted to an edge set
/// with a fixed fallback path.
#[derive(Clone, Debug, PartialEq)]
pub enum OfflineSpec {
    Opt,
    /// Equals OPT whenever OPT lies inside `allowed`, else `fallback`.
    Restricted {
        allowed: BTreeSet<EdgeId>,
        fallback: Vec<EdgeId>,
    },
}

impl OfflineSpec {
    pub fn restricted(
        instance: &Instance,
        allowed: BTreeSet<EdgeId>,
        fallback: Vec<EdgeId>,
    ) -> Result<Self> {
        if !instance.graph.is_st_path(&fallback) {
            return Err(Error::Params("fallback is not an s,t-path".into()));
        }
        if let Some(e) = fallback.iter().find(|e| !allowed.contains(e)) {
            return Err(Error::Params(format!(
                "fallback edge {e} is outside the allowed set"
            )));
        }
        Ok(Self::Restricted { allowed, fallback })
    }
}

/// A selected s,t-path.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathSelection {
    pub edges: Vec<EdgeId>,
    pub value: f64,
    /// Number of selected edges per label (labels that are used only).
    pub label_usage: Vec<(LabelId, u32)>,
}

#[inline]
fn tie_tolerance(target: f64) -> f64 {
    1e-12 * target.abs().max(1.0)
}

/// Reusable longest-path solver over (node, residual capacity) states.
pub struct OptSolver<'a> {
    instance: &'a Instance,
    states: CapacityStates,
    best: Vec<f64>,
    allowed: Option<Vec<bool>>,
    fallback: Vec<EdgeId>,
}

impl<'a> OptSolver<'a> {
    pub fn new(instance: &'a Instance, spec: &OfflineSpec, limits: &Limits) -> Result<Self> {
        let g = &instance.graph;
        let states = CapacityStates::new(g, g.node_count(), limits)?;
        let best = vec![f64::NEG_INFINITY; g.node_count() * states.count()];
        let (allowed, fallback) = match spec {
            OfflineSpec::Opt => (None, Vec::new()),
            OfflineSpec::Restricted { allowed, fallback } => {
                let mut mask = vec![false; g.edge_count()];
                for e in allowed {
                    if e.index() < mask.len() {
                        mask[e.index()] = true;
                    }
                }
                (Some(mask), fallback.clone())
            }
        };
        Ok(Self {
            instance,
            states,
            best,
            allowed,
            fallback,
        })
    }

    /// Selects the offline path for edge values `values` (indexed by edge id),
    /// writing it to `path` and returning its value.
    pub fn solve_into(&mut self, values: &[f64], path: &mut Vec<EdgeId>) -> Result<f64> {
        let value = self.solve_unrestricted(values, path)?;
        if let Some(mask) = &self.allowed {
            if !path.iter().all(|e| mask[e.index()]) {
                path.clear();
                path.extend_from_slice(&self.fallback);
                return Ok(path
                    .iter()
                    .map(|e| values[e.index()])
                    .sum::<CompensatedSum>()
                    .value());
            }
        }
        Ok(value)
    }

    fn solve_unrestricted(&mut self, values: &[f64], path: &mut Vec<EdgeId>) -> Result<f64> {
        let g = &self.instance.graph;
        let s_count = self.states.count();
        let t = g.sink().index();
        for st in 0..s_count {
            self.best[t * s_count + st] = 0.0;
        }
        for u in (0..t).rev() {
            let outs = g.out_edges(NodeId(u));
            for st in 0..s_count {
                let mut best = f64::NEG_INFINITY;
                for &e in outs {
                    if let Some(next) = self.states.take(st, e) {
                        let cand =
                            values[e.index()] + self.best[g.edge(e).dst.index() * s_count + next];
                        if cand > best {
                            best = cand;
                        }
                    }
                }
                self.best[u * s_count + st] = best;
            }
        }
        path.clear();
        let mut cur = g.source();
        let mut st = self.states.initial();
        let total = self.best[cur.index() * s_count + st];
        if total == f64::NEG_INFINITY {
            return Err(Error::Internal("no feasible s,t-path".into()));
        }
        let mut acc = CompensatedSum::new();
        while cur != g.sink() {
            let target = self.best[cur.index() * s_count + st];
            let tol = tie_tolerance(target);
            let step = g.out_edges(cur).iter().find_map(|&e| {
                let next = self.states.take(st, e)?;
                let cand = values[e.index()] + self.best[g.edge(e).dst.index() * s_count + next];
                (cand >= target - tol).then_some((e, next))
            });
            let (e, next) =
                step.ok_or_else(|| Error::Internal("OPT reconstruction failed".into()))?;
            path.push(e);
            acc.add(values[e.index()]);
            cur = g.edge(e).dst;
            st = next;
        }
        Ok(acc.value())
    }

    pub fn solve(&mut self, values: &[f64]) -> Result<PathSelection> {
        let mut edges = Vec::new();
        let value = self.solve_into(values, &mut edges)?;
        Ok(selection(self.instance, edges, value))
    }
}

fn selection(instance: &Instance, edges: Vec<EdgeId>, value: f64) -> PathSelection {
    let g = &instance.graph;
    let mut usage = vec![0u32; g.labels().len()];
    for e in &edges {
        for l in &g.edge(*e).labels {
            usage[l.index()] += 1;
        }
    }
    let label_usage = usage
        .into_iter()
        .enumerate()
        .filter(|(_, c)| *c > 0)
        .map(|(l, c)| (LabelId(l), c))
        .collect();
    PathSelection {
        edges,
        value,
        label_usage,
    }
}

/// The offline path for one realization.
pub fn opt_path(
    instance: &Instance,
    values: &[f64],
    spec: &OfflineSpec,
    limits: &Limits,
) -> Result<PathSelection> {
    OptSolver::new(instance, spec, limits)?.solve(values)
}

/// How an expectation is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Evaluation {
    Exact,
    MonteCarlo { trials: u64, seed: u64 },
}

/// An exact value, or a Monte Carlo mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Estimate {
    pub fn exact(mean: f64) -> Self {
        Self {
            mean,
            std_error: None,
            trials: None,
            seed: None,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.std_error.is_none()
    }
}

/// E(value of the offline path).
pub fn expected_opt(
    instance: &Instance,
    spec: &OfflineSpec,
    mode: Evaluation,
    limits: &Limits,
) -> Result<Estimate> {
    match mode {
        Evaluation::Exact => {
            let mut solver = OptSolver::new(instance, spec, limits)?;
            let mut acc = CompensatedSum::new();
            let mut values = Vec::new();
            let mut path = Vec::new();
            let mut failure = None;
            instance.for_each_joint(None, limits, |outcomes, mass| {
                if failure.is_some() {
                    return;
                }
                instance.edge_values_into(outcomes, &mut values);
                match solver.solve_into(&values, &mut path) {
                    Ok(v) => acc.add(mass * v),
                    Err(e) => failure = Some(e),
                }
            })?;
            if let Some(e) = failure {
                return Err(e);
            }
            Ok(Estimate::exact(acc.value()))
        }
        Evaluation::MonteCarlo { trials, seed } => {
            if trials == 0 {
                return Err(Error::Params("trials must be at least 1".into()));
            }
            OptSolver::new(instance, spec, limits)?;
            let samples = (0..trials)
                .into_par_iter()
                .map_init(
                    || {
                        (
                            OptSolver::new(instance, spec, limits).expect("checked above"),
                            Vec::new(),
                        )
                    },
                    |(solver, path), j| {
                        let mut rng = trial_rng(seed, j);
                        let r = instance.sample_realization(&mut rng);
                        solver.solve_into(&r.values, path)
                    },
                )
                .collect::<Result<Vec<f64>>>()?;
            let (mean, se) = mean_and_std_error(&samples);
            Ok(Estimate {
                mean,
                std_error: Some(se),
                trials: Some(trials),
                seed: Some(seed),
            })
        }
    }
}

/// Probability that the offline strategy takes each edge.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeProbabilities {
    pub x: Vec<f64>,
    pub spec: OfflineSpec,
}

impl EdgeProbabilities {
    pub fn get(&self, edge: EdgeId) -> f64 {
        self.x[edge.index()]
    }
}

/// Probability that the offline strategy leaves `node` along each of its
/// outgoing edges, conditional on the node's own outcome.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChoiceDistribution {
    pub node: NodeId,
    pub outcome: usize,
    pub edges: Vec<(EdgeId, f64)>,
    /// Mass on realizations where the offline path does not leave `node`.
    pub none: f64,
}

/// Conditional tentative laws for every (node, outcome) pair.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiceLaw {
    /// node -> outcome -> out-edge slot -> probability.
    probs: Vec<Vec<Vec<f64>>>,
}

impl ChoiceLaw {
    /// Per-slot probabilities, aligned with the node's outgoing edges.
    pub fn slots(&self, node: NodeId, outcome: usize) -> &[f64] {
        &self.probs[node.index()][outcome]
    }

    pub fn none(&self, node: NodeId, outcome: usize) -> f64 {
        (1.0 - self.slots(node, outcome).iter().sum::<f64>()).max(0.0)
    }

    pub fn distribution(
        &self,
        instance: &Instance,
        node: NodeId,
        outcome: usize,
    ) -> ChoiceDistribution {
        let outs = instance.graph.out_edges(node);
        ChoiceDistribution {
            node,
            outcome,
            edges: outs
                .iter()
                .copied()
                .zip(self.slots(node, outcome).iter().copied())
                .collect(),
            none: self.none(node, outcome),
        }
    }
}

/// Everything the policies need about one offline strategy, from a single
/// pass over all realizations.
#[derive(Clone, Debug)]
pub struct OfflineSummary {
    pub expected: f64,
    pub x: EdgeProbabilities,
    pub law: ChoiceLaw,
}

pub fn offline_summary(
    instance: &Instance,
    spec: &OfflineSpec,
    limits: &Limits,
) -> Result<OfflineSummary> {
    let g = &instance.graph;
    let mut solver = OptSolver::new(instance, spec, limits)?;
    let mut expected = CompensatedSum::new();
    let mut x = vec![CompensatedSum::new(); g.edge_count()];
    let mut joint: Vec<Vec<Vec<CompensatedSum>>> = g
        .nodes()
        .map(|u| {
            vec![
                vec![CompensatedSum::new(); g.out_edges(u).len()];
                instance.outcomes.outcomes(u).len()
            ]
        })
        .collect();
    let mut values = Vec::new();
    let mut path = Vec::new();
    let mut failure = None;
    instance.for_each_joint(None, limits, |outcomes, mass| {
        if failure.is_some() {
            return;
        }
        instance.edge_values_into(outcomes, &mut values);
        match solver.solve_into(&values, &mut path) {
            Ok(v) => {
                expected.add(mass * v);
                for &e in path.iter() {
                    x[e.index()].add(mass);
                    let src = g.edge(e).src;
                    joint[src.index()][outcomes[src.index()]][g.slot(e)].add(mass);
                }
            }
            Err(e) => failure = Some(e),
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let probs = g
        .nodes()
        .map(|u| {
            joint[u.index()]
                .iter()
                .enumerate()
                .map(|(o, row)| {
                    let p = instance.outcomes.outcome(u, o).p;
                    row.iter().map(|c| c.value() / p).collect()
                })
                .collect()
        })
        .collect();
    Ok(OfflineSummary {
        expected: expected.value(),
        x: EdgeProbabilities {
            x: x.iter().map(CompensatedSum::value).collect(),
            spec: spec.clone(),
        },
        law: ChoiceLaw { probs },
    })
}

/// x_e for every edge.
pub fn edge_probabilities(
    instance: &Instance,
    spec: &OfflineSpec,
    limits: &Limits,
) -> Result<EdgeProbabilities> {
    Ok(offline_summary(instance, spec, limits)?.x)
}

/// Conditional law of the offline strategy's edge out of `node`, given the
/// node's outcome, marginalizing every other node by enumeration.
pub fn conditional_choice_distribution(
    instance: &Instance,
    spec: &OfflineSpec,
    node: NodeId,
    outcome: usize,
    limits: &Limits,
) -> Result<ChoiceDistribution> {
    check_outcome(instance, node, outcome)?;
    let g = &instance.graph;
    let outs = g.out_edges(node);
    let mut solver = OptSolver::new(instance, spec, limits)?;
    let mut per_slot = vec![CompensatedSum::new(); outs.len()];
    let mut none = CompensatedSum::new();
    let mut values = Vec::new();
    let mut path = Vec::new();
    let mut failure = None;
    instance.for_each_joint(Some((node, outcome)), limits, |outcomes, mass| {
        if failure.is_some() {
            return;
        }
        instance.edge_values_into(outcomes, &mut values);
        if let Err(e) = solver.solve_into(&values, &mut path) {
            failure = Some(e);
            return;
        }
        match path.iter().find(|e| g.edge(**e).src == node) {
            Some(&e) => per_slot[g.slot(e)].add(mass),
            None => none.add(mass),
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(ChoiceDistribution {
        node,
        outcome,
        edges: outs
            .iter()
            .copied()
            .zip(per_slot.iter().map(CompensatedSum::value))
            .collect(),
        none: none.value(),
    })
}

/// Monte Carlo fallback of [`conditional_choice_distribution`]: the other
/// nodes are sampled `trials` times from `seed`.
pub fn conditional_choice_distribution_mc(
    instance: &Instance,
    spec: &OfflineSpec,
    node: NodeId,
    outcome: usize,
    trials: u64,
    seed: u64,
    limits: &Limits,
) -> Result<ChoiceDistribution> {
    check_outcome(instance, node, outcome)?;
    if trials == 0 {
        return Err(Error::Params("trials must be at least 1".into()));
    }
    let g = &instance.graph;
    let outs = g.out_edges(node);
    let mut solver = OptSolver::new(instance, spec, limits)?;
    let mut counts = vec![0u64; outs.len()];
    let mut none = 0u64;
    let mut path = Vec::new();
    for j in 0..trials {
        let mut rng = trial_rng(seed, j);
        let mut choice: Vec<usize> = g
            .nodes()
            .map(|u| instance.sample_outcome(u, &mut rng))
            .collect();
        choice[node.index()] = outcome;
        let r = instance.realization(choice);
        solver.solve_into(&r.values, &mut path)?;
        match path.iter().find(|e| g.edge(**e).src == node) {
            Some(&e) => counts[g.slot(e)] += 1,
            None => none += 1,
        }
    }
    let n = trials as f64;
    Ok(ChoiceDistribution {
        node,
        outcome,
        edges: outs
            .iter()
            .copied()
            .zip(counts.iter().map(|&c| c as f64 / n))
            .collect(),
        none: none as f64 / n,
    })
}

fn check_outcome(instance: &Instance, node: NodeId, outcome: usize) -> Result<()> {
    if node.index() >= instance.graph.node_count()
        || outcome >= instance.outcomes.outcomes(node).len()
    {
        return Err(Error::Params(format!(
            "node {} has no outcome {outcome}",
            node.index()
        )));
    }
    Ok(())
}

/// Value of the best online policy, by backward induction over
/// (node, residual capacity): after observing a node's outcome the policy
/// takes the feasible edge maximizing its value plus the continuation value.
pub fn optimal_online_value(instance: &Instance, limits: &Limits) -> Result<f64> {
    let g = &instance.graph;
    let states = CapacityStates::new(g, g.node_count(), limits)?;
    let s_count = states.count();
    let work = (g.edge_count() as u128)
        .saturating_mul(s_count as u128)
        .saturating_mul(instance.outcomes.counts().into_iter().max().unwrap_or(1) as u128);
    if work > limits.enumeration_cap.saturating_mul(10) {
        return Err(Error::StateSpaceTooLarge {
            states: work,
            cap: limits.enumeration_cap.saturating_mul(10),
        });
    }
    let mut value = vec![f64::NEG_INFINITY; g.node_count() * s_count];
    let t = g.sink().index();
    for st in 0..s_count {
        value[t * s_count + st] = 0.0;
    }
    for u in (0..t).rev() {
        let node = NodeId(u);
        let outs = g.out_edges(node);
        for st in 0..s_count {
            let mut acc = CompensatedSum::new();
            let mut feasible = true;
            for o in instance.outcomes.outcomes(node) {
                let best = outs
                    .iter()
                    .enumerate()
                    .filter_map(|(slot, &e)| {
                        let next = states.take(st, e)?;
                        Some(o.values[slot] + value[g.edge(e).dst.index() * s_count + next])
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                if best == f64::NEG_INFINITY {
                    feasible = false;
                    break;
                }
                acc.add(o.p * best);
            }
            value[u * s_count + st] = if feasible {
                acc.value()
            } else {
                f64::NEG_INFINITY
            };
        }
    }
    let v = value[g.source().index() * s_count + states.initial()];
    if v == f64::NEG_INFINITY {
        return Err(Error::Internal("no feasible online policy".into()));
    }
    Ok(v)
}

/// Σ x_e over `cut`; equals 1 for every cut crossed exactly once by each
/// s,t-path.
pub fn cut_mass(x: &EdgeProbabilities, cut: &[EdgeId]) -> f64 {
    cut.iter()
        .map(|e| x.get(*e))
        .sum::<CompensatedSum>()
        .value()
}

/// Whether two probability-like numbers agree within the global tolerance.
pub fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOLERANCE
}
