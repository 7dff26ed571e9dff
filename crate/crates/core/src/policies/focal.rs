//! The focal-path policies and their exact evaluation.
//!
//! One forward pass over (focal position, residual capacity) distributions
//! yields the exact value, the probability of taking each edge, the
//! probability of taking each edge as the accepted tentative edge, visit
//! probabilities and the feasibility probabilities p(e). Acceptance coins are
//! folded in analytically.

use rand::Rng;
use serde::Serialize;

use super::{alpha_schedule, AlphaSchedule, Decision, FocalPath, Trajectory};
use crate::error::{Error, Result};
use crate::graph::{CapacityStates, EdgeId, Instance, Limits, NodeId};
use crate::numeric::{CompensatedSum, TOLERANCE};
use crate::oracle::{offline_summary, ChoiceLaw, EdgeProbabilities, OfflineSpec, OfflineSummary};
use crate::rng::{trial_rng, TrialRng};

/// How p(e) is obtained for the labeled policy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum FeasibilityMode {
    Exact,
    /// Particle simulation of the partially built policy.
    MonteCarlo {
        particles: u64,
        seed: u64,
    },
}

/// p(e), the probability that the labeled policy visits `src(e)` with spare
/// capacity for every label of `e`, and the resulting acceptance
/// probabilities `1/((d+2) p(e))`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FeasibilityProbs {
    pub mode: FeasibilityMode,
    pub d: usize,
    /// By edge id; `None` for edges that do not leave a focal node.
    pub p: Vec<Option<f64>>,
    /// Standard errors of the particle estimates.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<Vec<Option<f64>>>,
    pub acceptance: Vec<f64>,
}

/// How tentative edges are accepted.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum FocalRule {
    /// Unlabeled (modified) width-1 rule: one probability per focal position.
    Alpha(AlphaSchedule),
    /// Labeled rule: per-edge probabilities, applied only when feasible.
    Labeled(FeasibilityProbs),
}

/// Exact quantities of a focal policy.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FocalEvaluation {
    pub value: f64,
    /// Probability of visiting each focal position.
    pub visit: Vec<f64>,
    /// By edge id: probability that the policy takes the edge.
    pub taken: Vec<f64>,
    /// By edge id: probability that the edge is tentative and accepted.
    pub tentative_taken: Vec<f64>,
    /// By edge id: p(e) as seen by the forward pass.
    pub feasibility: Vec<Option<f64>>,
}

enum Acceptance<'a> {
    Alpha(&'a [f64]),
    PerEdge(&'a [f64]),
    /// Derive p(e) position by position and use `1/((d+2) p(e))`.
    Derive(usize),
}

/// A focal-path policy bound to its instance.
#[derive(Clone, Debug)]
pub struct FocalPolicy {
    instance: Instance,
    focal: FocalPath,
    summary: OfflineSummary,
    q: f64,
    rule: FocalRule,
    states: CapacityStates,
}

impl FocalPolicy {
    /// The 1/2-competitive policy for unlabeled width-1 graphs.
    pub fn width1(instance: &Instance, focal: Vec<EdgeId>, limits: &Limits) -> Result<Self> {
        let focal = FocalPath::new(&instance.graph, focal)?;
        focal.require_cover(&instance.graph)?;
        Self::modified(instance, focal, OfflineSpec::Opt, 0.0, limits)
    }

    /// The width-1 rule against an arbitrary offline strategy that equals the
    /// focal path with probability at least `q`. The focal path need not
    /// visit every node, but the strategy must stay on its nodes.
    pub fn modified(
        instance: &Instance,
        focal: FocalPath,
        spec: OfflineSpec,
        q: f64,
        limits: &Limits,
    ) -> Result<Self> {
        let g = &instance.graph;
        if !g.is_unlabeled() {
            return Err(Error::Policy(
                "the width-1 rule needs an unlabeled instance".into(),
            ));
        }
        let summary = offline_summary(instance, &spec, limits)?;
        let schedule = alpha_schedule(g, &focal, &summary.x, q)?;
        let states = CapacityStates::new(g, focal.len(), limits)?;
        Ok(Self {
            instance: instance.clone(),
            focal,
            summary,
            q,
            rule: FocalRule::Alpha(schedule),
            states,
        })
    }

    /// The 1/(d+2)-competitive policy for labeled width-1 graphs. `focal`
    /// must be unlabeled and visit every node.
    pub fn width1_labeled(
        instance: &Instance,
        focal: Vec<EdgeId>,
        mode: FeasibilityMode,
        limits: &Limits,
    ) -> Result<Self> {
        let g = &instance.graph;
        let focal = FocalPath::new(g, focal)?;
        focal.require_cover(g)?;
        focal.require_unlabeled(g)?;
        let summary = offline_summary(instance, &OfflineSpec::Opt, limits)?;
        let states = CapacityStates::new(g, focal.len(), limits)?;
        let mut policy = Self {
            instance: instance.clone(),
            focal,
            summary,
            q: 0.0,
            rule: FocalRule::Labeled(FeasibilityProbs {
                mode,
                d: g.max_labels(),
                p: Vec::new(),
                std_error: None,
                acceptance: Vec::new(),
            }),
            states,
        };
        let probs = match mode {
            FeasibilityMode::Exact => {
                let eval = policy.forward(Acceptance::Derive(g.max_labels()))?;
                let acceptance = acceptance_from(&eval.feasibility, g.max_labels());
                FeasibilityProbs {
                    mode,
                    d: g.max_labels(),
                    p: eval.feasibility,
                    std_error: None,
                    acceptance,
                }
            }
            FeasibilityMode::MonteCarlo { particles, seed } => {
                policy.particle_feasibility(particles, seed)?
            }
        };
        policy.rule = FocalRule::Labeled(probs);
        Ok(policy)
    }

    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    pub fn focal(&self) -> &FocalPath {
        &self.focal
    }

    pub fn rule(&self) -> &FocalRule {
        &self.rule
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// Offline probabilities the policy mimics.
    pub fn x(&self) -> &EdgeProbabilities {
        &self.summary.x
    }

    pub fn law(&self) -> &ChoiceLaw {
        &self.summary.law
    }

    /// Expected value of the offline strategy being mimicked.
    pub fn expected_offline(&self) -> f64 {
        self.summary.expected
    }

    /// Exact evaluation; no coin is ever enumerated.
    pub fn evaluate(&self) -> Result<FocalEvaluation> {
        match &self.rule {
            FocalRule::Alpha(s) => self.forward(Acceptance::Alpha(&s.alpha)),
            FocalRule::Labeled(p) => self.forward(Acceptance::PerEdge(&p.acceptance)),
        }
    }

    fn forward(&self, rule: Acceptance<'_>) -> Result<FocalEvaluation> {
        let inst = &self.instance;
        let g = &inst.graph;
        let n = self.focal.len();
        let sc = self.states.count();
        let mut mass = vec![0.0f64; n * sc];
        mass[self.states.initial()] = 1.0;
        let mut value = CompensatedSum::new();
        let mut visit = vec![0.0; n];
        let mut taken = vec![CompensatedSum::new(); g.edge_count()];
        let mut tentative_taken = vec![CompensatedSum::new(); g.edge_count()];
        let mut feasibility = vec![None; g.edge_count()];
        let mut derived = vec![0.0; g.edge_count()];

        for i in 0..n {
            let row = &mass[i * sc..(i + 1) * sc];
            visit[i] = row.iter().copied().sum::<CompensatedSum>().value();
            if i + 1 == n {
                break;
            }
            let u = self.focal.nodes()[i];
            let path_edge = self.focal.edges()[i];
            let outs = g.out_edges(u);
            for &e in outs {
                let p: CompensatedSum = row
                    .iter()
                    .enumerate()
                    .filter(|(st, _)| self.states.can_take(*st, e))
                    .map(|(_, m)| *m)
                    .sum();
                feasibility[e.index()] = Some(p.value());
            }
            if let Acceptance::Derive(d) = rule {
                for &e in outs {
                    let p = feasibility[e.index()].unwrap_or(0.0);
                    derived[e.index()] = checked_acceptance(p, d, e)?;
                }
            }
            let accept = |e: EdgeId| match rule {
                Acceptance::Alpha(alpha) => alpha[i],
                Acceptance::PerEdge(a) => a[e.index()],
                Acceptance::Derive(_) => derived[e.index()],
            };
            let labeled = !matches!(rule, Acceptance::Alpha(_));

            for st in 0..sc {
                let m = mass[i * sc + st];
                if m <= 0.0 {
                    continue;
                }
                let stay_state = self.states.take(st, path_edge).ok_or_else(|| {
                    Error::FocalPath(format!("focal edge {path_edge} exceeds a capacity"))
                })?;
                for (o, outcome) in inst.outcomes.outcomes(u).iter().enumerate() {
                    let mo = m * outcome.p;
                    let mut stay = mo;
                    for (slot, &pi) in self.summary.law.slots(u, o).iter().enumerate() {
                        if pi <= 0.0 {
                            continue;
                        }
                        let e = outs[slot];
                        let mt = mo * pi;
                        if e == path_edge {
                            let a = if labeled { accept(e) } else { 1.0 };
                            tentative_taken[e.index()].add(mt * a);
                            continue;
                        }
                        let Some(next) = self.states.take(st, e) else {
                            continue;
                        };
                        let a = accept(e);
                        if a <= 0.0 {
                            continue;
                        }
                        let dst = g.edge(e).dst;
                        let j = self.focal.position(dst).ok_or_else(|| {
                            Error::FocalPath(format!("tentative edge {e} leaves the focal path"))
                        })?;
                        let moved = mt * a;
                        stay -= moved;
                        mass[j * sc + next] += moved;
                        value.add(moved * outcome.values[slot]);
                        taken[e.index()].add(moved);
                        tentative_taken[e.index()].add(moved);
                    }
                    mass[(i + 1) * sc + stay_state] += stay;
                    value.add(stay * outcome.values[g.slot(path_edge)]);
                    taken[path_edge.index()].add(stay);
                }
            }
        }
        Ok(FocalEvaluation {
            value: value.value(),
            visit,
            taken: taken.iter().map(CompensatedSum::value).collect(),
            tentative_taken: tentative_taken.iter().map(CompensatedSum::value).collect(),
            feasibility,
        })
    }

    fn acceptance_for(&self, position: usize, edge: EdgeId) -> f64 {
        match &self.rule {
            FocalRule::Alpha(s) => s.alpha[position],
            FocalRule::Labeled(p) => p.acceptance[edge.index()],
        }
    }

    /// One step at focal position `pos` in capacity state `st`, with the node
    /// realizing `outcome`. Returns the decision, the next position and state.
    fn step<R: Rng + ?Sized>(
        &self,
        pos: usize,
        st: usize,
        outcome: usize,
        rng: &mut R,
        accept: impl Fn(EdgeId) -> f64,
    ) -> Result<(Decision, usize, usize)> {
        let g = &self.instance.graph;
        let u = self.focal.nodes()[pos];
        let outs = g.out_edges(u);
        let path_edge = self.focal.edges()[pos];
        let values = &self.instance.outcomes.outcome(u, outcome).values;
        let draw: f64 = rng.gen();
        let mut acc = 0.0;
        let mut tentative = None;
        for (slot, &pi) in self.summary.law.slots(u, outcome).iter().enumerate() {
            acc += pi;
            if pi > 0.0 && draw < acc {
                tentative = Some(outs[slot]);
                break;
            }
        }
        let labeled = matches!(self.rule, FocalRule::Labeled(_));
        let mut decision = Decision {
            node: u,
            outcome,
            tentative,
            feasible: false,
            accept_probability: None,
            coin: None,
            action: path_edge,
            value: 0.0,
        };
        if let Some(e) = tentative {
            if let Some(next) = self.states.take(st, e) {
                decision.feasible = true;
                if e != path_edge || labeled {
                    let a = accept(e);
                    let coin = rng.gen::<f64>() < a;
                    decision.accept_probability = Some(a);
                    decision.coin = Some(coin);
                    if coin && e != path_edge {
                        let j = self.focal.position(g.edge(e).dst).ok_or_else(|| {
                            Error::FocalPath(format!("tentative edge {e} leaves the focal path"))
                        })?;
                        decision.action = e;
                        decision.value = values[g.slot(e)];
                        return Ok((decision, j, next));
                    }
                }
            }
        }
        let next = self.states.take(st, path_edge).ok_or_else(|| {
            Error::FocalPath(format!("focal edge {path_edge} exceeds a capacity"))
        })?;
        decision.value = values[g.slot(path_edge)];
        Ok((decision, pos + 1, next))
    }

    /// Runs the policy against the realization given by per-node outcome
    /// indices; `rng` drives the tentative draws and coins.
    pub fn run_with<R: Rng + ?Sized>(&self, outcomes: &[usize], rng: &mut R) -> Result<Trajectory> {
        let n = self.focal.len();
        let (mut pos, mut st) = (0, self.states.initial());
        let mut decisions = Vec::new();
        let mut value = CompensatedSum::new();
        while pos + 1 < n {
            let u = self.focal.nodes()[pos];
            let (decision, next_pos, next_st) =
                self.step(pos, st, outcomes[u.index()], rng, |e| {
                    self.acceptance_for(pos, e)
                })?;
            value.add(decision.value);
            decisions.push(decision);
            pos = next_pos;
            st = next_st;
        }
        Ok(Trajectory {
            edges: decisions.iter().map(|d| d.action).collect(),
            value: value.value(),
            connector_value: 0.0,
            component: None,
            decisions,
        })
    }

    /// Samples a realization and runs the policy on it.
    pub fn run<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Trajectory> {
        let r = self.instance.sample_realization(rng);
        self.run_with(&r.outcomes, rng)
    }

    /// Particle estimate of p(e): particles advance position by position; at
    /// each focal node p(e) is the fraction of all particles standing there
    /// with capacity for `e`, and acceptance is clamped to `[0, 1]`.
    fn particle_feasibility(&self, particles: u64, seed: u64) -> Result<FeasibilityProbs> {
        if particles == 0 {
            return Err(Error::Params("particle count must be at least 1".into()));
        }
        let g = &self.instance.graph;
        let d = g.max_labels();
        let n = self.focal.len();
        let count = particles as usize;
        let mut rngs: Vec<TrialRng> = (0..particles).map(|j| trial_rng(seed, j)).collect();
        let mut pos = vec![0usize; count];
        let mut st = vec![self.states.initial(); count];
        let mut p = vec![None; g.edge_count()];
        let mut se = vec![None; g.edge_count()];
        let mut acceptance = vec![0.0; g.edge_count()];
        let total = particles as f64;
        for i in 0..n.saturating_sub(1) {
            let u = self.focal.nodes()[i];
            let here: Vec<usize> = (0..count).filter(|&j| pos[j] == i).collect();
            for &e in g.out_edges(u) {
                let feasible = here
                    .iter()
                    .filter(|&&j| self.states.can_take(st[j], e))
                    .count();
                let est = feasible as f64 / total;
                p[e.index()] = Some(est);
                se[e.index()] = Some(((est * (1.0 - est) + 1.0 / total) / total).sqrt());
                acceptance[e.index()] = if est > 0.0 {
                    (1.0 / ((d as f64 + 2.0) * est)).min(1.0)
                } else {
                    1.0
                };
            }
            for j in here {
                let rng = &mut rngs[j];
                let outcome = self.instance.sample_outcome(u, rng);
                let (_, next_pos, next_st) =
                    self.step(i, st[j], outcome, rng, |e| acceptance[e.index()])?;
                pos[j] = next_pos;
                st[j] = next_st;
            }
        }
        Ok(FeasibilityProbs {
            mode: FeasibilityMode::MonteCarlo { particles, seed },
            d,
            p,
            std_error: Some(se),
            acceptance,
        })
    }

    /// Probabilities p(e) and acceptances of a labeled policy.
    pub fn feasibility(&self) -> Option<&FeasibilityProbs> {
        match &self.rule {
            FocalRule::Labeled(p) => Some(p),
            FocalRule::Alpha(_) => None,
        }
    }

    /// Focal node at position `i`.
    pub fn node_at(&self, i: usize) -> NodeId {
        self.focal.nodes()[i]
    }
}

fn checked_acceptance(p: f64, d: usize, e: EdgeId) -> Result<f64> {
    let floor = 1.0 / (d as f64 + 2.0);
    if p < floor - TOLERANCE {
        return Err(Error::Feasibility(format!(
            "p({e}) = {p} is below 1/(d+2) = {floor}"
        )));
    }
    Ok((floor / p).min(1.0))
}

fn acceptance_from(p: &[Option<f64>], d: usize) -> Vec<f64> {
    let floor = 1.0 / (d as f64 + 2.0);
    p.iter()
        .map(|p| match p {
            Some(p) if *p > 0.0 => (floor / p).min(1.0),
            _ => 0.0,
        })
        .collect()
}

/// p(e) for the labeled width-1 policy on `instance` with focal path `focal`.
pub fn feasibility_probabilities(
    instance: &Instance,
    focal: Vec<EdgeId>,
    mode: FeasibilityMode,
    limits: &Limits,
) -> Result<FeasibilityProbs> {
    let policy = FocalPolicy::width1_labeled(instance, focal, mode, limits)?;
    match policy.rule {
        FocalRule::Labeled(p) => Ok(p),
        FocalRule::Alpha(_) => unreachable!("labeled constructor"),
    }
}
