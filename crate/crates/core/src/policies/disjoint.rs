//! The plan for graphs covered by node-disjoint strands.
//!
//! Edges are partitioned by strand: direct s,t edges go to the first strand,
//! an edge from `s` goes to the strand of its head, and every other edge to
//! the strand of its tail. Every s,t-path then lies inside exactly one part,
//! which makes `f_i = P(OPT inside part i)` sum to one.

use std::collections::BTreeSet;

use serde::Serialize;

use super::{FocalPath, FocalPolicy};
use crate::cover::PathCover;
use crate::error::{Error, Result};
use crate::graph::{EdgeId, Instance, Limits};
use crate::numeric::{CompensatedSum, TOLERANCE};
use crate::oracle::{OfflineSpec, OptSolver};

#[derive(Clone, Debug, Serialize)]
pub struct DisjointPlan {
    /// Part index of every edge.
    pub part: Vec<usize>,
    /// `P(OPT lies inside part i)`.
    pub f: Vec<f64>,
    /// `P(OPT_i equals P_i)`.
    pub q: Vec<f64>,
    /// `E(OPT_i)`.
    pub expected_opt_i: Vec<f64>,
    /// `E(OPT)`, from the same enumeration.
    pub expected_opt: f64,
    /// Index maximizing `E(OPT_i) / (2 - q_i)`; ties go to the smaller index.
    pub selected: usize,
    #[serde(skip)]
    pub policy: FocalPolicy,
}

impl DisjointPlan {
    /// Certified lower bound `E(OPT_i*) / (2 - q_i*)`.
    pub fn certified_value(&self) -> f64 {
        self.expected_opt_i[self.selected] / (2.0 - self.q[self.selected])
    }

    pub fn edges_of(&self, part: usize) -> BTreeSet<EdgeId> {
        self.part
            .iter()
            .enumerate()
            .filter(|(_, p)| **p == part)
            .map(|(e, _)| EdgeId(e))
            .collect()
    }
}

/// Validates the cover (node-disjoint, strand-closed, unlabeled instance),
/// computes `f_i`, `q_i` and `E(OPT_i)` exactly and prepares the modified
/// width-1 policy on the selected strand.
pub fn build_disjoint_plan(
    instance: &Instance,
    cover: &PathCover,
    limits: &Limits,
) -> Result<DisjointPlan> {
    let g = &instance.graph;
    if !g.is_unlabeled() {
        return Err(Error::Policy(
            "the disjoint-paths policy needs an unlabeled instance".into(),
        ));
    }
    let (s, t) = (g.source(), g.sink());
    let k = cover.k();
    let mut owner = vec![None; g.node_count()];
    for (i, nodes) in cover.node_orders.iter().enumerate() {
        for u in nodes.iter().filter(|u| **u != s && **u != t) {
            if let Some(j) = owner[u.index()] {
                if j != i {
                    return Err(Error::Cover(format!(
                        "paths {j} and {i} share node {}",
                        g.node_name(*u)
                    )));
                }
            }
            owner[u.index()] = Some(i);
        }
    }
    let mut part = Vec::with_capacity(g.edge_count());
    for e in g.edges() {
        let p = if e.src == s && e.dst == t {
            0
        } else if e.src == s {
            owner[e.dst.index()].ok_or_else(|| Error::Internal("uncovered node".into()))?
        } else {
            let i = owner[e.src.index()].ok_or_else(|| Error::Internal("uncovered node".into()))?;
            if e.dst != t && owner[e.dst.index()] != Some(i) {
                return Err(Error::Cover(format!(
                    "edge {} leaves strand {i}; the cover is not strand-closed",
                    e.id
                )));
            }
            i
        };
        part.push(p);
    }

    let path_value = |values: &[f64], i: usize| -> f64 {
        cover.paths[i]
            .iter()
            .map(|e| values[e.index()])
            .sum::<CompensatedSum>()
            .value()
    };
    let mut solver = OptSolver::new(instance, &OfflineSpec::Opt, limits)?;
    let mut f = vec![CompensatedSum::new(); k];
    let mut q = vec![CompensatedSum::new(); k];
    let mut off = vec![CompensatedSum::new(); k];
    let mut total = CompensatedSum::new();
    let mut values = Vec::new();
    let mut path = Vec::new();
    let mut failure = None;
    instance.for_each_joint(None, limits, |outcomes, mass| {
        if failure.is_some() {
            return;
        }
        instance.edge_values_into(outcomes, &mut values);
        let opt = match solver.solve_into(&values, &mut path) {
            Ok(v) => v,
            Err(e) => {
                failure = Some(e);
                return;
            }
        };
        total.add(mass * opt);
        let home = part[path[0].index()];
        f[home].add(mass);
        for i in 0..k {
            if i == home {
                off[i].add(mass * opt);
                if path == cover.paths[i] {
                    q[i].add(mass);
                }
            } else {
                off[i].add(mass * path_value(&values, i));
                q[i].add(mass);
            }
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let f: Vec<f64> = f.iter().map(CompensatedSum::value).collect();
    let q: Vec<f64> = q.iter().map(CompensatedSum::value).collect();
    let expected_opt_i: Vec<f64> = off.iter().map(CompensatedSum::value).collect();
    if (f.iter().sum::<f64>() - 1.0).abs() > TOLERANCE {
        return Err(Error::Internal("f does not sum to one".into()));
    }
    let mut selected = 0;
    for i in 1..k {
        let cur = expected_opt_i[i] / (2.0 - q[i]);
        let best = expected_opt_i[selected] / (2.0 - q[selected]);
        if cur > best * (1.0 + 1e-12) + 1e-15 {
            selected = i;
        }
    }
    let allowed: BTreeSet<EdgeId> = part
        .iter()
        .enumerate()
        .filter(|(_, p)| **p == selected)
        .map(|(e, _)| EdgeId(e))
        .collect();
    let spec = OfflineSpec::restricted(instance, allowed, cover.paths[selected].clone())?;
    let focal = FocalPath::new(g, cover.paths[selected].clone())?;
    let policy = FocalPolicy::modified(instance, focal, spec, q[selected], limits)?;
    if (policy.expected_offline() - expected_opt_i[selected]).abs()
        > TOLERANCE * expected_opt_i[selected].max(1.0)
    {
        return Err(Error::Internal(
            "restricted offline value disagrees with the plan".into(),
        ));
    }
    Ok(DisjointPlan {
        part,
        f,
        q,
        expected_opt_i,
        expected_opt: total.value(),
        selected,
        policy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{InstanceBuilder, NodeId};

    /// s -> i -> t for two strands with B(1/2) values and a direct edge of 1.
    fn two_strands() -> (Instance, PathCover) {
        let mut b = InstanceBuilder::new();
        let s = b.node("s");
        let mids: Vec<NodeId> = (1..=2).map(|i| b.node(i.to_string())).collect();
        let t = b.node("t");
        let legs: Vec<EdgeId> = mids.iter().map(|m| b.edge(s, *m)).collect();
        let direct = b.edge(s, t);
        b.deterministic(s, vec![(direct, 1.0)]);
        let tails: Vec<EdgeId> = mids
            .iter()
            .map(|m| {
                let e = b.edge(*m, t);
                b.outcome(*m, 0.5, vec![(e, 2.0)]).outcome(*m, 0.5, vec![]);
                e
            })
            .collect();
        let inst = b.build().unwrap();
        let cover = PathCover::new(
            &inst.graph,
            vec![vec![legs[0], tails[0]], vec![legs[1], tails[1]]],
        )
        .unwrap();
        (inst, cover)
    }

    #[test]
    fn plan_quantities() {
        let (inst, cover) = two_strands();
        let plan = build_disjoint_plan(&inst, &cover, &Limits::default()).unwrap();
        assert_eq!(plan.part, vec![0, 1, 0, 0, 1]);
        // OPT is strand 1 w.p. 1/2, strand 2 w.p. 1/4, direct w.p. 1/4
        assert!((plan.f[0] - 0.75).abs() < 1e-12);
        assert!((plan.f[1] - 0.25).abs() < 1e-12);
        assert!((plan.expected_opt - 1.75).abs() < 1e-12);
        for i in 0..2 {
            assert!(plan.q[i] >= 1.0 - plan.f[i] - 1e-9);
        }
        assert!(plan.expected_opt_i.iter().sum::<f64>() >= plan.expected_opt - 1e-9);
        let value = plan.policy.evaluate().unwrap().value;
        assert!(value >= plan.certified_value() - 1e-9);
        assert!(value >= plan.expected_opt / 3.0 - 1e-9);
    }

    #[test]
    fn crossing_edges_are_rejected() {
        let mut b = InstanceBuilder::new();
        let s = b.node("s");
        let a = b.node("a");
        let c = b.node("c");
        let t = b.node("t");
        let sa = b.edge(s, a);
        let sc = b.edge(s, c);
        let at = b.edge(a, t);
        let ct = b.edge(c, t);
        b.edge(a, c);
        let inst = b.build().unwrap();
        let cover = PathCover::new(&inst.graph, vec![vec![sa, at], vec![sc, ct]]).unwrap();
        assert!(matches!(
            build_disjoint_plan(&inst, &cover, &Limits::default()),
            Err(Error::Cover(_))
        ));
    }
}
