//! Brute-force reference implementations shared by the integration tests.
//!
//! Nothing here reuses the library's dynamic programs: paths are enumerated
//! explicitly, realizations are built as a plain Cartesian product and policy
//! executions are expanded as a tree without merging states.

#![allow(dead_code)]

use prophet_dag::graph::{EdgeId, Instance, InstanceGraph, NodeId};
use prophet_dag::instances::{generate_random_instance, RandomFamily, RandomParams};

/// Every s,t-path as a list of edge ids, in DFS order.
pub fn all_st_paths(g: &InstanceGraph) -> Vec<Vec<EdgeId>> {
    fn walk(g: &InstanceGraph, u: NodeId, cur: &mut Vec<EdgeId>, out: &mut Vec<Vec<EdgeId>>) {
        if u == g.sink() {
            out.push(cur.clone());
            return;
        }
        for &e in g.out_edges(u) {
            cur.push(e);
            walk(g, g.edge(e).dst, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    walk(g, g.source(), &mut Vec::new(), &mut out);
    out
}

/// Whether a path respects every label capacity.
pub fn respects_capacities(g: &InstanceGraph, path: &[EdgeId]) -> bool {
    let mut used = vec![0u32; g.labels().len()];
    for e in path {
        for l in &g.edge(*e).labels {
            used[l.index()] += 1;
        }
    }
    used.iter().zip(g.labels()).all(|(u, l)| *u <= l.capacity)
}

/// All realizations with their masses, as a plain product.
pub fn realizations(inst: &Instance) -> Vec<(Vec<usize>, f64)> {
    let mut out = vec![(Vec::new(), 1.0)];
    for u in inst.graph.nodes() {
        let table = inst.outcomes.outcomes(u);
        let mut next = Vec::with_capacity(out.len() * table.len());
        for (prefix, mass) in &out {
            for (i, o) in table.iter().enumerate() {
                let mut p = prefix.clone();
                p.push(i);
                next.push((p, mass * o.p));
            }
        }
        out = next;
    }
    out
}

pub fn edge_value(inst: &Instance, outcomes: &[usize], e: EdgeId) -> f64 {
    let src = inst.graph.edge(e).src;
    inst.value_at(e, outcomes[src.index()])
}

pub fn path_value(inst: &Instance, outcomes: &[usize], path: &[EdgeId]) -> f64 {
    path.iter().map(|e| edge_value(inst, outcomes, *e)).sum()
}

/// Best feasible path; among maximum-value paths the lexicographically
/// smallest edge-id sequence.
pub fn brute_opt(inst: &Instance, paths: &[Vec<EdgeId>], outcomes: &[usize]) -> (f64, Vec<EdgeId>) {
    let mut best: Option<(f64, &Vec<EdgeId>)> = None;
    for p in paths.iter().filter(|p| respects_capacities(&inst.graph, p)) {
        let v = path_value(inst, outcomes, p);
        best = match best {
            None => Some((v, p)),
            Some((bv, bp)) => {
                let tol = 1e-12 * bv.abs().max(1.0);
                if v > bv + tol || ((v - bv).abs() <= tol && p < bp) {
                    Some((v.max(bv), p))
                } else {
                    Some((bv, bp))
                }
            }
        }
    }
    let (v, p) = best.expect("an unlabeled backbone always exists");
    (v, p.clone())
}

/// Offline statistics by exhaustive enumeration.
pub struct BruteOffline {
    pub expected: f64,
    pub x: Vec<f64>,
    /// `law[node][outcome][slot]`: P(OPT uses out-slot | node outcome).
    pub law: Vec<Vec<Vec<f64>>>,
}

pub fn brute_offline(inst: &Instance) -> BruteOffline {
    let g = &inst.graph;
    let paths = all_st_paths(g);
    let mut expected = 0.0;
    let mut x = vec![0.0; g.edge_count()];
    let mut law: Vec<Vec<Vec<f64>>> = g
        .nodes()
        .map(|u| vec![vec![0.0; g.out_edges(u).len()]; inst.outcomes.outcomes(u).len()])
        .collect();
    for (outcomes, mass) in realizations(inst) {
        let (v, path) = brute_opt(inst, &paths, &outcomes);
        expected += mass * v;
        for e in path {
            x[e.index()] += mass;
            let u = g.edge(e).src;
            law[u.index()][outcomes[u.index()]][g.slot(e)] += mass;
        }
    }
    for u in g.nodes() {
        for (o, row) in law[u.index()].iter_mut().enumerate() {
            let p = inst.outcomes.outcome(u, o).p;
            row.iter_mut().for_each(|m| *m /= p);
        }
    }
    BruteOffline { expected, x, law }
}

/// How the tree oracle accepts a tentative edge.
pub enum TreeRule {
    /// Width-1 rule with `q = 0`, alpha from the brute-force `x`.
    Alpha,
    /// Labeled rule `1/((d+2) p(e))`, `p(e)` measured on the tree itself.
    Labeled { d: usize },
}

/// Exact policy statistics from the execution tree.
pub struct TreeStats {
    pub value: f64,
    pub taken: Vec<f64>,
    pub tentative_taken: Vec<f64>,
    /// `p(e)` for edges whose tail was reached, labeled rule only.
    pub p: Vec<Option<f64>>,
}

#[derive(Clone)]
struct Leaf {
    node: NodeId,
    mass: f64,
    value: f64,
    used: Vec<u32>,
}

/// Expands every execution of the width-1 policy along `focal`. Leaves are
/// advanced in focal order, so when a node is processed every execution that
/// will ever reach it is already there, which is what `p(e)` needs.
pub fn execution_tree(
    inst: &Instance,
    focal: &[EdgeId],
    rule: TreeRule,
    off: &BruteOffline,
) -> TreeStats {
    let g = &inst.graph;
    let mut order = vec![g.source()];
    order.extend(focal.iter().map(|e| g.edge(*e).dst));
    let position = |u: NodeId| {
        order
            .iter()
            .position(|v| *v == u)
            .expect("width-1 focal path")
    };
    let alpha: Vec<f64> = (0..order.len())
        .map(|i| {
            let skip: f64 = g
                .edges()
                .iter()
                .filter(|e| position(e.src) < i && i < position(e.dst))
                .map(|e| off.x[e.id.index()])
                .sum();
            0.5 / (1.0 - skip / 2.0)
        })
        .collect();

    let mut leaves = vec![Leaf {
        node: g.source(),
        mass: 1.0,
        value: 0.0,
        used: vec![0; g.labels().len()],
    }];
    let mut done = Vec::new();
    let mut taken = vec![0.0; g.edge_count()];
    let mut tentative_taken = vec![0.0; g.edge_count()];
    let mut p = vec![None; g.edge_count()];
    let fits = |used: &[u32], e: EdgeId| {
        g.edge(e)
            .labels
            .iter()
            .all(|l| used[l.index()] < g.label(*l).capacity)
    };

    for (i, &u) in order.iter().enumerate() {
        let (here, rest): (Vec<Leaf>, Vec<Leaf>) = leaves.into_iter().partition(|l| l.node == u);
        leaves = rest;
        if u == g.sink() {
            done.extend(here);
            continue;
        }
        let path_edge = focal[i];
        let outs = g.out_edges(u);
        if let TreeRule::Labeled { .. } = rule {
            for &e in outs {
                let m: f64 = here
                    .iter()
                    .filter(|l| fits(&l.used, e))
                    .map(|l| l.mass)
                    .sum();
                p[e.index()] = Some(m);
            }
        }
        for leaf in here {
            for (o, outcome) in inst.outcomes.outcomes(u).iter().enumerate() {
                let law = &off.law[u.index()][o];
                let none = 1.0 - law.iter().sum::<f64>();
                let mut branches: Vec<(EdgeId, f64, Option<EdgeId>)> = Vec::new();
                if none > 1e-15 {
                    branches.push((path_edge, none, None));
                }
                for (slot, &e) in outs.iter().enumerate() {
                    let w = law[slot];
                    if w <= 0.0 {
                        continue;
                    }
                    let accept = match rule {
                        TreeRule::Alpha if e == path_edge => 1.0,
                        TreeRule::Alpha => alpha[i],
                        TreeRule::Labeled { .. } if !fits(&leaf.used, e) => 0.0,
                        TreeRule::Labeled { d } => {
                            (1.0 / ((d as f64 + 2.0) * p[e.index()].unwrap())).min(1.0)
                        }
                    };
                    if accept > 0.0 {
                        branches.push((e, w * accept, Some(e)));
                    }
                    if accept < 1.0 {
                        branches.push((path_edge, w * (1.0 - accept), None));
                    }
                }
                for (e, w, tentative) in branches {
                    let mass = leaf.mass * outcome.p * w;
                    if mass == 0.0 {
                        continue;
                    }
                    taken[e.index()] += mass;
                    if let Some(t) = tentative {
                        tentative_taken[t.index()] += mass;
                    }
                    let mut used = leaf.used.clone();
                    for l in &g.edge(e).labels {
                        used[l.index()] += 1;
                    }
                    leaves.push(Leaf {
                        node: g.edge(e).dst,
                        mass,
                        value: leaf.value + outcome.values[g.slot(e)],
                        used,
                    });
                }
            }
        }
    }
    TreeStats {
        value: done.iter().map(|l| l.mass * l.value).sum(),
        taken,
        tentative_taken,
        p,
    }
}

/// The focal path of a width-1 instance: the unlabeled s,t-path through all
/// nodes, if any.
pub fn hamiltonian_unlabeled_path(g: &InstanceGraph) -> Option<Vec<EdgeId>> {
    let n = g.node_count();
    (0..n - 1)
        .map(|i| g.unlabeled_edge_between(NodeId(i), NodeId(i + 1)))
        .collect()
}

/// Every s,t-cut `(S, V \ S)` with no edge from `V \ S` back into `S`, as
/// the list of edges crossing it.
pub fn forward_cuts(g: &InstanceGraph) -> Vec<Vec<EdgeId>> {
    let n = g.node_count();
    let inner = n - 2;
    let mut cuts = Vec::new();
    for mask in 0u64..(1u64 << inner) {
        let in_s =
            |u: NodeId| u == g.source() || (u != g.sink() && mask >> (u.index() - 1) & 1 == 1);
        if g.edges().iter().any(|e| !in_s(e.src) && in_s(e.dst)) {
            continue;
        }
        cuts.push(
            g.edges()
                .iter()
                .filter(|e| in_s(e.src) && !in_s(e.dst))
                .map(|e| e.id)
                .collect(),
        );
    }
    cuts
}

/// Node-disjoint strands of a strand-family instance: components of the
/// graph without `s` and `t`, each walked in node order.
pub fn strand_cover(g: &InstanceGraph) -> Vec<Vec<EdgeId>> {
    let n = g.node_count();
    let (s, t) = (g.source(), g.sink());
    let mut comp = vec![usize::MAX; n];
    let mut strands: Vec<Vec<NodeId>> = Vec::new();
    for u in 1..n - 1 {
        if comp[u] != usize::MAX {
            continue;
        }
        let c = strands.len();
        let mut stack = vec![NodeId(u)];
        let mut members = Vec::new();
        comp[u] = c;
        while let Some(v) = stack.pop() {
            members.push(v);
            let nbrs = g
                .out_edges(v)
                .iter()
                .map(|e| g.edge(*e).dst)
                .chain(g.in_edges(v).iter().map(|e| g.edge(*e).src));
            for w in nbrs.collect::<Vec<_>>() {
                if w != s && w != t && comp[w.index()] == usize::MAX {
                    comp[w.index()] = c;
                    stack.push(w);
                }
            }
        }
        members.sort();
        strands.push(members);
    }
    strands
        .iter()
        .map(|m| {
            let mut nodes = vec![s];
            nodes.extend(m);
            nodes.push(t);
            nodes
                .windows(2)
                .map(|w| {
                    g.unlabeled_edge_between(w[0], w[1])
                        .expect("strand backbone")
                })
                .collect()
        })
        .collect()
}

/// Random instance parameters used by the fuzz suites.
pub fn fuzz_params(
    family: RandomFamily,
    nodes: usize,
    labels: usize,
    max_labels_per_edge: usize,
) -> RandomParams {
    RandomParams {
        family,
        nodes,
        max_outcomes: 3,
        labels,
        max_labels_per_edge,
        max_capacity: 2,
        edge_probability: 0.35,
    }
}

/// Seeded random instances with node counts cycling through `sizes`.
pub fn fuzz_instances(
    family: RandomFamily,
    sizes: &[usize],
    labels: usize,
    max_labels_per_edge: usize,
    count: u64,
    salt: u64,
) -> Vec<(u64, Instance)> {
    let mut out = Vec::with_capacity(count as usize);
    let mut i = 0;
    while out.len() < count as usize {
        let seed = salt * 1_000_003 + i;
        let n = sizes[out.len() % sizes.len()];
        let inst =
            generate_random_instance(&fuzz_params(family, n, labels, max_labels_per_edge), seed)
                .expect("generator yields valid instances");
        i += 1;
        // labeled suites keep only instances that actually carry labels
        if labels == 0 || inst.graph.max_labels() > 0 {
            out.push((seed, inst));
        }
    }
    out
}
