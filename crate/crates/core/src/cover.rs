//! Minimum s,t-path covers (width) and a brute-force antichain oracle.
//!
//! The cover comes from the classic reduction: take the transitive closure,
//! split every node into a left and a right copy, add `(u_left, v_right)` for
//! every closure pair and find a maximum matching. Unmatched chains are then
//! expanded into real s,t-paths of the graph with fewest-edge unlabeled
//! connections.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{EdgeId, InstanceGraph, NodeId};
use crate::rng::seeded;

/// Largest graph accepted by [`max_antichain_bruteforce`].
pub const ANTICHAIN_NODE_CAP: usize = 20;

/// An ordered list of s,t-paths whose node sets cover the graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PathCover {
    pub paths: Vec<Vec<EdgeId>>,
    /// Node visit order of each path, starting at `s`.
    pub node_orders: Vec<Vec<NodeId>>,
}

impl PathCover {
    /// Checks that every path is an s,t-path and that the union of their node
    /// sets is the whole node set.
    pub fn new(graph: &InstanceGraph, paths: Vec<Vec<EdgeId>>) -> Result<Self> {
        if paths.is_empty() {
            return Err(Error::Cover("a cover needs at least one path".into()));
        }
        let mut covered = vec![false; graph.node_count()];
        let mut node_orders = Vec::with_capacity(paths.len());
        for (i, p) in paths.iter().enumerate() {
            if !graph.is_st_path(p) {
                return Err(Error::Cover(format!("path {i} is not an s,t-path")));
            }
            let nodes = graph.path_nodes(p);
            for u in &nodes {
                covered[u.index()] = true;
            }
            node_orders.push(nodes);
        }
        if let Some(u) = covered.iter().position(|c| !c) {
            return Err(Error::Cover(format!(
                "node {} is not visited by any path",
                graph.node_name(NodeId(u))
            )));
        }
        Ok(Self { paths, node_orders })
    }

    pub fn k(&self) -> usize {
        self.paths.len()
    }

    /// Cover from raw edge-id lists (as stored in instance metadata).
    pub fn from_ids(graph: &InstanceGraph, paths: &[Vec<usize>]) -> Result<Self> {
        Self::new(
            graph,
            paths
                .iter()
                .map(|p| p.iter().map(|&e| EdgeId(e)).collect())
                .collect(),
        )
    }
}

/// Reflexive-free reachability matrix: `closure[u][v]` iff there is a
/// nonempty directed path from `u` to `v`.
pub fn transitive_closure(graph: &InstanceGraph) -> Vec<Vec<bool>> {
    let n = graph.node_count();
    let mut closure = vec![vec![false; n]; n];
    // nodes are stored in topological order, so sweep backwards
    for u in (0..n).rev() {
        for &e in graph.out_edges(NodeId(u)) {
            let v = graph.edge(e).dst.index();
            closure[u][v] = true;
            let (head, tail) = closure.split_at_mut(v);
            for (dst, &reach) in head[u].iter_mut().zip(tail[0].iter()) {
                *dst |= reach;
            }
        }
    }
    closure
}

/// Maximum bipartite matching by Hopcroft-Karp. `adj[u]` lists the right
/// vertices adjacent to left vertex `u`; returns the partner of each left
/// vertex.
pub fn hopcroft_karp(adj: &[Vec<usize>], right_count: usize) -> Vec<Option<usize>> {
    const FREE: usize = usize::MAX;
    let left_count = adj.len();
    let mut match_left = vec![FREE; left_count];
    let mut match_right = vec![FREE; right_count];
    let mut dist = vec![0usize; left_count];

    loop {
        // layered BFS from free left vertices
        let mut queue = VecDeque::new();
        for u in 0..left_count {
            if match_left[u] == FREE {
                dist[u] = 0;
                queue.push_back(u);
            } else {
                dist[u] = usize::MAX;
            }
        }
        let mut found = false;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                let w = match_right[v];
                if w == FREE {
                    found = true;
                } else if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        if !found {
            break;
        }
        // vertex-disjoint shortest augmenting paths, iterative DFS
        let mut next = vec![0usize; left_count];
        for root in 0..left_count {
            if match_left[root] != FREE {
                continue;
            }
            let mut stack = vec![root];
            let mut augmented = false;
            while let Some(&u) = stack.last() {
                if next[u] == adj[u].len() {
                    dist[u] = usize::MAX;
                    stack.pop();
                    continue;
                }
                let v = adj[u][next[u]];
                next[u] += 1;
                let w = match_right[v];
                if w == FREE {
                    // flip the path held on the stack
                    let mut v = v;
                    while let Some(u) = stack.pop() {
                        let prev = match_left[u];
                        match_left[u] = v;
                        match_right[v] = u;
                        v = prev;
                    }
                    augmented = true;
                    break;
                }
                if dist[w] == dist[u] + 1 {
                    stack.push(w);
                }
            }
            let _ = augmented;
        }
    }
    match_left
        .into_iter()
        .map(|v| (v != FREE).then_some(v))
        .collect()
}

/// Minimum chain decomposition of the node set (chains of the closure order).
pub fn min_chain_decomposition(graph: &InstanceGraph, seed: Option<u64>) -> Vec<Vec<NodeId>> {
    let n = graph.node_count();
    let closure = transitive_closure(graph);
    let mut adj: Vec<Vec<usize>> = (0..n)
        .map(|u| (0..n).filter(|&v| closure[u][v]).collect())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    if let Some(seed) = seed {
        let mut rng = seeded(seed);
        for list in adj.iter_mut() {
            list.shuffle(&mut rng);
        }
        order.shuffle(&mut rng);
    }
    // permuting the left side only changes which maximum matching is found
    let permuted: Vec<Vec<usize>> = order.iter().map(|&u| adj[u].clone()).collect();
    let matched = hopcroft_karp(&permuted, n);
    let mut succ = vec![None; n];
    let mut has_pred = vec![false; n];
    for (i, m) in matched.iter().enumerate() {
        if let Some(v) = *m {
            succ[order[i]] = Some(v);
            has_pred[v] = true;
        }
    }
    let mut chains = Vec::new();
    for start in (0..n).filter(|&u| !has_pred[u]) {
        let mut chain = vec![NodeId(start)];
        let mut cur = start;
        while let Some(v) = succ[cur] {
            chain.push(NodeId(v));
            cur = v;
        }
        chains.push(chain);
    }
    chains.sort();
    chains
}

/// A minimum path cover with the default (unpermuted) matching order.
pub fn min_path_cover(graph: &InstanceGraph) -> Result<PathCover> {
    min_path_cover_seeded(graph, None)
}

/// A minimum path cover; `seed` permutes the matching's adjacency order,
/// which selects among same-size covers.
pub fn min_path_cover_seeded(graph: &InstanceGraph, seed: Option<u64>) -> Result<PathCover> {
    let chains = min_chain_decomposition(graph, seed);
    let (s, t) = (graph.source(), graph.sink());
    let mut paths = Vec::with_capacity(chains.len());
    for chain in chains {
        let mut waypoints = Vec::with_capacity(chain.len() + 2);
        if chain[0] != s {
            waypoints.push(s);
        }
        waypoints.extend_from_slice(&chain);
        if *chain.last().expect("chains are nonempty") != t {
            waypoints.push(t);
        }
        let mut path = Vec::new();
        for pair in waypoints.windows(2) {
            let leg = graph.shortest_path(pair[0], pair[1], true).ok_or_else(|| {
                Error::Cover(format!(
                    "no unlabeled path from {} to {}",
                    graph.node_name(pair[0]),
                    graph.node_name(pair[1])
                ))
            })?;
            path.extend(leg);
        }
        paths.push(path);
    }
    PathCover::new(graph, paths)
}

/// Width of the graph: size of a minimum path cover.
pub fn width(graph: &InstanceGraph) -> usize {
    min_chain_decomposition(graph, None).len()
}

/// A maximum antichain by exhaustive branch and bound. Exponential; limited
/// to [`ANTICHAIN_NODE_CAP`] nodes.
pub fn max_antichain_bruteforce(graph: &InstanceGraph) -> Result<Vec<NodeId>> {
    let n = graph.node_count();
    if n > ANTICHAIN_NODE_CAP {
        return Err(Error::Params(format!(
            "antichain search is limited to {ANTICHAIN_NODE_CAP} nodes, graph has {n}"
        )));
    }
    let closure = transitive_closure(graph);
    let comparable: Vec<u32> = (0..n)
        .map(|u| {
            (0..n)
                .filter(|&v| v != u && (closure[u][v] || closure[v][u]))
                .fold(0u32, |m, v| m | (1 << v))
        })
        .collect();

    fn search(candidates: u32, current: u32, best: &mut u32, comparable: &[u32]) {
        if current.count_ones() + candidates.count_ones() <= best.count_ones() {
            return;
        }
        if candidates == 0 {
            *best = current;
            return;
        }
        let v = candidates.trailing_zeros() as usize;
        let bit = 1u32 << v;
        search(
            candidates & !bit & !comparable[v],
            current | bit,
            best,
            comparable,
        );
        search(candidates & !bit, current, best, comparable);
    }

    let mut best = 0u32;
    let all = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    search(all, 0, &mut best, &comparable);
    Ok((0..n)
        .filter(|&v| best & (1 << v) != 0)
        .map(NodeId)
        .collect())
}
