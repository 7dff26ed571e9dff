//! Instance generators: the standard constructions and random families.
//!
//! Distributions are finite lists of `(probability, value)` pairs. `B(eps)`
//! is the two-point law with value `1/eps` with probability `eps` and `0`
//! otherwise.

use std::collections::BTreeMap;

use num_rational::Rational64;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{
    EdgeId, Instance, InstanceBuilder, InstanceGraph, Label, LabelId, NodeId, Outcome, OutcomeTable,
};
use crate::numeric::TOLERANCE;
use crate::rng::seeded;
use crate::schema::Metadata;

/// A finite distribution as `(probability, value)` pairs.
pub type Distribution = Vec<(f64, f64)>;

/// `1/eps` with probability `eps`, else `0`.
pub fn b_eps(eps: f64) -> Distribution {
    vec![(eps, 1.0 / eps), (1.0 - eps, 0.0)]
}

/// One outcome of a bidder in the vertex-arrival matching reduction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BidderOutcome {
    pub p: f64,
    /// Value for each item.
    pub values: Vec<f64>,
}

/// Parameters of the standard constructions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum GeneratorParams {
    /// Classic prophet inequality: a zero-valued path `1 -> ... -> n -> t`
    /// with candidate `i` on a bypass `i -> t`. Candidate `n` sits on the
    /// last path edge unless `bypass_last` adds a separate bypass for it.
    Classic {
        candidates: Vec<Distribution>,
        #[serde(default)]
        bypass_last: bool,
    },
    /// Over-time hiring: from step `i`, a term of length `l` is an edge to
    /// step `i + l` worth `l * v_i`, all terms sharing the draw `v_i`.
    Overtime {
        values: Vec<Distribution>,
        terms: Vec<usize>,
    },
    /// Over-time hiring across markets; `values[a][i]` is the candidate law
    /// of market `a` at step `i`. A term may end in any market, with equal
    /// values across destination markets.
    Markets {
        values: Vec<Vec<Distribution>>,
        terms: Vec<usize>,
    },
    /// Width 1 with one label of capacity 1 where no online policy beats 4/9.
    Upper49 { eps: f64 },
    /// `rows = k` grid whose second column is worth 1 and third column is
    /// `B(eps)`; `cols` defaults to `max(k, 4)` so that the third column is
    /// never the last one. Named covers: `horizontal` (rows), `vertical`
    /// (columns, leaving through a column's own edge to t when it has one)
    /// and `vertical-bottom-row` (columns finishing along the bottom row).
    Grid {
        k: usize,
        eps: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cols: Option<usize>,
    },
    /// `k` strands `s -> i -> t` worth `B(eps)` plus a direct edge worth 1.
    Kplus1 { k: usize, eps: f64 },
    /// Multiple-choice prophet: a skip edge and a labeled pick edge between
    /// consecutive candidates, at most `m` picks.
    Mchoice { values: Vec<Distribution>, m: u32 },
    /// Vertex-arrival matching: bidders arrive along a path and may take
    /// one item each; every item is a label of capacity 1.
    VertexMatching {
        items: usize,
        bidders: Vec<Vec<BidderOutcome>>,
    },
}

/// A generated instance with its provenance.
#[derive(Clone, Debug)]
pub struct Generated {
    pub instance: Instance,
    pub metadata: Metadata,
}

impl Generated {
    /// A named cover from the metadata, as edge paths.
    pub fn cover(&self, name: &str) -> Option<Vec<Vec<EdgeId>>> {
        self.metadata.covers.get(name).map(|paths| {
            paths
                .iter()
                .map(|p| p.iter().map(|&e| EdgeId(e)).collect())
                .collect()
        })
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::Params(format!("eps must lie in (0, 1), got {eps}")))
    }
}

fn check_distribution(d: &Distribution, what: &str) -> Result<()> {
    if d.is_empty() {
        return Err(Error::Params(format!("{what}: empty distribution")));
    }
    let total: f64 = d.iter().map(|(p, _)| p).sum();
    if (total - 1.0).abs() > TOLERANCE
        || d.iter()
            .any(|(p, v)| *p <= 0.0 || *v < 0.0 || !v.is_finite())
    {
        return Err(Error::Params(format!(
            "{what}: masses must be positive and sum to 1, values finite and nonnegative"
        )));
    }
    Ok(())
}

fn check_terms(terms: &[usize]) -> Result<Vec<usize>> {
    let mut terms = terms.to_vec();
    terms.sort_unstable();
    terms.dedup();
    if terms.is_empty() || terms[0] == 0 {
        return Err(Error::Params(
            "terms must be a nonempty list of positive lengths".into(),
        ));
    }
    Ok(terms)
}

/// Adds the named nodes followed by `t`.
fn chain_nodes(b: &mut InstanceBuilder, names: impl Iterator<Item = String>) -> Vec<NodeId> {
    let mut nodes: Vec<NodeId> = names.map(|name| b.node(name)).collect();
    nodes.push(b.node("t"));
    nodes
}

/// Builds one of the standard constructions and validates it.
pub fn generate_paper_instance(params: &GeneratorParams) -> Result<Generated> {
    let params_json = serde_json::to_value(params).ok();
    let (instance, mut metadata) = match params {
        GeneratorParams::Classic {
            candidates,
            bypass_last,
        } => (classic(candidates, *bypass_last)?, Metadata::default()),
        GeneratorParams::Overtime { values, terms } => {
            (overtime(values, terms)?, Metadata::default())
        }
        GeneratorParams::Markets { values, terms } => {
            (markets(values, terms)?, Metadata::default())
        }
        GeneratorParams::Upper49 { eps } => upper49(*eps)?,
        GeneratorParams::Grid { k, eps, cols } => grid(*k, *eps, *cols)?,
        GeneratorParams::Kplus1 { k, eps } => kplus1(*k, *eps)?,
        GeneratorParams::Mchoice { values, m } => (mchoice(values, *m)?, Metadata::default()),
        GeneratorParams::VertexMatching { items, bidders } => {
            (vertex_matching(*items, bidders)?, Metadata::default())
        }
    };
    metadata.family = params_json
        .as_ref()
        .and_then(|v| v.get("family"))
        .and_then(|v| v.as_str())
        .map(str::to_string);
    metadata.params = params_json;
    Ok(Generated {
        instance: instance.validated()?,
        metadata,
    })
}

fn classic(candidates: &[Distribution], bypass_last: bool) -> Result<Instance> {
    if candidates.is_empty() {
        return Err(Error::Params("need at least one candidate".into()));
    }
    for (i, d) in candidates.iter().enumerate() {
        check_distribution(d, &format!("candidate {}", i + 1))?;
    }
    let n = candidates.len();
    let mut b = InstanceBuilder::new();
    let nodes: Vec<NodeId> = (1..=n).map(|i| b.node(i.to_string())).collect();
    let t = b.node("t");
    for (i, dist) in candidates.iter().enumerate() {
        let next = if i + 1 < n { nodes[i + 1] } else { t };
        let path = b.edge(nodes[i], next);
        let carrier = if i + 1 < n || bypass_last {
            b.edge(nodes[i], t)
        } else {
            path
        };
        for &(p, v) in dist {
            b.outcome(nodes[i], p, vec![(carrier, v)]);
        }
    }
    b.build()
}

/// The two-candidate example: `X1 = 1`, `X2` is 2 or 0 with probability 1/2
/// each, both on bypass edges.
pub fn classic_two_candidate() -> Instance {
    classic(&[vec![(1.0, 1.0)], vec![(0.5, 2.0), (0.5, 0.0)]], true).expect("valid construction")
}

/// The hard pair for the classic problem: `X1 = 1`, `X2 = B(eps)`.
pub fn classic_hard_pair(eps: f64) -> Result<Instance> {
    check_eps(eps)?;
    classic(&[vec![(1.0, 1.0)], b_eps(eps)], true)
}

fn overtime(values: &[Distribution], terms: &[usize]) -> Result<Instance> {
    let terms = check_terms(terms)?;
    let n = values.len();
    if n == 0 {
        return Err(Error::Params("horizon must be at least 1".into()));
    }
    for (i, d) in values.iter().enumerate() {
        check_distribution(d, &format!("step {}", i + 1))?;
    }
    let mut b = InstanceBuilder::new();
    // node n is t
    let nodes = chain_nodes(&mut b, (1..=n).map(|i| i.to_string()));
    for i in 0..n {
        let mut edges = Vec::new();
        if terms[0] != 1 {
            b.edge(nodes[i], nodes[i + 1]);
        }
        for &l in terms.iter().filter(|&&l| i + l <= n) {
            edges.push((b.edge(nodes[i], nodes[i + l]), l as f64));
        }
        for &(p, v) in &values[i] {
            b.outcome(
                nodes[i],
                p,
                edges.iter().map(|&(e, l)| (e, l * v)).collect(),
            );
        }
    }
    b.build()
}

fn markets(values: &[Vec<Distribution>], terms: &[usize]) -> Result<Instance> {
    let terms = check_terms(terms)?;
    let m = values.len();
    let n = values.first().map_or(0, Vec::len);
    if m == 0 || n == 0 || values.iter().any(|v| v.len() != n) {
        return Err(Error::Params(
            "need at least one market and equally long step lists".into(),
        ));
    }
    for (a, row) in values.iter().enumerate() {
        for (i, d) in row.iter().enumerate() {
            check_distribution(d, &format!("market {a} step {}", i + 1))?;
        }
    }
    let mut b = InstanceBuilder::new();
    let s = b.node("s");
    let mut grid = vec![vec![NodeId(0); m]; n];
    for (i, row) in grid.iter_mut().enumerate() {
        for (a, slot) in row.iter_mut().enumerate() {
            *slot = b.node(format!("m{}_{}", a + 1, i + 1));
        }
    }
    let t = b.node("t");
    for &first in &grid[0] {
        b.edge(s, first);
    }
    let land = |step: usize, market: usize| if step == n { t } else { grid[step][market] };
    for i in 0..n {
        for a in 0..m {
            let u = grid[i][a];
            if terms[0] != 1 {
                for c in 0..m {
                    b.edge(u, land(i + 1, c));
                }
            }
            let mut edges = Vec::new();
            for &l in terms.iter().filter(|&&l| i + l <= n) {
                for c in 0..m {
                    edges.push((b.edge(u, land(i + l, c)), l as f64));
                }
            }
            for &(p, v) in &values[a][i] {
                b.outcome(u, p, edges.iter().map(|&(e, l)| (e, l * v)).collect());
            }
        }
    }
    b.build()
}

fn upper49(eps: f64) -> Result<(Instance, Metadata)> {
    check_eps(eps)?;
    let mut b = InstanceBuilder::new();
    let s = b.node("s");
    let a = b.node("a");
    let bn = b.node("b");
    let t = b.node("t");
    let red = b.label("red", 1);
    b.edge(s, a);
    let red_sa = b.labeled_edge(s, a, vec![red]);
    let direct = b.edge(s, t);
    b.edge(a, bn);
    let at = b.edge(a, t);
    b.edge(bn, t);
    let red_bt = b.labeled_edge(bn, t, vec![red]);
    b.deterministic(s, vec![(red_sa, 1.0), (direct, 2.0)]);
    b.outcome(a, 0.5, vec![(at, 2.0)]).outcome(a, 0.5, vec![]);
    b.outcome(bn, eps, vec![(red_bt, 2.0 / eps)])
        .outcome(bn, 1.0 - eps, vec![]);
    let metadata = Metadata {
        expected_opt: Some(4.5 - 2.5 * eps),
        ..Metadata::default()
    };
    Ok((b.build()?, metadata))
}

fn grid(k: usize, eps: f64, cols: Option<usize>) -> Result<(Instance, Metadata)> {
    check_eps(eps)?;
    if k == 0 {
        return Err(Error::Params("k must be at least 1".into()));
    }
    let cols = cols.unwrap_or(k.max(4));
    if cols < 4 {
        return Err(Error::Params("the grid needs at least 4 columns".into()));
    }
    let mut b = InstanceBuilder::new();
    let mut node = vec![vec![NodeId(0); cols]; k];
    for (r, row) in node.iter_mut().enumerate() {
        for (c, slot) in row.iter_mut().enumerate() {
            *slot = b.node(match (r, c) {
                (0, 0) => "s".to_string(),
                _ if r == k - 1 && c == cols - 1 => "t".to_string(),
                _ => format!("r{r}c{c}"),
            });
        }
    }
    let t = node[k - 1][cols - 1];
    let mut down = vec![vec![None; cols]; k];
    let mut right = vec![vec![None; cols]; k];
    let mut direct = vec![None; cols];
    for r in 0..k {
        for c in 0..cols {
            let u = node[r][c];
            if r + 1 < k {
                let e = b.edge(u, node[r + 1][c]);
                down[r][c] = Some(e);
                match c {
                    1 => {
                        b.deterministic(u, vec![(e, 1.0)]);
                    }
                    2 => {
                        b.outcome(u, eps, vec![(e, 1.0 / eps)])
                            .outcome(u, 1.0 - eps, vec![]);
                    }
                    _ => {}
                }
            }
            if c + 1 < cols {
                right[r][c] = Some(b.edge(u, node[r][c + 1]));
            }
            if r + 1 == k && (c == 1 || c == 2) {
                let e = b.edge(u, t);
                direct[c] = Some(e);
                if c == 1 {
                    b.deterministic(u, vec![(e, 1.0)]);
                } else {
                    b.outcome(u, eps, vec![(e, 1.0 / eps)])
                        .outcome(u, 1.0 - eps, vec![]);
                }
            }
        }
    }
    let id = |e: Option<EdgeId>| e.expect("grid edge").index();
    let horizontal = (0..k)
        .map(|r| {
            let mut p: Vec<usize> = (0..r).map(|i| id(down[i][0])).collect();
            p.extend((0..cols - 1).map(|c| id(right[r][c])));
            p.extend((r..k - 1).map(|i| id(down[i][cols - 1])));
            p
        })
        .collect();
    // a column either finishes along the bottom row or, where it has one,
    // through its own edge to t
    let column = |c: usize, own_exit: bool| -> Vec<usize> {
        let mut p: Vec<usize> = (0..c).map(|j| id(right[0][j])).collect();
        p.extend((0..k - 1).map(|i| id(down[i][c])));
        match direct[c] {
            Some(e) if own_exit => p.push(e.index()),
            _ => p.extend((c..cols - 1).map(|j| id(right[k - 1][j]))),
        }
        p
    };
    let vertical = (0..cols).map(|c| column(c, true)).collect();
    let bottom_row = (0..cols).map(|c| column(c, false)).collect();
    let kf = k as f64;
    let metadata = Metadata {
        expected_opt_lower_bound: Some(2.0 * kf - kf * kf * eps),
        covers: BTreeMap::from([
            ("horizontal".to_string(), horizontal),
            ("vertical".to_string(), vertical),
            ("vertical-bottom-row".to_string(), bottom_row),
        ]),
        ..Metadata::default()
    };
    Ok((b.build()?, metadata))
}

fn kplus1(k: usize, eps: f64) -> Result<(Instance, Metadata)> {
    check_eps(eps)?;
    if k == 0 {
        return Err(Error::Params("k must be at least 1".into()));
    }
    let mut b = InstanceBuilder::new();
    let s = b.node("s");
    let mids: Vec<NodeId> = (1..=k).map(|i| b.node(i.to_string())).collect();
    let t = b.node("t");
    let legs: Vec<EdgeId> = mids.iter().map(|m| b.edge(s, *m)).collect();
    let direct = b.edge(s, t);
    b.deterministic(s, vec![(direct, 1.0)]);
    let mut strands = Vec::with_capacity(k);
    for (m, leg) in mids.iter().zip(&legs) {
        let e = b.edge(*m, t);
        b.outcome(*m, eps, vec![(e, 1.0 / eps)])
            .outcome(*m, 1.0 - eps, vec![]);
        strands.push(vec![leg.index(), e.index()]);
    }
    let miss = (1.0 - eps).powi(k as i32);
    let metadata = Metadata {
        expected_opt: Some((1.0 - miss) / eps + miss),
        covers: BTreeMap::from([("strands".to_string(), strands)]),
        ..Metadata::default()
    };
    Ok((b.build()?, metadata))
}

fn mchoice(values: &[Distribution], m: u32) -> Result<Instance> {
    if values.is_empty() || m == 0 {
        return Err(Error::Params(
            "need at least one candidate and m >= 1".into(),
        ));
    }
    for (i, d) in values.iter().enumerate() {
        check_distribution(d, &format!("candidate {}", i + 1))?;
    }
    let n = values.len();
    let mut b = InstanceBuilder::new();
    let nodes = chain_nodes(&mut b, (1..=n).map(|i| i.to_string()));
    let pick = b.label("pick", m);
    for (i, dist) in values.iter().enumerate() {
        b.edge(nodes[i], nodes[i + 1]);
        let e = b.labeled_edge(nodes[i], nodes[i + 1], vec![pick]);
        for &(p, v) in dist {
            b.outcome(nodes[i], p, vec![(e, v)]);
        }
    }
    b.build()
}

fn vertex_matching(items: usize, bidders: &[Vec<BidderOutcome>]) -> Result<Instance> {
    if items == 0 || bidders.is_empty() {
        return Err(Error::Params(
            "need at least one item and one bidder".into(),
        ));
    }
    let mut b = InstanceBuilder::new();
    let nodes = chain_nodes(&mut b, (1..=bidders.len()).map(|i| format!("b{i}")));
    let labels: Vec<LabelId> = (1..=items)
        .map(|j| b.label(format!("item{j}"), 1))
        .collect();
    for (i, outcomes) in bidders.iter().enumerate() {
        let total: f64 = outcomes.iter().map(|o| o.p).sum();
        if outcomes.is_empty()
            || (total - 1.0).abs() > TOLERANCE
            || outcomes.iter().any(|o| o.values.len() != items)
        {
            return Err(Error::Params(format!(
                "bidder {}: masses must sum to 1 and every outcome must value all {items} items",
                i + 1
            )));
        }
        b.edge(nodes[i], nodes[i + 1]);
        let edges: Vec<EdgeId> = labels
            .iter()
            .map(|l| b.labeled_edge(nodes[i], nodes[i + 1], vec![*l]))
            .collect();
        for o in outcomes {
            b.outcome(
                nodes[i],
                o.p,
                edges
                    .iter()
                    .copied()
                    .zip(o.values.iter().copied())
                    .collect(),
            );
        }
    }
    b.build()
}

/// Random DAG families for property suites.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum RandomFamily {
    /// Layers of one to three nodes with forward edges.
    Layered,
    /// A focal path `0 -> 1 -> ... -> n-1` with random bypasses (width 1).
    FocalPath,
    /// `k` node-disjoint strands between `s` and `t`, no cross edges,
    /// unlabeled.
    Strands { k: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomParams {
    pub family: RandomFamily,
    pub nodes: usize,
    pub max_outcomes: usize,
    /// Number of labels; zero gives an unlabeled instance.
    pub labels: usize,
    /// Maximum number of labels on one edge.
    pub max_labels_per_edge: usize,
    pub max_capacity: u32,
    /// Probability of each optional forward edge.
    pub edge_probability: f64,
}

impl Default for RandomParams {
    fn default() -> Self {
        Self {
            family: RandomFamily::Layered,
            nodes: 6,
            max_outcomes: 3,
            labels: 0,
            max_labels_per_edge: 1,
            max_capacity: 2,
            edge_probability: 0.3,
        }
    }
}

/// Largest node count accepted by [`generate_random_instance`].
pub const RANDOM_NODE_CAP: usize = 64;

/// A random admissible instance, deterministic in `seed`. Values are
/// multiples of 0.5 in `[0, 3]`; masses are exact fractions with integer
/// weights 1 to 5. Every labeled edge gets an unlabeled twin.
pub fn generate_random_instance(params: &RandomParams, seed: u64) -> Result<Instance> {
    let n = params.nodes;
    if !(2..=RANDOM_NODE_CAP).contains(&n) {
        return Err(Error::Params(format!(
            "node count must lie in 2..={RANDOM_NODE_CAP}"
        )));
    }
    if params.max_outcomes == 0 || !(0.0..=1.0).contains(&params.edge_probability) {
        return Err(Error::Params(
            "need max_outcomes >= 1 and an edge probability in [0, 1]".into(),
        ));
    }
    let mut rng = seeded(seed);
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    match params.family {
        RandomFamily::FocalPath => {
            for u in 0..n - 1 {
                pairs.push((u, u + 1));
                for v in u + 1..n {
                    if rng.gen_bool(params.edge_probability) {
                        pairs.push((u, v));
                    }
                }
            }
        }
        RandomFamily::Layered => {
            let mut layers: Vec<Vec<usize>> = vec![vec![0]];
            let mut next = 1;
            while next < n - 1 {
                let size = rng.gen_range(1..=3).min(n - 1 - next);
                layers.push((next..next + size).collect());
                next += size;
            }
            layers.push(vec![n - 1]);
            for l in 1..layers.len() {
                for &v in &layers[l] {
                    let &u = layers[l - 1].choose(&mut rng).expect("nonempty layer");
                    pairs.push((u, v));
                }
                for &u in &layers[l - 1] {
                    if !pairs.iter().any(|&(a, _)| a == u) {
                        let &v = layers[l].choose(&mut rng).expect("nonempty layer");
                        pairs.push((u, v));
                    }
                }
            }
            for u in 0..n {
                for v in u + 1..n {
                    let lu = layers.iter().position(|l| l.contains(&u));
                    let lv = layers.iter().position(|l| l.contains(&v));
                    if lu < lv && rng.gen_bool(params.edge_probability) {
                        pairs.push((u, v));
                    }
                }
            }
        }
        RandomFamily::Strands { k } => {
            if k == 0 || n < k + 2 {
                return Err(Error::Params(
                    "strands need k >= 1 and at least k + 2 nodes".into(),
                ));
            }
            // split the internal nodes 1..n-1 into k contiguous nonempty blocks
            let internal = n - 2;
            let mut cuts: Vec<usize> = (1..internal).collect();
            cuts.shuffle(&mut rng);
            let mut cuts: Vec<usize> = cuts.into_iter().take(k - 1).collect();
            cuts.sort_unstable();
            let mut bounds = vec![0];
            bounds.extend(cuts);
            bounds.push(internal);
            for w in bounds.windows(2) {
                let strand: Vec<usize> = (w[0] + 1..=w[1]).collect();
                pairs.push((0, strand[0]));
                for p in strand.windows(2) {
                    pairs.push((p[0], p[1]));
                }
                pairs.push((*strand.last().expect("nonempty strand"), n - 1));
                for (i, &u) in strand.iter().enumerate() {
                    if rng.gen_bool(params.edge_probability) {
                        pairs.push((0, u));
                    }
                    for &v in strand[i + 1..].iter().chain([&(n - 1)]) {
                        if rng.gen_bool(params.edge_probability) {
                            pairs.push((u, v));
                        }
                    }
                }
            }
            if rng.gen_bool(0.5) {
                pairs.push((0, n - 1));
            }
        }
    }
    pairs.sort_unstable();

    let labeled_family =
        params.labels > 0 && !matches!(params.family, RandomFamily::Strands { .. });
    let mut edges: Vec<(NodeId, NodeId, Vec<LabelId>)> = Vec::new();
    for &(u, v) in &pairs {
        // the first edge between a pair stays unlabeled and serves as twin
        let twin_exists = edges
            .iter()
            .any(|(a, b, l)| a.index() == u && b.index() == v && l.is_empty());
        let mut labels = Vec::new();
        if labeled_family && twin_exists && rng.gen_bool(0.5) {
            let count = rng.gen_range(1..=params.max_labels_per_edge.clamp(1, params.labels));
            let mut all: Vec<usize> = (0..params.labels).collect();
            all.shuffle(&mut rng);
            labels = all.into_iter().take(count).map(LabelId).collect();
        }
        edges.push((NodeId(u), NodeId(v), labels));
        if labeled_family && !twin_exists && rng.gen_bool(0.5) {
            let count = rng.gen_range(1..=params.max_labels_per_edge.clamp(1, params.labels));
            let mut all: Vec<usize> = (0..params.labels).collect();
            all.shuffle(&mut rng);
            edges.push((
                NodeId(u),
                NodeId(v),
                all.into_iter().take(count).map(LabelId).collect(),
            ));
        }
    }
    let labels: Vec<Label> = if labeled_family {
        (0..params.labels)
            .map(|l| Label {
                name: format!("l{l}"),
                capacity: rng.gen_range(1..=params.max_capacity.max(1)),
            })
            .collect()
    } else {
        Vec::new()
    };
    let names = (0..n)
        .map(|i| match i {
            0 => "s".to_string(),
            _ if i == n - 1 => "t".to_string(),
            _ => format!("v{i}"),
        })
        .collect();
    let graph = InstanceGraph::new(names, edges, labels)?;
    let mut tables = Vec::with_capacity(n);
    for u in graph.nodes() {
        let degree = graph.out_edges(u).len();
        if degree == 0 {
            tables.push(Vec::new());
            continue;
        }
        let count = rng.gen_range(1..=params.max_outcomes);
        let weights: Vec<i64> = (0..count).map(|_| rng.gen_range(1..=5)).collect();
        let total: i64 = weights.iter().sum();
        tables.push(
            weights
                .iter()
                .map(|&w| {
                    let exact = Rational64::new(w, total);
                    Outcome {
                        p: w as f64 / total as f64,
                        exact_p: Some(exact),
                        values: (0..degree)
                            .map(|_| rng.gen_range(0..=6) as f64 * 0.5)
                            .collect(),
                    }
                })
                .collect(),
        );
    }
    let outcomes = OutcomeTable::new(tables, &graph);
    Instance::new(graph, outcomes).validated()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cover::{min_path_cover, width};
    use crate::graph::Limits;
    use crate::oracle::{expected_opt, Evaluation, OfflineSpec};

    #[test]
    fn classic_fig_layout() {
        let g = generate_paper_instance(&GeneratorParams::Classic {
            candidates: vec![vec![(0.5, 1.0), (0.5, 0.0)]; 5],
            bypass_last: false,
        })
        .unwrap();
        assert_eq!(g.instance.graph.node_count(), 6);
        assert_eq!(g.instance.graph.edge_count(), 9);
        assert_eq!(g.instance.realization_count(), 32);
        assert_eq!(width(&g.instance.graph), 1);
    }

    #[test]
    fn grid_and_kplus1_metadata() {
        let g = generate_paper_instance(&GeneratorParams::Grid {
            k: 3,
            eps: 0.1,
            cols: None,
        })
        .unwrap();
        assert!((g.metadata.expected_opt_lower_bound.unwrap() - 5.1).abs() < 1e-12);
        assert_eq!(width(&g.instance.graph), 3);
        for name in ["horizontal", "vertical", "vertical-bottom-row"] {
            crate::cover::PathCover::new(&g.instance.graph, g.cover(name).unwrap()).unwrap();
        }
        let g = generate_paper_instance(&GeneratorParams::Kplus1 { k: 2, eps: 0.5 }).unwrap();
        assert!((g.metadata.expected_opt.unwrap() - 1.75).abs() < 1e-12);
        let e = expected_opt(
            &g.instance,
            &OfflineSpec::Opt,
            Evaluation::Exact,
            &Limits::default(),
        )
        .unwrap();
        assert!((e.mean - 1.75).abs() < 1e-12);
        assert_eq!(min_path_cover(&g.instance.graph).unwrap().k(), 2);
    }

    #[test]
    fn overtime_and_markets_are_valid() {
        let law = vec![(0.5, 1.0), (0.5, 2.0)];
        let g = generate_paper_instance(&GeneratorParams::Overtime {
            values: vec![law.clone(); 5],
            terms: vec![1, 2, 3, 4, 5],
        })
        .unwrap();
        assert_eq!(g.instance.graph.edge_count(), 15);
        assert_eq!(width(&g.instance.graph), 1);
        let g = generate_paper_instance(&GeneratorParams::Markets {
            values: vec![vec![law.clone(); 4]; 2],
            terms: vec![1, 2],
        })
        .unwrap();
        assert_eq!(width(&g.instance.graph), 2);
        let g = generate_paper_instance(&GeneratorParams::Overtime {
            values: vec![law; 4],
            terms: vec![2],
        })
        .unwrap();
        assert_eq!(width(&g.instance.graph), 1);
    }

    #[test]
    fn random_instances_are_deterministic() {
        for family in [
            RandomFamily::Layered,
            RandomFamily::FocalPath,
            RandomFamily::Strands { k: 2 },
        ] {
            let params = RandomParams {
                family,
                labels: 2,
                max_labels_per_edge: 2,
                ..RandomParams::default()
            };
            let a = generate_random_instance(&params, 4).unwrap();
            let b = generate_random_instance(&params, 4).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn bad_params_are_rejected() {
        assert!(generate_paper_instance(&GeneratorParams::Upper49 { eps: 1.5 }).is_err());
        assert!(generate_paper_instance(&GeneratorParams::Grid {
            k: 3,
            eps: 0.1,
            cols: Some(3)
        })
        .is_err());
        assert!(generate_paper_instance(&GeneratorParams::Classic {
            candidates: vec![vec![(0.6, 1.0), (0.5, 0.0)]],
            bypass_last: false
        })
        .is_err());
    }
}
