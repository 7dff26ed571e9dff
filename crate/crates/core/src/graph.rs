//! Stochastic DAG instances.
//!
//! An [`Instance`] couples an [`InstanceGraph`] (a multigraph whose nodes are
//! stored in topological order, first node `s`, last node `t`) with an
//! [`OutcomeTable`]. Each node owns a finite list of outcomes; an outcome
//! fixes the values of every edge leaving that node at once, so edges that
//! share a source can be arbitrarily correlated while edges leaving different
//! nodes are independent. The joint law of all edge values is the product of
//! the per-node tables.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use num_rational::Rational64;
use num_traits::CheckedAdd;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{CompensatedSum, TOLERANCE};

/// Default cap on the number of realizations enumerated exactly.
pub const DEFAULT_ENUMERATION_CAP: u128 = 10_000_000;
/// Default cap on DP state spaces (node x residual-capacity vector).
pub const DEFAULT_STATE_CAP: u128 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelId(pub usize);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl EdgeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl LabelId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Enumeration and state-space limits shared by every exact computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub enumeration_cap: u128,
    pub state_cap: u128,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            state_cap: DEFAULT_STATE_CAP,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeDef {
    pub id: EdgeId,
    pub src: NodeId,
    pub dst: NodeId,
    /// Sorted, deduplicated.
    pub labels: Vec<LabelId>,
}

impl EdgeDef {
    pub fn is_labeled(&self) -> bool {
        !self.labels.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Label {
    pub name: String,
    pub capacity: u32,
}

/// DAG multigraph. Node `0` is `s`, the last node is `t`; the node order is
/// the stored topological order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceGraph {
    node_names: Vec<String>,
    edges: Vec<EdgeDef>,
    labels: Vec<Label>,
    out: Vec<Vec<EdgeId>>,
    inc: Vec<Vec<EdgeId>>,
    slot: Vec<usize>,
}

impl InstanceGraph {
    /// Builds a graph; edges receive ids `0..edges.len()` in input order.
    pub fn new(
        node_names: Vec<String>,
        edges: Vec<(NodeId, NodeId, Vec<LabelId>)>,
        labels: Vec<Label>,
    ) -> Result<Self> {
        if node_names.len() < 2 {
            return Err(Error::Schema(
                "an instance needs at least the nodes s and t".into(),
            ));
        }
        let mut seen = BTreeSet::new();
        for name in &node_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::Schema(format!("duplicate node id {name:?}")));
            }
        }
        let n = node_names.len();
        let mut defs = Vec::with_capacity(edges.len());
        for (i, (src, dst, mut ls)) in edges.into_iter().enumerate() {
            if src.index() >= n || dst.index() >= n {
                return Err(Error::Schema(format!(
                    "edge {i} references an unknown node"
                )));
            }
            if let Some(l) = ls.iter().find(|l| l.index() >= labels.len()) {
                return Err(Error::Schema(format!(
                    "edge {i} references unknown label {}",
                    l.0
                )));
            }
            ls.sort_unstable();
            ls.dedup();
            defs.push(EdgeDef {
                id: EdgeId(i),
                src,
                dst,
                labels: ls,
            });
        }
        let mut out = vec![Vec::new(); n];
        let mut inc = vec![Vec::new(); n];
        let mut slot = vec![0; defs.len()];
        for e in &defs {
            slot[e.id.index()] = out[e.src.index()].len();
            out[e.src.index()].push(e.id);
            inc[e.dst.index()].push(e.id);
        }
        Ok(Self {
            node_names,
            edges: defs,
            labels,
            out,
            inc,
            slot,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn source(&self) -> NodeId {
        NodeId(0)
    }

    pub fn sink(&self) -> NodeId {
        NodeId(self.node_names.len() - 1)
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.node_names.len()).map(NodeId)
    }

    pub fn node_name(&self, node: NodeId) -> &str {
        &self.node_names[node.index()]
    }

    pub fn node_names(&self) -> &[String] {
        &self.node_names
    }

    pub fn node_by_name(&self, name: &str) -> Option<NodeId> {
        self.node_names.iter().position(|n| n == name).map(NodeId)
    }

    pub fn edges(&self) -> &[EdgeDef] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> &EdgeDef {
        &self.edges[id.index()]
    }

    /// Outgoing edges of `node`, sorted by id.
    pub fn out_edges(&self, node: NodeId) -> &[EdgeId] {
        &self.out[node.index()]
    }

    pub fn in_edges(&self, node: NodeId) -> &[EdgeId] {
        &self.inc[node.index()]
    }

    /// Position of `edge` in the outgoing list of its source; this is the
    /// index of its value inside each outcome of the source node.
    pub fn slot(&self, edge: EdgeId) -> usize {
        self.slot[edge.index()]
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn label(&self, id: LabelId) -> &Label {
        &self.labels[id.index()]
    }

    pub fn label_by_name(&self, name: &str) -> Option<LabelId> {
        self.labels.iter().position(|l| l.name == name).map(LabelId)
    }

    /// Maximum number of labels carried by a single edge.
    pub fn max_labels(&self) -> usize {
        self.edges.iter().map(|e| e.labels.len()).max().unwrap_or(0)
    }

    pub fn is_unlabeled(&self) -> bool {
        self.edges.iter().all(|e| e.labels.is_empty())
    }

    /// Number of edges carrying each label.
    pub fn label_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.labels.len()];
        for e in &self.edges {
            for l in &e.labels {
                counts[l.index()] += 1;
            }
        }
        counts
    }

    /// The unlabeled edge from `src` to `dst` with the smallest id.
    pub fn unlabeled_edge_between(&self, src: NodeId, dst: NodeId) -> Option<EdgeId> {
        self.out_edges(src)
            .iter()
            .copied()
            .find(|&e| self.edge(e).dst == dst && !self.edge(e).is_labeled())
    }

    /// Forward reachability (reflexive) from `start`, optionally restricted to
    /// unlabeled edges.
    pub fn reachable_from(&self, start: NodeId, unlabeled_only: bool) -> Vec<bool> {
        let mut seen = vec![false; self.node_count()];
        let mut queue = VecDeque::from([start]);
        seen[start.index()] = true;
        while let Some(u) = queue.pop_front() {
            for &e in self.out_edges(u) {
                let def = self.edge(e);
                if unlabeled_only && def.is_labeled() {
                    continue;
                }
                if !seen[def.dst.index()] {
                    seen[def.dst.index()] = true;
                    queue.push_back(def.dst);
                }
            }
        }
        seen
    }

    /// Fewest-edge path from `from` to `to` (ties broken towards smaller edge
    /// ids), optionally restricted to unlabeled edges.
    pub fn shortest_path(
        &self,
        from: NodeId,
        to: NodeId,
        unlabeled_only: bool,
    ) -> Option<Vec<EdgeId>> {
        let mut pred: Vec<Option<EdgeId>> = vec![None; self.node_count()];
        let mut seen = vec![false; self.node_count()];
        seen[from.index()] = true;
        let mut queue = VecDeque::from([from]);
        while let Some(u) = queue.pop_front() {
            if u == to {
                break;
            }
            for &e in self.out_edges(u) {
                let def = self.edge(e);
                if unlabeled_only && def.is_labeled() {
                    continue;
                }
                if !seen[def.dst.index()] {
                    seen[def.dst.index()] = true;
                    pred[def.dst.index()] = Some(e);
                    queue.push_back(def.dst);
                }
            }
        }
        if !seen[to.index()] {
            return None;
        }
        let mut path = Vec::new();
        let mut cur = to;
        while cur != from {
            let e = pred[cur.index()]?;
            path.push(e);
            cur = self.edge(e).src;
        }
        path.reverse();
        Some(path)
    }

    /// Whether `edges` is a walk from `s` to `t` along existing edges.
    pub fn is_st_path(&self, edges: &[EdgeId]) -> bool {
        if edges.iter().any(|e| e.index() >= self.edge_count()) {
            return false;
        }
        let mut cur = self.source();
        for &e in edges {
            if self.edge(e).src != cur {
                return false;
            }
            cur = self.edge(e).dst;
        }
        cur == self.sink()
    }

    /// Node sequence visited by an edge path starting at `s`.
    pub fn path_nodes(&self, edges: &[EdgeId]) -> Vec<NodeId> {
        let mut nodes = vec![self.source()];
        nodes.extend(edges.iter().map(|&e| self.edge(e).dst));
        nodes
    }
}

/// One entry of a node's outcome list.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub p: f64,
    /// Exact mass, when the instance was given rational probabilities.
    pub exact_p: Option<Rational64>,
    /// Value of each outgoing edge, aligned with [`InstanceGraph::out_edges`].
    pub values: Vec<f64>,
}

impl Outcome {
    pub fn new(p: f64, values: Vec<f64>) -> Self {
        Self {
            p,
            exact_p: None,
            values,
        }
    }
}

/// Per-node outcome lists. A node without outgoing edges (typically `t`)
/// carries a single empty outcome of mass 1.
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeTable {
    nodes: Vec<Vec<Outcome>>,
}

impl OutcomeTable {
    pub fn new(mut nodes: Vec<Vec<Outcome>>, graph: &InstanceGraph) -> Self {
        nodes.resize(graph.node_count(), Vec::new());
        for (i, list) in nodes.iter_mut().enumerate() {
            if list.is_empty() && graph.out_edges(NodeId(i)).is_empty() {
                list.push(Outcome {
                    p: 1.0,
                    exact_p: Some(Rational64::from_integer(1)),
                    values: Vec::new(),
                });
            }
        }
        Self { nodes }
    }

    pub fn outcomes(&self, node: NodeId) -> &[Outcome] {
        &self.nodes[node.index()]
    }

    pub fn outcome(&self, node: NodeId, index: usize) -> &Outcome {
        &self.nodes[node.index()][index]
    }

    pub fn counts(&self) -> Vec<usize> {
        self.nodes.iter().map(Vec::len).collect()
    }
}

/// One concrete value assignment to all edges.
#[derive(Clone, Debug, PartialEq)]
pub struct Realization {
    /// Chosen outcome index per node.
    pub outcomes: Vec<usize>,
    /// Realized value per edge id.
    pub values: Vec<f64>,
    pub mass: f64,
}

impl Realization {
    pub fn value(&self, edge: EdgeId) -> f64 {
        self.values[edge.index()]
    }
}

/// A graph together with its outcome tables.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub graph: InstanceGraph,
    pub outcomes: OutcomeTable,
}

impl Instance {
    pub fn new(graph: InstanceGraph, outcomes: OutcomeTable) -> Self {
        Self { graph, outcomes }
    }

    /// Returns the instance if it is admissible, else the violations.
    pub fn validated(self) -> Result<Self> {
        let report = validate_instance(&self);
        if report.is_valid() {
            Ok(self)
        } else {
            Err(Error::Invalid(report))
        }
    }

    /// Value of `edge` when its source node realizes outcome `outcome`.
    #[inline]
    pub fn value_at(&self, edge: EdgeId, outcome: usize) -> f64 {
        let src = self.graph.edge(edge).src;
        self.outcomes.outcome(src, outcome).values[self.graph.slot(edge)]
    }

    /// Fills `values` (indexed by edge id) from per-node outcome indices.
    pub fn edge_values_into(&self, outcomes: &[usize], values: &mut Vec<f64>) {
        values.clear();
        values.extend(self.graph.edges().iter().map(|e| {
            self.outcomes.outcome(e.src, outcomes[e.src.index()]).values[self.graph.slot(e.id)]
        }));
    }

    pub fn realization(&self, outcomes: Vec<usize>) -> Realization {
        let mut values = Vec::new();
        self.edge_values_into(&outcomes, &mut values);
        let mass = self
            .graph
            .nodes()
            .map(|u| self.outcomes.outcome(u, outcomes[u.index()]).p)
            .product();
        Realization {
            outcomes,
            values,
            mass,
        }
    }

    /// Expected value of a single edge.
    pub fn mean_value(&self, edge: EdgeId) -> f64 {
        let src = self.graph.edge(edge).src;
        let slot = self.graph.slot(edge);
        self.outcomes
            .outcomes(src)
            .iter()
            .map(|o| o.p * o.values[slot])
            .sum::<CompensatedSum>()
            .value()
    }

    /// Number of realizations (product of per-node outcome counts), saturating.
    pub fn realization_count(&self) -> u128 {
        self.realization_count_except(None)
    }

    pub(crate) fn realization_count_except(&self, fixed: Option<NodeId>) -> u128 {
        self.outcomes
            .counts()
            .into_iter()
            .enumerate()
            .filter(|(i, _)| Some(NodeId(*i)) != fixed)
            .fold(1u128, |acc, (_, c)| acc.saturating_mul(c as u128))
    }

    pub(crate) fn check_enumeration(&self, fixed: Option<NodeId>, limits: &Limits) -> Result<()> {
        let count = self.realization_count_except(fixed);
        if count > limits.enumeration_cap {
            return Err(Error::EnumerationTooLarge {
                count,
                cap: limits.enumeration_cap,
            });
        }
        Ok(())
    }

    /// Iterates over every realization exactly once.
    pub fn realizations(&self, limits: &Limits) -> Result<Realizations<'_>> {
        self.check_enumeration(None, limits)?;
        Ok(Realizations {
            instance: self,
            current: Some(vec![0; self.graph.node_count()]),
        })
    }

    /// Calls `f(outcomes, mass)` for every joint outcome; with `fixed =
    /// Some((u, o))` node `u` is held at outcome `o` and `mass` is the
    /// conditional mass of the remaining nodes.
    pub(crate) fn for_each_joint<F>(
        &self,
        fixed: Option<(NodeId, usize)>,
        limits: &Limits,
        mut f: F,
    ) -> Result<()>
    where
        F: FnMut(&[usize], f64),
    {
        self.check_enumeration(fixed.map(|(u, _)| u), limits)?;
        let counts = self.outcomes.counts();
        let n = counts.len();
        let mut cur = vec![0usize; n];
        if let Some((u, o)) = fixed {
            cur[u.index()] = o;
        }
        let free: Vec<usize> = (0..n)
            .filter(|&i| fixed.map_or(true, |(u, _)| u.index() != i) && counts[i] > 1)
            .collect();
        // mass of nodes with a single outcome never changes
        let base: f64 = (0..n)
            .filter(|&i| fixed.map_or(true, |(u, _)| u.index() != i) && counts[i] == 1)
            .map(|i| self.outcomes.outcome(NodeId(i), 0).p)
            .product();
        loop {
            let mass = free.iter().fold(base, |acc, &i| {
                acc * self.outcomes.outcome(NodeId(i), cur[i]).p
            });
            f(&cur, mass);
            let mut advanced = false;
            for &i in free.iter().rev() {
                cur[i] += 1;
                if cur[i] < counts[i] {
                    advanced = true;
                    break;
                }
                cur[i] = 0;
            }
            if !advanced {
                return Ok(());
            }
        }
    }

    /// Draws an outcome index for `node` with probability equal to its mass.
    pub fn sample_outcome<R: Rng + ?Sized>(&self, node: NodeId, rng: &mut R) -> usize {
        let list = self.outcomes.outcomes(node);
        if list.len() == 1 {
            return 0;
        }
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (i, o) in list.iter().enumerate() {
            acc += o.p;
            if u < acc {
                return i;
            }
        }
        list.len() - 1
    }

    /// Draws a full realization.
    pub fn sample_realization<R: Rng + ?Sized>(&self, rng: &mut R) -> Realization {
        let outcomes = self
            .graph
            .nodes()
            .map(|u| self.sample_outcome(u, rng))
            .collect();
        self.realization(outcomes)
    }
}

/// Iterator over all realizations, in odometer order (last node fastest).
pub struct Realizations<'a> {
    instance: &'a Instance,
    current: Option<Vec<usize>>,
}

impl Iterator for Realizations<'_> {
    type Item = Realization;

    fn next(&mut self) -> Option<Realization> {
        let cur = self.current.take()?;
        let counts = self.instance.outcomes.counts();
        let mut next = cur.clone();
        let mut advanced = false;
        for i in (0..next.len()).rev() {
            next[i] += 1;
            if next[i] < counts[i] {
                advanced = true;
                break;
            }
            next[i] = 0;
        }
        if advanced {
            self.current = Some(next);
        }
        Some(self.instance.realization(cur))
    }
}

/// Residual-capacity encoding for labels that can actually bind.
///
/// A label whose capacity is at least the number of edges carrying it never
/// constrains a path and is left out of the state. The remaining residual
/// capacities are packed into a mixed-radix integer.
#[derive(Clone, Debug)]
pub struct CapacityStates {
    tracked: Vec<LabelId>,
    strides: Vec<usize>,
    radices: Vec<usize>,
    /// Per edge: (stride, radix) for every tracked label it carries.
    requirements: Vec<Vec<(usize, usize)>>,
    deltas: Vec<usize>,
    initial: usize,
    count: usize,
}

impl CapacityStates {
    /// `per_node` is the number of node positions the caller will multiply the
    /// state count by when checking against `limits.state_cap`.
    pub fn new(graph: &InstanceGraph, per_node: usize, limits: &Limits) -> Result<Self> {
        let counts = graph.label_counts();
        let tracked: Vec<LabelId> = (0..graph.labels().len())
            .map(LabelId)
            .filter(|l| (graph.label(*l).capacity as usize) < counts[l.index()])
            .collect();
        let mut strides = Vec::with_capacity(tracked.len());
        let mut radices = Vec::with_capacity(tracked.len());
        let mut total: u128 = 1;
        for l in &tracked {
            let radix = graph.label(*l).capacity as u128 + 1;
            strides.push(total as usize);
            radices.push(radix as usize);
            total = total.saturating_mul(radix);
            if total.saturating_mul(per_node.max(1) as u128) > limits.state_cap {
                return Err(Error::StateSpaceTooLarge {
                    states: total.saturating_mul(per_node.max(1) as u128),
                    cap: limits.state_cap,
                });
            }
        }
        let mut requirements = vec![Vec::new(); graph.edge_count()];
        let mut deltas = vec![0; graph.edge_count()];
        for e in graph.edges() {
            for l in &e.labels {
                if let Some(j) = tracked.iter().position(|t| t == l) {
                    requirements[e.id.index()].push((strides[j], radices[j]));
                    deltas[e.id.index()] += strides[j];
                }
            }
        }
        let initial = tracked
            .iter()
            .zip(&strides)
            .map(|(l, s)| graph.label(*l).capacity as usize * s)
            .sum();
        Ok(Self {
            tracked,
            strides,
            radices,
            requirements,
            deltas,
            initial,
            count: total as usize,
        })
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// State with every tracked label at full capacity.
    pub fn initial(&self) -> usize {
        self.initial
    }

    /// State after taking `edge` from `state`, or `None` if some label of the
    /// edge has no residual capacity.
    #[inline]
    pub fn take(&self, state: usize, edge: EdgeId) -> Option<usize> {
        let reqs = &self.requirements[edge.index()];
        if reqs
            .iter()
            .all(|&(stride, radix)| (state / stride) % radix > 0)
        {
            Some(state - self.deltas[edge.index()])
        } else {
            None
        }
    }

    #[inline]
    pub fn can_take(&self, state: usize, edge: EdgeId) -> bool {
        self.requirements[edge.index()]
            .iter()
            .all(|&(stride, radix)| (state / stride) % radix > 0)
    }

    /// Residual capacity of each tracked label in `state`.
    pub fn residuals(&self, state: usize) -> Vec<(LabelId, usize)> {
        self.tracked
            .iter()
            .zip(self.strides.iter().zip(&self.radices))
            .map(|(l, (s, r))| (*l, (state / s) % r))
            .collect()
    }

    pub fn tracked(&self) -> &[LabelId] {
        &self.tracked
    }
}

/// One violated model assumption.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Cycle {
        nodes: Vec<String>,
    },
    OrderViolation {
        edge: usize,
    },
    Unreachable {
        node: String,
    },
    CannotReachSink {
        node: String,
    },
    MissingUnlabeledTwin {
        edge: usize,
    },
    ZeroCapacity {
        label: String,
    },
    NoOutcomes {
        node: String,
    },
    NonPositiveMass {
        node: String,
        outcome: usize,
        p: f64,
    },
    MassSum {
        node: String,
        sum: f64,
    },
    ValueArity {
        node: String,
        outcome: usize,
        expected: usize,
        found: usize,
    },
    BadValue {
        node: String,
        outcome: usize,
        edge: usize,
        value: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Cycle { nodes } => write!(f, "cycle through nodes {}", nodes.join(", ")),
            Violation::OrderViolation { edge } => {
                write!(
                    f,
                    "edge {edge} points backwards in the stored topological order"
                )
            }
            Violation::Unreachable { node } => write!(f, "node {node} is unreachable from s"),
            Violation::CannotReachSink { node } => write!(f, "node {node} cannot reach t"),
            Violation::MissingUnlabeledTwin { edge } => {
                write!(f, "labeled edge {edge} is missing parallel unlabeled edge")
            }
            Violation::ZeroCapacity { label } => write!(f, "label {label} has capacity 0"),
            Violation::NoOutcomes { node } => {
                write!(f, "node {node} has outgoing edges but no outcomes")
            }
            Violation::NonPositiveMass { node, outcome, p } => {
                write!(
                    f,
                    "node {node} outcome {outcome} has mass {p} outside (0,1]"
                )
            }
            Violation::MassSum { node, sum } => write!(f, "node {node}: masses sum to {sum} ≠ 1"),
            Violation::ValueArity {
                node,
                outcome,
                expected,
                found,
            } => write!(
                f,
                "node {node} outcome {outcome} has {found} values for {expected} outgoing edges"
            ),
            Violation::BadValue {
                node,
                outcome,
                edge,
                value,
            } => write!(
                f,
                "node {node} outcome {outcome}: edge {edge} has invalid value {value}"
            ),
        }
    }
}

/// Result of [`validate_instance`]: empty violations iff admissible.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "  - {v}")?;
        }
        for w in &self.warnings {
            writeln!(f, "  warning: {w}")?;
        }
        Ok(())
    }
}

/// Checks every model assumption and lists each violation found.
pub fn validate_instance(instance: &Instance) -> ValidationReport {
    validate_with_limits(instance, &Limits::default())
}

pub fn validate_with_limits(instance: &Instance, limits: &Limits) -> ValidationReport {
    let g = &instance.graph;
    let mut report = ValidationReport::default();
    let name = |u: NodeId| g.node_name(u).to_string();

    // Kahn's algorithm; leftover nodes lie on or behind a cycle.
    let mut indeg: Vec<usize> = g.nodes().map(|u| g.in_edges(u).len()).collect();
    let mut queue: VecDeque<NodeId> = g.nodes().filter(|u| indeg[u.index()] == 0).collect();
    let mut removed = 0;
    while let Some(u) = queue.pop_front() {
        removed += 1;
        for &e in g.out_edges(u) {
            let v = g.edge(e).dst;
            indeg[v.index()] -= 1;
            if indeg[v.index()] == 0 {
                queue.push_back(v);
            }
        }
    }
    let acyclic = removed == g.node_count();
    if !acyclic {
        let nodes = g
            .nodes()
            .filter(|u| indeg[u.index()] > 0)
            .map(name)
            .collect();
        report.violations.push(Violation::Cycle { nodes });
    }
    for e in g.edges() {
        if e.src > e.dst {
            report
                .violations
                .push(Violation::OrderViolation { edge: e.id.index() });
        }
    }

    let from_s = g.reachable_from(g.source(), false);
    let mut to_t = vec![false; g.node_count()];
    to_t[g.sink().index()] = true;
    let mut queue = VecDeque::from([g.sink()]);
    while let Some(v) = queue.pop_front() {
        for &e in g.in_edges(v) {
            let u = g.edge(e).src;
            if !to_t[u.index()] {
                to_t[u.index()] = true;
                queue.push_back(u);
            }
        }
    }
    for u in g.nodes() {
        if !from_s[u.index()] {
            report
                .violations
                .push(Violation::Unreachable { node: name(u) });
        }
        if !to_t[u.index()] {
            report
                .violations
                .push(Violation::CannotReachSink { node: name(u) });
        }
    }

    for e in g.edges().iter().filter(|e| e.is_labeled()) {
        if g.unlabeled_edge_between(e.src, e.dst).is_none() {
            report
                .violations
                .push(Violation::MissingUnlabeledTwin { edge: e.id.index() });
        }
    }
    for l in g.labels() {
        if l.capacity == 0 {
            report.violations.push(Violation::ZeroCapacity {
                label: l.name.clone(),
            });
        }
    }

    for u in g.nodes() {
        let outs = g.out_edges(u);
        let list = instance.outcomes.outcomes(u);
        if list.is_empty() {
            report
                .violations
                .push(Violation::NoOutcomes { node: name(u) });
            continue;
        }
        let mut total = CompensatedSum::new();
        let mut exact_total = Some(Rational64::from_integer(0));
        for (i, o) in list.iter().enumerate() {
            if !(o.p.is_finite() && o.p > 0.0 && o.p <= 1.0 + TOLERANCE) {
                report.violations.push(Violation::NonPositiveMass {
                    node: name(u),
                    outcome: i,
                    p: o.p,
                });
            }
            total.add(o.p);
            exact_total = match (exact_total, o.exact_p) {
                (Some(acc), Some(p)) => acc.checked_add(&p),
                _ => None,
            };
            if o.values.len() != outs.len() {
                report.violations.push(Violation::ValueArity {
                    node: name(u),
                    outcome: i,
                    expected: outs.len(),
                    found: o.values.len(),
                });
                continue;
            }
            for (&e, &v) in outs.iter().zip(&o.values) {
                if !(v.is_finite() && v >= 0.0) {
                    report.violations.push(Violation::BadValue {
                        node: name(u),
                        outcome: i,
                        edge: e.index(),
                        value: v,
                    });
                }
            }
        }
        let mass_ok = match exact_total {
            Some(exact) => exact == Rational64::from_integer(1),
            None => (total.value() - 1.0).abs() <= TOLERANCE,
        };
        if !mass_ok {
            report.violations.push(Violation::MassSum {
                node: name(u),
                sum: total.value(),
            });
        }
    }

    if report.is_valid() {
        let count = instance.realization_count();
        if count > limits.enumeration_cap {
            report.warnings.push(format!(
                "{count} realizations exceed the enumeration cap {}; exact oracles need Monte Carlo",
                limits.enumeration_cap
            ));
        }
        if let Err(Error::StateSpaceTooLarge { states, cap }) =
            CapacityStates::new(g, g.node_count(), limits)
        {
            report.warnings.push(format!(
                "label-capacity state space ({states}) exceeds the cap {cap}"
            ));
        }
    }
    report
}

/// Incremental construction of instances, used by the generators and tests.
#[derive(Clone, Debug, Default)]
pub struct InstanceBuilder {
    nodes: Vec<String>,
    labels: Vec<Label>,
    edges: Vec<(NodeId, NodeId, Vec<LabelId>)>,
    outcomes: Vec<Vec<SparseOutcome>>,
}

/// A mass with the values of the listed edges; unlisted edges are worth 0.
type SparseOutcome = (f64, Vec<(EdgeId, f64)>);

impl InstanceBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn node(&mut self, name: impl Into<String>) -> NodeId {
        self.nodes.push(name.into());
        self.outcomes.push(Vec::new());
        NodeId(self.nodes.len() - 1)
    }

    pub fn label(&mut self, name: impl Into<String>, capacity: u32) -> LabelId {
        self.labels.push(Label {
            name: name.into(),
            capacity,
        });
        LabelId(self.labels.len() - 1)
    }

    pub fn edge(&mut self, src: NodeId, dst: NodeId) -> EdgeId {
        self.labeled_edge(src, dst, Vec::new())
    }

    pub fn labeled_edge(&mut self, src: NodeId, dst: NodeId, labels: Vec<LabelId>) -> EdgeId {
        self.edges.push((src, dst, labels));
        EdgeId(self.edges.len() - 1)
    }

    /// Adds an outcome to `node`; edges of the node not listed get value 0.
    pub fn outcome(&mut self, node: NodeId, p: f64, values: Vec<(EdgeId, f64)>) -> &mut Self {
        self.outcomes[node.index()].push((p, values));
        self
    }

    /// Makes every outgoing edge of `node` deterministic with the given values.
    pub fn deterministic(&mut self, node: NodeId, values: Vec<(EdgeId, f64)>) -> &mut Self {
        self.outcome(node, 1.0, values)
    }

    pub fn build(self) -> Result<Instance> {
        let graph = InstanceGraph::new(self.nodes, self.edges, self.labels)?;
        let mut tables = Vec::with_capacity(graph.node_count());
        for (i, list) in self.outcomes.into_iter().enumerate() {
            let u = NodeId(i);
            let outs = graph.out_edges(u);
            let mut converted = Vec::with_capacity(list.len());
            if list.is_empty() && !outs.is_empty() {
                // nodes without explicit outcomes are deterministic zero
                converted.push(Outcome::new(1.0, vec![0.0; outs.len()]));
            }
            for (p, values) in list {
                let mut row = vec![0.0; outs.len()];
                for (e, v) in values {
                    if graph.edge(e).src != u {
                        return Err(Error::Schema(format!(
                            "edge {e} does not leave node {}",
                            graph.node_name(u)
                        )));
                    }
                    row[graph.slot(e)] = v;
                }
                converted.push(Outcome::new(p, row));
            }
            tables.push(converted);
        }
        let outcomes = OutcomeTable::new(tables, &graph);
        Ok(Instance::new(graph, outcomes))
    }
}
