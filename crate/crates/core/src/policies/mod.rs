//! Online policies.
//!
//! All four policies walk a focal path and, at every node, mimic an offline
//! strategy locally: they draw a tentative edge from the offline strategy's
//! conditional law given the node's outcome and accept it with a probability
//! chosen so that every off-path edge is taken with a fixed fraction of its
//! offline probability.

mod contraction;
mod disjoint;
mod focal;

pub use contraction::{build_contracted_instance, ArtificialEdge, ContractedInstance};
pub use disjoint::{build_disjoint_plan, DisjointPlan};
pub use focal::{
    feasibility_probabilities, FeasibilityMode, FeasibilityProbs, FocalEvaluation, FocalPolicy,
    FocalRule,
};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{EdgeId, InstanceGraph, NodeId};
use crate::numeric::TOLERANCE;
use crate::oracle::EdgeProbabilities;

/// An s,t-path used as the policy's default route, with node positions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FocalPath {
    edges: Vec<EdgeId>,
    nodes: Vec<NodeId>,
    #[serde(skip)]
    position: Vec<Option<usize>>,
}

impl FocalPath {
    pub fn new(graph: &InstanceGraph, edges: Vec<EdgeId>) -> Result<Self> {
        if !graph.is_st_path(&edges) {
            return Err(Error::FocalPath("not an s,t-path".into()));
        }
        let nodes = graph.path_nodes(&edges);
        let mut position = vec![None; graph.node_count()];
        for (i, u) in nodes.iter().enumerate() {
            position[u.index()] = Some(i);
        }
        Ok(Self {
            edges,
            nodes,
            position,
        })
    }

    pub fn edges(&self) -> &[EdgeId] {
        &self.edges
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    /// Number of nodes on the path.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn position(&self, node: NodeId) -> Option<usize> {
        self.position.get(node.index()).copied().flatten()
    }

    pub fn covers_all(&self) -> bool {
        self.position.iter().all(Option::is_some)
    }

    pub fn is_unlabeled(&self, graph: &InstanceGraph) -> bool {
        self.edges.iter().all(|e| !graph.edge(*e).is_labeled())
    }

    pub(crate) fn require_cover(&self, graph: &InstanceGraph) -> Result<()> {
        match self.position.iter().position(Option::is_none) {
            None => Ok(()),
            Some(u) => Err(Error::FocalPath(format!(
                "node {} is not on the focal path",
                graph.node_name(NodeId(u))
            ))),
        }
    }

    pub(crate) fn require_unlabeled(&self, graph: &InstanceGraph) -> Result<()> {
        match self.edges.iter().find(|e| graph.edge(**e).is_labeled()) {
            None => Ok(()),
            Some(e) => Err(Error::FocalPath(format!("focal edge {e} is labeled"))),
        }
    }

    /// Edges `(j, l)` with `j` before position `i` and `l` after it.
    pub fn skipping(&self, graph: &InstanceGraph, i: usize) -> Vec<EdgeId> {
        graph
            .edges()
            .iter()
            .filter(|e| match (self.position(e.src), self.position(e.dst)) {
                (Some(a), Some(b)) => a < i && i < b,
                _ => false,
            })
            .map(|e| e.id)
            .collect()
    }
}

/// Acceptance probabilities of the (modified) width-1 policy.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlphaSchedule {
    pub nodes: Vec<NodeId>,
    pub alpha: Vec<f64>,
    pub q: f64,
    /// Offline probabilities the schedule was derived from, by edge id.
    pub x: Vec<f64>,
    /// Per focal position, the edges skipping it.
    pub skip: Vec<Vec<EdgeId>>,
}

/// `alpha(i) = (1/(2-q)) / (1 - sum_{skip(i)} x_e/(2-q))` per focal position.
///
/// Fails when `x` puts mass on edges off the focal path or when some alpha
/// leaves `[0, 1]` by more than the tolerance, which means `x` and `q` do not
/// belong to the same offline strategy.
pub fn alpha_schedule(
    graph: &InstanceGraph,
    focal: &FocalPath,
    x: &EdgeProbabilities,
    q: f64,
) -> Result<AlphaSchedule> {
    if !(-TOLERANCE..=1.0 + TOLERANCE).contains(&q) {
        return Err(Error::Params(format!("q = {q} is not a probability")));
    }
    let q = q.clamp(0.0, 1.0);
    for e in graph.edges() {
        let off = focal.position(e.src).is_none() || focal.position(e.dst).is_none();
        if off && x.get(e.id) > TOLERANCE {
            return Err(Error::InconsistentSchedule(format!(
                "edge {} has x = {} but leaves the focal path",
                e.id,
                x.get(e.id)
            )));
        }
    }
    let scale = 2.0 - q;
    let mut alpha = Vec::with_capacity(focal.len());
    let mut skip = Vec::with_capacity(focal.len());
    for i in 0..focal.len() {
        let skipped = focal.skipping(graph, i);
        let mass: f64 = skipped.iter().map(|e| x.get(*e)).sum();
        if mass > 1.0 - q + TOLERANCE {
            return Err(Error::InconsistentSchedule(format!(
                "edges skipping position {i} carry x mass {mass} > 1 - q = {}",
                1.0 - q
            )));
        }
        let a = (1.0 / scale) / (1.0 - mass / scale);
        if !a.is_finite() || !(0.0..=1.0 + TOLERANCE).contains(&a) {
            return Err(Error::InconsistentSchedule(format!(
                "alpha at position {i} is {a}"
            )));
        }
        alpha.push(a.min(1.0));
        skip.push(skipped);
    }
    Ok(AlphaSchedule {
        nodes: focal.nodes().to_vec(),
        alpha,
        q,
        x: x.x.clone(),
        skip,
    })
}

/// What the policy did at one node.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Decision {
    pub node: NodeId,
    pub outcome: usize,
    pub tentative: Option<EdgeId>,
    /// Whether the tentative edge fit the residual capacities.
    pub feasible: bool,
    /// Acceptance probability of the coin, when one was flipped.
    pub accept_probability: Option<f64>,
    pub coin: Option<bool>,
    pub action: EdgeId,
    pub value: f64,
}

/// One run of a policy.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    /// Edges taken in the original graph.
    pub edges: Vec<EdgeId>,
    /// Total collected value, connector edges included.
    pub value: f64,
    /// Value collected on connector edges of contracted instances.
    pub connector_value: f64,
    /// Index of the cover path the run committed to, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub component: Option<usize>,
    pub decisions: Vec<Decision>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::InstanceBuilder;
    use crate::graph::Limits;
    use crate::oracle::{edge_probabilities, OfflineSpec};

    #[test]
    fn first_alpha_is_one_half_and_degenerate_q_gives_one() {
        let mut b = InstanceBuilder::new();
        let s = b.node("s");
        let a = b.node("a");
        let t = b.node("t");
        let e0 = b.edge(s, a);
        let e1 = b.edge(a, t);
        let e2 = b.edge(s, t);
        b.outcome(s, 0.5, vec![(e2, 3.0)]).outcome(s, 0.5, vec![]);
        b.deterministic(a, vec![(e1, 1.0)]);
        let inst = b.build().unwrap();
        let focal = FocalPath::new(&inst.graph, vec![e0, e1]).unwrap();
        let x = edge_probabilities(&inst, &OfflineSpec::Opt, &Limits::default()).unwrap();
        let sched = alpha_schedule(&inst.graph, &focal, &x, 0.0).unwrap();
        assert_eq!(sched.alpha[0], 0.5);
        assert_eq!(sched.skip[1], vec![e2]);
        // x(e2) = 1/2, so alpha(a) = (1/2) / (1 - 1/4)
        assert!((sched.alpha[1] - 2.0 / 3.0).abs() < 1e-12);

        let on_path = EdgeProbabilities {
            x: vec![1.0, 1.0, 0.0],
            spec: OfflineSpec::Opt,
        };
        let sched = alpha_schedule(&inst.graph, &focal, &on_path, 1.0).unwrap();
        assert!(sched.alpha.iter().all(|a| *a == 1.0));
        assert!(matches!(
            alpha_schedule(&inst.graph, &focal, &x, 1.0),
            Err(Error::InconsistentSchedule(_))
        ));
    }
}
