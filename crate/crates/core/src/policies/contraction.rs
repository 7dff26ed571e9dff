//! Contraction of a graph onto one cover path.
//!
//! `G_i` keeps the nodes of `P_i` (in path order) and every edge between
//! them. An edge `(u, v)` leaving the path is replaced by an artificial edge
//! `(u, v')`, where `v'` is the earliest path node reachable from `v` along
//! unlabeled edges; the policy later replays it as the original edge followed
//! by a fewest-edge unlabeled connector from `v` to `v'`.
//!
//! Every edge leaving a path node is represented exactly once, in original id
//! order, so each node keeps its out-edge order and its outcome table is
//! reused unchanged.

use serde::Serialize;

use crate::cover::PathCover;
use crate::error::{Error, Result};
use crate::graph::{EdgeId, Instance, InstanceGraph, NodeId, OutcomeTable};

/// An artificial edge of a contracted instance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ArtificialEdge {
    /// Id in the contracted instance.
    pub edge: EdgeId,
    /// The original edge it stands for.
    pub original: EdgeId,
    /// Original head `v` (off the path).
    pub landing: NodeId,
    /// `v'`, as a node of the original graph.
    pub target: NodeId,
    /// Unlabeled original edges from `v` to `v'`.
    pub connector: Vec<EdgeId>,
    /// Expected total value of the connector.
    pub connector_mean: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContractedInstance {
    /// Zero-based index of the cover path.
    pub index: usize,
    pub instance: Instance,
    /// Contracted node -> original node.
    pub node_map: Vec<NodeId>,
    /// Contracted edge -> original edge.
    pub edge_map: Vec<EdgeId>,
    pub artificial: Vec<ArtificialEdge>,
    /// Contracted edge -> position in `artificial`.
    pub artificial_of: Vec<Option<usize>>,
    /// The cover path in contracted edge ids.
    pub focal: Vec<EdgeId>,
}

impl ContractedInstance {
    /// Original edges walked when the contracted edge `edge` is taken.
    pub fn expand(&self, edge: EdgeId) -> Vec<EdgeId> {
        match self.artificial_of[edge.index()] {
            Some(a) => {
                let art = &self.artificial[a];
                std::iter::once(art.original)
                    .chain(art.connector.iter().copied())
                    .collect()
            }
            None => vec![self.edge_map[edge.index()]],
        }
    }
}

/// Builds `G_i` for the zero-based cover index `index`.
pub fn build_contracted_instance(
    instance: &Instance,
    cover: &PathCover,
    index: usize,
) -> Result<ContractedInstance> {
    let g = &instance.graph;
    let path = cover
        .paths
        .get(index)
        .ok_or_else(|| Error::Params(format!("cover has {} paths, no index {index}", cover.k())))?;
    let nodes = &cover.node_orders[index];
    let mut local = vec![None; g.node_count()];
    for (i, u) in nodes.iter().enumerate() {
        local[u.index()] = Some(i);
    }

    let mut edges = Vec::new();
    let mut edge_map = Vec::new();
    let mut artificial = Vec::new();
    let mut artificial_of = Vec::new();
    let mut new_id = vec![None; g.edge_count()];
    for e in g.edges() {
        let Some(src) = local[e.src.index()] else {
            continue;
        };
        let id = EdgeId(edges.len());
        new_id[e.id.index()] = Some(id);
        edge_map.push(e.id);
        match local[e.dst.index()] {
            Some(dst) => {
                edges.push((NodeId(src), NodeId(dst), e.labels.clone()));
                artificial_of.push(None);
            }
            None => {
                let (target, connector) = earliest_return(g, e.dst, &local)?;
                edges.push((
                    NodeId(src),
                    NodeId(local[target.index()].expect("on path")),
                    e.labels.clone(),
                ));
                artificial_of.push(Some(artificial.len()));
                let connector_mean = connector.iter().map(|c| instance.mean_value(*c)).sum();
                artificial.push(ArtificialEdge {
                    edge: id,
                    original: e.id,
                    landing: e.dst,
                    target,
                    connector,
                    connector_mean,
                });
            }
        }
    }
    let names = nodes.iter().map(|u| g.node_name(*u).to_string()).collect();
    let graph = InstanceGraph::new(names, edges, g.labels().to_vec())?;
    let tables = nodes
        .iter()
        .map(|u| instance.outcomes.outcomes(*u).to_vec())
        .collect();
    let outcomes = OutcomeTable::new(tables, &graph);
    let focal = path
        .iter()
        .map(|e| new_id[e.index()].expect("path edges start on the path"))
        .collect();
    Ok(ContractedInstance {
        index,
        instance: Instance::new(graph, outcomes),
        node_map: nodes.clone(),
        edge_map,
        artificial,
        artificial_of,
        focal,
    })
}

/// Earliest path node unlabeled-reachable from `v`, with a fewest-edge
/// unlabeled connector.
fn earliest_return(
    g: &InstanceGraph,
    v: NodeId,
    local: &[Option<usize>],
) -> Result<(NodeId, Vec<EdgeId>)> {
    let reach = g.reachable_from(v, true);
    let target = g
        .nodes()
        .filter(|u| reach[u.index()])
        .filter_map(|u| local[u.index()].map(|pos| (pos, u)))
        .min()
        .map(|(_, u)| u)
        .ok_or_else(|| {
            Error::Cover(format!(
                "no unlabeled path from {} back to the cover path",
                g.node_name(v)
            ))
        })?;
    let connector = g
        .shortest_path(v, target, true)
        .ok_or_else(|| Error::Internal("reachable node without a path".into()))?;
    Ok((target, connector))
}
