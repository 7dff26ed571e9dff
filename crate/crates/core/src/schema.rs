//! JSON instance file schema.
//!
//! ```json
//! {
//!   "nodes": ["s", "a", "t"],
//!   "labels": {"red": 1},
//!   "edges": [{"id": 0, "src": "s", "dst": "a", "labels": []}, ...],
//!   "outcomes": {"s": [{"p": 0.5, "values": {"0": 1.0}}, ...], ...},
//!   "metadata": {...}
//! }
//! ```
//!
//! `p` may be a number or a string fraction such as `"1/3"`; the latter keeps
//! an exact rational mass next to the double. Every edge leaving a node must
//! get a value in each of that node's outcomes.

use std::collections::BTreeMap;

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{
    EdgeId, Instance, InstanceGraph, Label, LabelId, NodeId, Outcome, OutcomeTable,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub nodes: Vec<String>,
    #[serde(default)]
    pub labels: BTreeMap<String, u32>,
    pub edges: Vec<EdgeRecord>,
    #[serde(default)]
    pub outcomes: BTreeMap<String, Vec<OutcomeRecord>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<Metadata>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub id: usize,
    pub src: String,
    pub dst: String,
    #[serde(default)]
    pub labels: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub p: Mass,
    pub values: BTreeMap<usize, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Mass {
    Float(f64),
    Exact(String),
}

impl Mass {
    fn resolve(&self) -> Result<(f64, Option<Rational64>)> {
        match self {
            Mass::Float(p) => Ok((*p, None)),
            Mass::Exact(text) => {
                let r = parse_rational(text)
                    .ok_or_else(|| Error::Schema(format!("cannot parse probability {text:?}")))?;
                Ok((*r.numer() as f64 / *r.denom() as f64, Some(r)))
            }
        }
    }
}

fn parse_rational(text: &str) -> Option<Rational64> {
    let text = text.trim();
    match text.split_once('/') {
        Some((n, d)) => {
            let n: i64 = n.trim().parse().ok()?;
            let d: i64 = d.trim().parse().ok()?;
            (d != 0).then(|| Rational64::new(n, d))
        }
        None => text.parse::<i64>().ok().map(Rational64::from_integer),
    }
}

/// Generator provenance stored alongside an instance.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<serde_json::Value>,
    /// Closed-form E(OPT), when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_opt: Option<f64>,
    /// Closed-form lower bound on E(OPT), when only a bound is known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_opt_lower_bound: Option<f64>,
    /// Named path covers, each a list of s,t edge-id paths.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub covers: BTreeMap<String, Vec<Vec<usize>>>,
}

impl InstanceFile {
    /// Resolves names and ids into an [`Instance`]. Referential problems are
    /// errors; model-level problems are left to validation.
    pub fn to_instance(&self) -> Result<Instance> {
        let node_index: BTreeMap<&str, NodeId> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), NodeId(i)))
            .collect();
        let node = |name: &str| {
            node_index
                .get(name)
                .copied()
                .ok_or_else(|| Error::Schema(format!("unknown node {name:?}")))
        };
        let label_names: Vec<&String> = self.labels.keys().collect();
        let labels: Vec<Label> = self
            .labels
            .iter()
            .map(|(name, &capacity)| Label {
                name: name.clone(),
                capacity,
            })
            .collect();

        let mut slots: Vec<Option<&EdgeRecord>> = vec![None; self.edges.len()];
        for e in &self.edges {
            match slots.get_mut(e.id) {
                Some(slot @ None) => *slot = Some(e),
                Some(Some(_)) => return Err(Error::Schema(format!("duplicate edge id {}", e.id))),
                None => {
                    return Err(Error::Schema(format!(
                        "edge ids must be dense 0..{}; found {}",
                        self.edges.len(),
                        e.id
                    )))
                }
            }
        }
        let mut edges = Vec::with_capacity(self.edges.len());
        for rec in slots.into_iter().flatten() {
            let ls = rec
                .labels
                .iter()
                .map(|l| {
                    label_names
                        .iter()
                        .position(|n| *n == l)
                        .map(LabelId)
                        .ok_or_else(|| {
                            Error::Schema(format!("edge {} uses unknown label {l:?}", rec.id))
                        })
                })
                .collect::<Result<Vec<_>>>()?;
            edges.push((node(&rec.src)?, node(&rec.dst)?, ls));
        }
        let graph = InstanceGraph::new(self.nodes.clone(), edges, labels)?;

        let mut tables: Vec<Vec<Outcome>> = vec![Vec::new(); graph.node_count()];
        for (name, records) in &self.outcomes {
            let u = node(name)?;
            let outs = graph.out_edges(u);
            for (i, rec) in records.iter().enumerate() {
                let (p, exact_p) = rec.p.resolve()?;
                let mut values = vec![f64::NAN; outs.len()];
                for (&id, &v) in &rec.values {
                    let e = EdgeId(id);
                    if id >= graph.edge_count() || graph.edge(e).src != u {
                        return Err(Error::Schema(format!(
                            "outcome {i} of node {name:?} sets edge {id}, which does not leave that node"
                        )));
                    }
                    values[graph.slot(e)] = v;
                }
                if let Some(pos) = values.iter().position(|v| v.is_nan()) {
                    return Err(Error::Schema(format!(
                        "outcome {i} of node {name:?} has no value for edge {}",
                        outs[pos]
                    )));
                }
                tables[u.index()].push(Outcome { p, exact_p, values });
            }
        }
        let outcomes = OutcomeTable::new(tables, &graph);
        Ok(Instance::new(graph, outcomes))
    }

    /// Serializable form of an instance. Exact masses are written as fractions.
    pub fn from_instance(instance: &Instance, metadata: Option<Metadata>) -> Self {
        let g = &instance.graph;
        let labels = g
            .labels()
            .iter()
            .map(|l| (l.name.clone(), l.capacity))
            .collect();
        let edges = g
            .edges()
            .iter()
            .map(|e| EdgeRecord {
                id: e.id.index(),
                src: g.node_name(e.src).to_string(),
                dst: g.node_name(e.dst).to_string(),
                labels: e.labels.iter().map(|l| g.label(*l).name.clone()).collect(),
            })
            .collect();
        let mut outcomes = BTreeMap::new();
        for u in g.nodes() {
            let outs = g.out_edges(u);
            if outs.is_empty() {
                continue;
            }
            let records = instance
                .outcomes
                .outcomes(u)
                .iter()
                .map(|o| OutcomeRecord {
                    p: match o.exact_p {
                        Some(r) => Mass::Exact(format!("{}/{}", r.numer(), r.denom())),
                        None => Mass::Float(o.p),
                    },
                    values: outs
                        .iter()
                        .zip(&o.values)
                        .map(|(e, v)| (e.index(), *v))
                        .collect(),
                })
                .collect();
            outcomes.insert(g.node_name(u).to_string(), records);
        }
        Self {
            nodes: g.node_names().to_vec(),
            labels,
            edges,
            outcomes,
            metadata,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::validate_instance;

    const SAMPLE: &str = r#"{
        "nodes": ["s", "a", "t"],
        "labels": {"red": 1},
        "edges": [
            {"id": 0, "src": "s", "dst": "a"},
            {"id": 1, "src": "s", "dst": "a", "labels": ["red"]},
            {"id": 2, "src": "a", "dst": "t"}
        ],
        "outcomes": {
            "s": [{"p": "1/3", "values": {"0": 0, "1": 4}}, {"p": "2/3", "values": {"0": 0, "1": 1}}],
            "a": [{"p": 1, "values": {"2": 2.5}}]
        }
    }"#;

    #[test]
    fn parses_and_validates() {
        let file: InstanceFile = serde_json::from_str(SAMPLE).unwrap();
        let inst = file.to_instance().unwrap();
        assert!(validate_instance(&inst).is_valid());
        assert_eq!(inst.graph.edge(EdgeId(1)).labels, vec![LabelId(0)]);
        assert_eq!(
            inst.outcomes.outcome(NodeId(0), 0).exact_p,
            Some(Rational64::new(1, 3))
        );
        let back = InstanceFile::from_instance(&inst, None);
        let again = back.to_instance().unwrap();
        assert_eq!(inst, again);
    }

    #[test]
    fn rejects_value_for_foreign_edge() {
        let bad = SAMPLE.replace(r#"{"2": 2.5}"#, r#"{"2": 2.5, "0": 1}"#);
        let file: InstanceFile = serde_json::from_str(&bad).unwrap();
        assert!(matches!(file.to_instance(), Err(Error::Schema(_))));
    }

    #[test]
    fn rejects_sparse_edge_ids() {
        let bad = SAMPLE.replace(r#""id": 2"#, r#""id": 7"#);
        let file: InstanceFile = serde_json::from_str(&bad).unwrap();
        assert!(matches!(file.to_instance(), Err(Error::Schema(_))));
    }
}
