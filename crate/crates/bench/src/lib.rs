//! Fixtures shared by the benchmarks in `benches/`.

use prophet_dag::instances::{
    generate_paper_instance, generate_random_instance, GeneratorParams, RandomFamily, RandomParams,
};
use prophet_dag::Instance;

/// The k-row grid with `eps = 0.01`.
pub fn grid(k: usize) -> Instance {
    generate_paper_instance(&GeneratorParams::Grid {
        k,
        eps: 0.01,
        cols: None,
    })
    .expect("valid grid")
    .instance
}

/// A labeled width-1 instance with `nodes` nodes.
pub fn labeled_path(nodes: usize, seed: u64) -> Instance {
    let params = RandomParams {
        family: RandomFamily::FocalPath,
        nodes,
        max_outcomes: 2,
        labels: 2,
        max_labels_per_edge: 2,
        ..RandomParams::default()
    };
    generate_random_instance(&params, seed).expect("valid instance")
}

/// A sparse layered DAG with single-outcome nodes, for cover benchmarks.
pub fn layered(nodes: usize, seed: u64) -> Instance {
    let params = RandomParams {
        family: RandomFamily::Layered,
        nodes,
        max_outcomes: 1,
        edge_probability: 0.1,
        ..RandomParams::default()
    };
    generate_random_instance(&params, seed).expect("valid instance")
}
