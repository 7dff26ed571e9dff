//! Covers, contraction, sampling and generators.

mod common;

use proptest::prelude::*;

use prophet_dag::cover::{
    max_antichain_bruteforce, min_path_cover, min_path_cover_seeded, width, PathCover,
};
use prophet_dag::graph::{validate_instance, Instance, Limits, NodeId};
use prophet_dag::instances::{
    b_eps, generate_paper_instance, generate_random_instance, BidderOutcome, GeneratorParams,
    RandomFamily, RandomParams,
};
use prophet_dag::oracle::{expected_opt, Evaluation, OfflineSpec};
use prophet_dag::policies::build_contracted_instance;
use prophet_dag::rng::seeded;
use prophet_dag::schema::InstanceFile;

use common::*;

fn dag(max_nodes: usize) -> impl Strategy<Value = Instance> {
    (
        0usize..3,
        4..=max_nodes,
        0.05f64..0.6,
        0usize..3,
        any::<u64>(),
    )
        .prop_filter_map(
            "strand family needs room",
            |(shape, nodes, edge_probability, labels, seed)| {
                let family = match shape {
                    0 => RandomFamily::Layered,
                    1 => RandomFamily::FocalPath,
                    _ => RandomFamily::Strands {
                        k: 1 + (seed % 4) as usize,
                    },
                };
                let params = RandomParams {
                    family,
                    nodes,
                    max_outcomes: 1,
                    labels,
                    edge_probability,
                    ..RandomParams::default()
                };
                generate_random_instance(&params, seed).ok()
            },
        )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn min_cover_size_equals_max_antichain(inst in dag(20), seed in any::<u64>()) {
        let g = &inst.graph;
        let antichain = max_antichain_bruteforce(g).unwrap();
        let closure = prophet_dag::cover::transitive_closure(g);
        for (i, a) in antichain.iter().enumerate() {
            for b in &antichain[i + 1..] {
                prop_assert!(!closure[a.index()][b.index()] && !closure[b.index()][a.index()]);
            }
        }
        let cover = min_path_cover_seeded(g, Some(seed)).unwrap();
        prop_assert_eq!(cover.k(), antichain.len());
        prop_assert_eq!(width(g), antichain.len());
        let mut seen = vec![false; g.node_count()];
        for (path, nodes) in cover.paths.iter().zip(&cover.node_orders) {
            prop_assert!(g.is_st_path(path));
            prop_assert!(path.iter().all(|e| !g.edge(*e).is_labeled()));
            nodes.iter().for_each(|u| seen[u.index()] = true);
        }
        prop_assert!(seen.iter().all(|s| *s));
    }

    #[test]
    fn contraction_represents_every_leaving_edge_once(inst in dag(9)) {
        let g = &inst.graph;
        let cover = min_path_cover(g).unwrap();
        for i in 0..cover.k() {
            let c = build_contracted_instance(&inst, &cover, i).unwrap();
            prop_assert!(validate_instance(&c.instance).is_valid());
            let on_path = |u: NodeId| cover.node_orders[i].contains(&u);
            let leaving: Vec<_> = g.edges().iter().filter(|e| on_path(e.src)).map(|e| e.id).collect();
            prop_assert_eq!(&c.edge_map, &leaving);
            for (local, &orig) in c.edge_map.iter().enumerate() {
                let walk = c.expand(prophet_dag::graph::EdgeId(local));
                prop_assert_eq!(walk[0], orig);
                // the walk is a connected path ending where the contracted edge lands
                for w in walk.windows(2) {
                    prop_assert_eq!(g.edge(w[0]).dst, g.edge(w[1]).src);
                }
                let lands = c.node_map[c.instance.graph.edge(prophet_dag::graph::EdgeId(local)).dst.index()];
                prop_assert_eq!(g.edge(*walk.last().unwrap()).dst, lands);
                prop_assert!(walk[1..].iter().all(|e| !g.edge(*e).is_labeled()));
                prop_assert_eq!(&c.instance.graph.edge(prophet_dag::graph::EdgeId(local)).labels, &g.edge(orig).labels);
            }
            for u in c.instance.graph.nodes() {
                prop_assert_eq!(c.instance.outcomes.outcomes(u), inst.outcomes.outcomes(c.node_map[u.index()]));
            }
            // the earliest return: no earlier path node is unlabeled-reachable
            for art in &c.artificial {
                let reach = g.reachable_from(art.landing, true);
                let pos = |u: NodeId| cover.node_orders[i].iter().position(|v| *v == u).unwrap();
                let first = cover.node_orders[i].iter().find(|u| reach[u.index()]).copied().unwrap();
                prop_assert_eq!(pos(first), pos(art.target));
            }
        }
    }
}

/// Pearson chi-square against the critical value at level 0.001.
fn chi_square_ok(counts: &[u64], probs: &[f64]) -> bool {
    const CRITICAL: [f64; 6] = [10.828, 13.816, 16.266, 18.467, 20.515, 22.458];
    let n: u64 = counts.iter().sum();
    let stat: f64 = counts
        .iter()
        .zip(probs)
        .map(|(&c, &p)| {
            let e = n as f64 * p;
            (c as f64 - e).powi(2) / e
        })
        .sum();
    stat <= CRITICAL[probs.len() - 2]
}

#[test]
fn outcome_sampler_passes_chi_square() {
    let params = RandomParams {
        nodes: 8,
        max_outcomes: 4,
        ..RandomParams::default()
    };
    for seed in 0..10 {
        let inst = generate_random_instance(&params, seed).unwrap();
        let mut rng = seeded(seed);
        for u in inst.graph.nodes() {
            let table = inst.outcomes.outcomes(u);
            if table.len() < 2 {
                continue;
            }
            let mut counts = vec![0u64; table.len()];
            for _ in 0..20_000 {
                counts[inst.sample_outcome(u, &mut rng)] += 1;
            }
            let probs: Vec<f64> = table.iter().map(|o| o.p).collect();
            assert!(
                chi_square_ok(&counts, &probs),
                "seed {seed} node {u:?}: {counts:?} vs {probs:?}"
            );
        }
    }
}

#[test]
fn every_family_generates_valid_instances() {
    let law = vec![(0.25, 4.0), (0.75, 1.0)];
    let families = vec![
        GeneratorParams::Classic {
            candidates: vec![law.clone(); 4],
            bypass_last: false,
        },
        GeneratorParams::Overtime {
            values: vec![law.clone(); 4],
            terms: vec![1, 3],
        },
        GeneratorParams::Markets {
            values: vec![vec![law.clone(); 3]; 3],
            terms: vec![1, 2],
        },
        GeneratorParams::Upper49 { eps: 0.2 },
        GeneratorParams::Grid {
            k: 4,
            eps: 0.05,
            cols: None,
        },
        GeneratorParams::Kplus1 { k: 3, eps: 0.1 },
        GeneratorParams::Mchoice {
            values: vec![b_eps(0.5); 4],
            m: 2,
        },
        GeneratorParams::VertexMatching {
            items: 2,
            bidders: vec![
                vec![
                    BidderOutcome {
                        p: 0.5,
                        values: vec![1.0, 0.0],
                    },
                    BidderOutcome {
                        p: 0.5,
                        values: vec![0.0, 2.0],
                    },
                ];
                3
            ],
        },
    ];
    let limits = Limits::default();
    for params in families {
        let generated = generate_paper_instance(&params).unwrap();
        let inst = &generated.instance;
        assert!(validate_instance(inst).is_valid(), "{params:?}");
        let opt = expected_opt(inst, &OfflineSpec::Opt, Evaluation::Exact, &limits)
            .unwrap()
            .mean;
        assert!(
            (opt - brute_offline(inst).expected).abs() < 1e-9,
            "{params:?}"
        );
        if let Some(closed) = generated.metadata.expected_opt {
            assert!((opt - closed).abs() < 1e-9, "{params:?}: {opt} vs {closed}");
        }
        if let Some(lower) = generated.metadata.expected_opt_lower_bound {
            assert!(opt >= lower - 1e-9, "{params:?}");
        }
        for paths in generated.metadata.covers.values() {
            PathCover::from_ids(&inst.graph, paths).unwrap();
        }
        // the file form round-trips, metadata included
        let file = InstanceFile::from_instance(inst, Some(generated.metadata.clone()));
        let text = serde_json::to_string(&file).unwrap();
        let back: InstanceFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_instance().unwrap(), *inst);
        assert_eq!(back.metadata, Some(generated.metadata));
    }
}

#[test]
fn widths_of_the_standard_constructions() {
    let law = vec![(0.5, 1.0), (0.5, 3.0)];
    let cases = [
        (
            GeneratorParams::Classic {
                candidates: vec![law.clone(); 5],
                bypass_last: false,
            },
            1,
        ),
        (
            GeneratorParams::Overtime {
                values: vec![law.clone(); 5],
                terms: vec![1, 2, 5],
            },
            1,
        ),
        (GeneratorParams::Upper49 { eps: 0.1 }, 1),
        (
            GeneratorParams::Grid {
                k: 3,
                eps: 0.1,
                cols: None,
            },
            3,
        ),
        (GeneratorParams::Kplus1 { k: 4, eps: 0.1 }, 4),
        (
            GeneratorParams::Markets {
                values: vec![vec![law; 3]; 2],
                terms: vec![1],
            },
            2,
        ),
    ];
    for (params, w) in cases {
        let inst = generate_paper_instance(&params).unwrap().instance;
        assert_eq!(width(&inst.graph), w, "{params:?}");
    }
}

#[test]
fn multiple_choice_picks_respect_capacity() {
    let inst = generate_paper_instance(&GeneratorParams::Mchoice {
        values: vec![vec![(0.5, 1.0), (0.5, 2.0)]; 5],
        m: 2,
    })
    .unwrap()
    .instance;
    // OPT takes the two largest values
    let brute = brute_offline(&inst);
    let mut want = 0.0;
    for mask in 0u32..32 {
        let mut v: Vec<f64> = (0..5)
            .map(|i| if mask >> i & 1 == 1 { 2.0 } else { 1.0 })
            .collect();
        v.sort_by(|a, b| b.total_cmp(a));
        want += (v[0] + v[1]) / 32.0;
    }
    assert!((brute.expected - want).abs() < 1e-12);
}
