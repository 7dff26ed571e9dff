mod common;

use proptest::prelude::*;

use prophet_dag::graph::{Instance, Limits, NodeId};
use prophet_dag::instances::{generate_random_instance, RandomFamily, RandomParams};
use prophet_dag::oracle::{
    conditional_choice_distribution, edge_probabilities, expected_opt, opt_path,
    optimal_online_value, Evaluation, OfflineSpec,
};

use common::*;

fn family() -> impl Strategy<Value = RandomFamily> {
    prop_oneof![
        Just(RandomFamily::Layered),
        Just(RandomFamily::FocalPath),
        (1usize..=3).prop_map(|k| RandomFamily::Strands { k }),
    ]
}

fn instance(max_nodes: usize) -> impl Strategy<Value = Instance> {
    (
        family(),
        3..=max_nodes,
        0usize..=3,
        1usize..=2,
        any::<u64>(),
    )
        .prop_filter_map(
            "strand family needs room",
            |(family, nodes, labels, per_edge, seed)| {
                let params = RandomParams {
                    family,
                    nodes,
                    max_outcomes: 3,
                    labels,
                    max_labels_per_edge: per_edge,
                    max_capacity: 2,
                    edge_probability: 0.35,
                };
                generate_random_instance(&params, seed).ok()
            },
        )
}

/// Brute-force optimal online value: at each node, after seeing the local
/// outcome, the best edge given the labels used so far.
fn brute_online(inst: &Instance, u: NodeId, used: &mut Vec<u32>) -> f64 {
    let g = &inst.graph;
    if u == g.sink() {
        return 0.0;
    }
    let mut total = 0.0;
    for o in inst.outcomes.outcomes(u) {
        let mut best = f64::NEG_INFINITY;
        for (slot, &e) in g.out_edges(u).iter().enumerate() {
            let labels = &g.edge(e).labels;
            if labels
                .iter()
                .any(|l| used[l.index()] >= g.label(*l).capacity)
            {
                continue;
            }
            labels.iter().for_each(|l| used[l.index()] += 1);
            let v = o.values[slot] + brute_online(inst, g.edge(e).dst, used);
            labels.iter().for_each(|l| used[l.index()] -= 1);
            best = best.max(v);
        }
        total += o.p * best;
    }
    total
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn opt_path_matches_path_enumeration(inst in instance(10), picks in proptest::collection::vec(any::<u32>(), 8)) {
        let g = &inst.graph;
        let paths = all_st_paths(g);
        for pick in picks {
            // one pseudo-random realization per pick
            let outcomes: Vec<usize> = g
                .nodes()
                .map(|u| (pick as usize).wrapping_mul(u.index() + 7) % inst.outcomes.outcomes(u).len())
                .collect();
            let mut values = Vec::new();
            inst.edge_values_into(&outcomes, &mut values);
            let got = opt_path(&inst, &values, &OfflineSpec::Opt, &Limits::default()).unwrap();
            let (value, path) = brute_opt(&inst, &paths, &outcomes);
            prop_assert!((got.value - value).abs() < 1e-9);
            prop_assert_eq!(got.edges, path);
        }
    }

    #[test]
    fn offline_statistics_match_enumeration(inst in instance(6)) {
        let limits = Limits::default();
        let brute = brute_offline(&inst);
        let e = expected_opt(&inst, &OfflineSpec::Opt, Evaluation::Exact, &limits).unwrap();
        prop_assert!((e.mean - brute.expected).abs() < 1e-9);
        let x = edge_probabilities(&inst, &OfflineSpec::Opt, &limits).unwrap();
        for (a, b) in x.x.iter().zip(&brute.x) {
            prop_assert!((a - b).abs() < 1e-9);
        }
        for u in inst.graph.nodes() {
            for o in 0..inst.outcomes.outcomes(u).len() {
                let law = conditional_choice_distribution(&inst, &OfflineSpec::Opt, u, o, &limits).unwrap();
                let want = &brute.law[u.index()][o];
                for ((_, p), q) in law.edges.iter().zip(want) {
                    prop_assert!((p - q).abs() < 1e-9);
                }
                let none = 1.0 - want.iter().sum::<f64>();
                prop_assert!((law.none - none).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn online_value_matches_backward_recursion(inst in instance(7)) {
        let got = optimal_online_value(&inst, &Limits::default()).unwrap();
        let want = brute_online(&inst, inst.graph.source(), &mut vec![0; inst.graph.labels().len()]);
        prop_assert!((got - want).abs() < 1e-9);
        let opt = expected_opt(&inst, &OfflineSpec::Opt, Evaluation::Exact, &Limits::default()).unwrap().mean;
        prop_assert!(got <= opt + 1e-9);
    }
}

#[test]
fn monte_carlo_expectation_is_consistent_with_exact() {
    let params = RandomParams {
        family: RandomFamily::Layered,
        nodes: 7,
        labels: 2,
        ..RandomParams::default()
    };
    for seed in 0..10 {
        let inst = generate_random_instance(&params, seed).unwrap();
        let limits = Limits::default();
        let exact = expected_opt(&inst, &OfflineSpec::Opt, Evaluation::Exact, &limits)
            .unwrap()
            .mean;
        let mc = expected_opt(
            &inst,
            &OfflineSpec::Opt,
            Evaluation::MonteCarlo {
                trials: 20_000,
                seed,
            },
            &limits,
        )
        .unwrap();
        let se = mc.std_error.unwrap();
        assert!(
            (mc.mean - exact).abs() <= 5.0 * se + 1e-12,
            "seed {seed}: {} vs {exact}",
            mc.mean
        );
    }
}

#[test]
fn restricted_spec_stays_inside_allowed_edges_or_falls_back() {
    let params = RandomParams {
        family: RandomFamily::Strands { k: 2 },
        nodes: 7,
        ..RandomParams::default()
    };
    let limits = Limits::default();
    for seed in 0..20 {
        let inst = generate_random_instance(&params, seed).unwrap();
        let strands = strand_cover(&inst.graph);
        let fallback = strands[0].clone();
        let allowed: std::collections::BTreeSet<_> = fallback.iter().copied().collect();
        let spec = OfflineSpec::restricted(&inst, allowed.clone(), fallback.clone()).unwrap();
        let paths = all_st_paths(&inst.graph);
        for (outcomes, _) in realizations(&inst) {
            let mut values = Vec::new();
            inst.edge_values_into(&outcomes, &mut values);
            let (_, opt) = brute_opt(&inst, &paths, &outcomes);
            let got = opt_path(&inst, &values, &spec, &limits).unwrap();
            if opt.iter().all(|e| allowed.contains(e)) {
                assert_eq!(got.edges, opt);
            } else {
                assert_eq!(got.edges, fallback);
            }
        }
    }
}
