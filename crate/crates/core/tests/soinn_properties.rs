//! Property tests for the online learner's structural invariants.

use std::collections::BTreeSet;

use binsight::soinn::{SoinnNetwork, StepAction, TrainParams};
use proptest::prelude::*;

fn arb_case() -> impl Strategy<Value = (usize, u64, u32, Vec<(Vec<f64>, bool)>)> {
    (1usize..4, 1u64..10, 1u32..5).prop_flat_map(|(dim, lambda, age_max)| {
        proptest::collection::vec(
            (proptest::collection::vec(-5.0..5.0f64, dim), any::<bool>()),
            1..60,
        )
        .prop_map(move |steps| (dim, lambda, age_max, steps))
    })
}

fn seed_net(dim: usize, lambda: u64, age_max: u32) -> SoinnNetwork {
    let params = TrainParams {
        lambda,
        age_max,
        ..TrainParams::default()
    };
    // Seeds sit outside the input range, so they are always distinct.
    SoinnNetwork::init(&vec![-6.0; dim], &vec![6.0; dim], params).unwrap()
}

fn assert_structure(net: &SoinnNetwork, age_max: u32) {
    let ids: BTreeSet<u64> = net.nodes().map(|n| n.id()).collect();
    let mut degree_sum = 0usize;
    for ((a, b), age) in net.edges() {
        assert!(
            ids.contains(&a) && ids.contains(&b),
            "dangling edge ({a}, {b})"
        );
        assert!(age <= age_max, "edge ({a}, {b}) age {age} > {age_max}");
        assert!(net.neighbors(a).any(|j| j == b));
        assert!(net.neighbors(b).any(|j| j == a));
    }
    for &id in &ids {
        degree_sum += net.degree(id);
        for j in net.neighbors(id) {
            assert!(ids.contains(&j), "adjacency references dead node {j}");
        }
    }
    assert_eq!(degree_sum, 2 * net.edge_count());
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

proptest! {
    #[test]
    fn training_preserves_structure_and_reports_honestly(
        (dim, lambda, age_max, steps) in arb_case(),
    ) {
        let mut net = seed_net(dim, lambda, age_max);
        for (input, is_malicious) in &steps {
            let label = if *is_malicious { "malicious" } else { "benign" };
            let before = net.winners(input).unwrap();
            let winner_weight_before = net.node(before.winner).unwrap().weight().to_vec();

            let report = net.train_step(input, label).unwrap();

            // The step acted on the same winners a read-only query sees.
            prop_assert_eq!(report.winner, before.winner);
            prop_assert_eq!(report.second, before.second);

            // Insertion happens iff a threshold was violated.
            let violated = report.winner_dist > report.winner_threshold
                || report.second_dist > report.second_threshold;
            match report.action {
                StepAction::Inserted { id } => {
                    prop_assert!(violated);
                    // Unless the periodic denoise already removed it.
                    if !report.removed.contains(&id) {
                        prop_assert_eq!(net.node(id).unwrap().weight(), input.as_slice());
                    }
                }
                StepAction::Connected => {
                    prop_assert!(!violated);
                    // The winner moved toward the input (if it survived
                    // the in-step denoise).
                    if let Some(node) = net.node(report.winner) {
                        let before_d = euclidean(&winner_weight_before, input);
                        let after_d = euclidean(node.weight(), input);
                        prop_assert!(after_d <= before_d);
                        if before_d > 1e-9 {
                            prop_assert!(after_d < before_d);
                        }
                    }
                }
            }

            assert_structure(&net, age_max);
            prop_assert!(net.node_count() >= 2);
        }
    }

    #[test]
    fn training_is_deterministic(
        (dim, lambda, age_max, steps) in arb_case(),
    ) {
        let run = || {
            let mut net = seed_net(dim, lambda, age_max);
            for (input, is_malicious) in &steps {
                let label = if *is_malicious { "malicious" } else { "benign" };
                net.train_step(input, label).unwrap();
            }
            net
        };
        prop_assert_eq!(run(), run());
    }
}
