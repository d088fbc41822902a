use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sbpi_core::controller::total_params_per_node;
use sbpi_core::random::{generate_random_pomdp, random_controller};
use sbpi_core::{evaluate, parse_pomdp, write_pomdp, Controller, Node};

proptest! {
    #[test]
    fn policy_json_round_trips(seed in 0u64..5_000, na in 1usize..4, nz in 1usize..4, nn in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_controller(&mut rng, na, nz, nn, na, nn);
        let back = Controller::from_policy_json(&c.to_policy_json(), na, nz).unwrap();
        prop_assert_eq!(back.len(), c.len());
        for (x, y) in c.nodes().iter().zip(back.nodes()) {
            for (a, p) in x.action_probs() {
                prop_assert!((y.action_prob(*a) - p).abs() <= 1e-12);
            }
            for (k, p) in x.joint_transitions() {
                prop_assert!((y.joint_transitions()[k] - p).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn random_controllers_are_valid(seed in 0u64..5_000, na in 1usize..4, nz in 1usize..4, nn in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_controller(&mut rng, na, nz, nn, na, nn);
        for node in c.nodes() {
            let psi: f64 = node.action_probs().values().sum();
            prop_assert!((psi - 1.0).abs() < 1e-9);
            for (&a, &q) in node.action_probs() {
                for z in 0..nz {
                    let w: f64 = node.successors(a, z).map(|(_, w)| w).sum();
                    prop_assert!((w - q).abs() < 1e-9);
                }
            }
            prop_assert!(node.nonzero_count() <= total_params_per_node(na, nz, nn));
        }
        let stats = c.sparsity_stats();
        prop_assert!(stats.min_nonzero <= stats.avg_nonzero && stats.avg_nonzero <= stats.max_nonzero);
    }

    #[test]
    fn replace_params_renormalises_small_drift(scale in 0.9999995f64..1.0000005) {
        let mut c = Controller::from_nodes(2, 1, vec![Node::deterministic(0, &[0])]).unwrap();
        let psi = BTreeMap::from([(0, 0.5 * scale), (1, 0.5)]);
        let w = BTreeMap::from([((0, 0, 0), 0.5), ((1, 0, 0), 0.5 * scale)]);
        c.replace_node_params(0, psi, w).unwrap();
        let total: f64 = c.node(0).action_probs().values().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn parser_never_panics(text in "\\PC{0,400}") {
        let _ = parse_pomdp(&text);
    }

    #[test]
    fn parser_never_panics_on_mangled_models(seed in 0u64..2_000, cut in 0usize..2_000, junk in "[a-z0-9:. \\-\\n]{0,30}") {
        let p = generate_random_pomdp(3, 2, 2, 0.9, seed).unwrap();
        let mut text = write_pomdp(&p);
        let at = cut.min(text.len());
        let at = (0..=at).rev().find(|&i| text.is_char_boundary(i)).unwrap_or(0);
        text.insert_str(at, &junk);
        let _ = parse_pomdp(&text);
    }

    #[test]
    fn written_models_round_trip(seed in 0u64..2_000, ns in 1usize..6, na in 1usize..4, nz in 1usize..4) {
        let p = generate_random_pomdp(ns, na, nz, 0.9, seed).unwrap();
        let q = parse_pomdp(&write_pomdp(&p)).unwrap().pomdp;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_controller(&mut rng, na, nz, 3, na, 3);
        let (vp, vq) = (evaluate(&c, &p).unwrap(), evaluate(&c, &q).unwrap());
        for (x, y) in vp.vectors().iter().flatten().zip(vq.vectors().iter().flatten()) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }
}

#[test]
fn rejects_malformed_policies() {
    assert!(Controller::from_policy_json("{}", 2, 2).is_err());
    assert!(Controller::from_policy_json("not json", 2, 2).is_err());
    let bad_action = r#"{"version":1,"nodes":[{"action_probs":{"5":1.0},"transitions":{"5,0":{"0":1.0}}}]}"#;
    assert!(Controller::from_policy_json(bad_action, 2, 1).is_err());
    let dangling = r#"{"version":1,"nodes":[{"action_probs":{"0":1.0},"transitions":{"0,0":{"3":1.0}}}]}"#;
    assert!(Controller::from_policy_json(dangling, 2, 1).is_err());
    let ok = r#"{"version":1,"nodes":[{"action_probs":{"0":1.0},"transitions":{"0,0":{"0":1.0}}}]}"#;
    assert_eq!(Controller::from_policy_json(ok, 2, 1).unwrap().len(), 1);
}

#[test]
fn parameter_counts_follow_the_formula() {
    let expected = [1_359, 2_709, 4_059, 5_409, 6_759, 8_109];
    for (i, n) in (50..=300).step_by(50).enumerate() {
        assert_eq!(total_params_per_node(9, 3, n), expected[i]);
    }
    assert_eq!(total_params_per_node(5, 17, 200), 17_005);
}
