mod support;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sbpi_core::sparse::improve_node_sparse_traced;
use sbpi_core::{evaluate, improve_node_full, improve_node_sparse, improve_node_sparse_early, BeliefState, Lookahead};

use support::{node_backup_vector, random_belief, small_instance};

const INSTANCES: u64 = 200;

fn assert_belief(b: &BeliefState) {
    assert!(b.probs().iter().all(|&x| x >= 0.0), "negative tangent component: {:?}", b.probs());
    assert!((b.probs().iter().sum::<f64>() - 1.0).abs() <= 1e-6);
}

#[test]
fn sparse_matches_full_on_random_instances() {
    for seed in 0..INSTANCES {
        let inst = small_instance(seed);
        let (p, c) = (&inst.pomdp, &inst.controller);
        let v = evaluate(c, p).unwrap();
        let la = Lookahead::new(p, v.clone());
        for n in 0..c.len() {
            let full = improve_node_full(c, n, &la).unwrap();
            let sparse = improve_node_sparse(c, n, &la).unwrap();
            assert!(
                (full.epsilon - sparse.epsilon).abs() <= 1e-6,
                "seed {seed} node {n}: full {} sparse {}",
                full.epsilon,
                sparse.epsilon
            );
            assert_belief(&full.tangent_belief);
            assert_belief(&sparse.tangent_belief);
            // The returned parameters must actually achieve the reported ε.
            for r in [&full, &sparse] {
                let improved = node_backup_vector(p, &v, &r.action_probs, &r.joint_transitions);
                for (s, x) in improved.iter().enumerate() {
                    assert!(x + 1e-7 >= v.vector(n)[s] + r.epsilon, "seed {seed} node {n} state {s}");
                }
                let mass: f64 = r.action_probs.values().sum();
                assert!((mass - 1.0).abs() < 1e-9);
            }
            // ε ≥ 0 because the current parameters are feasible.
            assert!(full.epsilon >= -1e-9);
        }
    }
}

#[test]
fn epsilon_is_bounded_by_backup_gap_at_any_belief() {
    for seed in 0..INSTANCES {
        let inst = small_instance(seed);
        let (p, c) = (&inst.pomdp, &inst.controller);
        let v = evaluate(c, p).unwrap();
        let la = Lookahead::new(p, v.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let beliefs: Vec<BeliefState> = (0..20).map(|_| random_belief(&mut rng, p.num_states())).collect();
        for n in 0..c.len() {
            let full = improve_node_full(c, n, &la).unwrap();
            let min_gap = beliefs
                .iter()
                .map(|b| la.backup(b).value - b.dot(v.vector(n)))
                .fold(f64::INFINITY, f64::min);
            assert!(full.epsilon <= min_gap + 1e-6, "seed {seed} node {n}: ε {} gap {min_gap}", full.epsilon);
            // The tangent belief is where the bound is tight.
            let t = &full.tangent_belief;
            let tangent_gap = la.backup(t).value - t.dot(v.vector(n));
            assert!(tangent_gap + 1e-6 >= full.epsilon);
        }
    }
}

#[test]
fn early_termination_loses_at_most_the_tolerance() {
    for g in [0.1, 0.01] {
        for seed in 0..INSTANCES {
            let inst = small_instance(seed);
            let (p, c) = (&inst.pomdp, &inst.controller);
            let la = Lookahead::new(p, evaluate(c, p).unwrap());
            for n in 0..c.len() {
                let full = improve_node_full(c, n, &la).unwrap();
                let early = improve_node_sparse_early(c, n, &la, g).unwrap();
                assert!(full.epsilon - early.epsilon <= g + 1e-6);
                assert!(early.epsilon <= full.epsilon + 1e-6);
                assert_belief(&early.tangent_belief);
            }
        }
    }
}

#[test]
fn column_generation_grows_slowly_and_terminates() {
    for seed in 0..INSTANCES {
        let inst = small_instance(seed);
        let (p, c) = (&inst.pomdp, &inst.controller);
        let (na, nz, nn) = (p.num_actions(), p.num_observations(), c.len());
        let la = Lookahead::new(p, evaluate(c, p).unwrap());
        for n in 0..nn {
            let (result, steps) = improve_node_sparse_traced(c, n, &la, 0.0).unwrap();
            assert!(steps.len() <= 1 + na + na * nz * nn);
            assert_eq!(steps.len(), result.stats.lps_solved);
            for pair in steps.windows(2) {
                assert!(pair[1].threshold >= pair[0].threshold);
                assert!(pair[1].lp_variables > pair[0].lp_variables);
            }
            for step in &steps {
                assert!(step.added <= 1 + nz, "added {} with |Z| = {nz}", step.added);
                assert_belief(&step.tangent_belief);
                assert!(step.gap() + 1e-6 >= step.lp_epsilon);
            }
            assert!(result.stats.lp_variables <= 1 + na + na * nz * nn);
        }
    }
}

#[test]
fn sparse_and_full_agree_on_benchmark_sized_models() {
    use rand::Rng;
    use sbpi_core::random::{generate_random_pomdp, random_controller};
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (ns, na, nz, nn) in [(10, 4, 3, 12), (30, 9, 3, 20), (20, 5, 6, 15)] {
        let p = generate_random_pomdp(ns, na, nz, 0.95, rng.gen()).unwrap();
        let c = random_controller(&mut rng, na, nz, nn, 1, 1);
        let la = Lookahead::new(&p, evaluate(&c, &p).unwrap());
        for n in 0..nn {
            let full = improve_node_full(&c, n, &la).unwrap();
            let sparse = improve_node_sparse(&c, n, &la).unwrap();
            assert!((full.epsilon - sparse.epsilon).abs() <= 1e-6);
            assert!(sparse.stats.lp_variables < full.stats.lp_variables);
        }
    }
}
