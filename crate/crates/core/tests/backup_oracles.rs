mod support;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sbpi_core::{backup_belief, evaluate, Lookahead};

use support::{brute_force_backup, random_belief, small_instance};

#[test]
fn backup_matches_enumeration() {
    for seed in 0..200 {
        let inst = small_instance(seed);
        let p = &inst.pomdp;
        let v = evaluate(&inst.controller, p).unwrap();
        let la = Lookahead::new(p, v.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..5 {
            let b = random_belief(&mut rng, p.num_states());
            let got = la.backup(&b);
            let want = brute_force_backup(p, &v, &b);
            assert!((got.value - want).abs() < 1e-9, "seed {seed}: {} vs {want}", got.value);
            assert!((backup_belief(p, &v, &b).value - got.value).abs() < 1e-12);
            assert_eq!(got.best_successor.len(), p.num_observations());
        }
    }
}

#[test]
fn backup_dominates_controller_value() {
    let mut probes = 0;
    let mut seed = 0;
    while probes < 10_000 {
        let inst = small_instance(1_000 + seed);
        seed += 1;
        let p = &inst.pomdp;
        let v = evaluate(&inst.controller, p).unwrap();
        let la = Lookahead::new(p, v.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..50 {
            let b = random_belief(&mut rng, p.num_states());
            let (value, _) = v.belief_value(&b);
            assert!(la.backup(&b).value >= value - 1e-9);
            probes += 1;
        }
    }
}

#[test]
fn lift_shifts_projections_by_observation_probability() {
    let inst = small_instance(42);
    let p = &inst.pomdp;
    let v = evaluate(&inst.controller, p).unwrap();
    let mut la = Lookahead::new(p, v.clone());
    let before: Vec<f64> = la.projected(0, 0, 0).to_vec();
    la.lift(0, 0.5);
    let after = la.projected(0, 0, 0);
    for s in 0..p.num_states() {
        let pz: f64 = (0..p.num_states()).map(|s2| p.transition(s, 0, s2) * p.observation(0, s2, 0)).sum();
        assert!((after[s] - before[s] - 0.5 * pz).abs() < 1e-12);
    }
    assert!((la.values().vector(0)[0] - v.vector(0)[0] - 0.5).abs() < 1e-12);
}
