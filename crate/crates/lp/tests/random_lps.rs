mod support;

use proptest::prelude::*;
use sbpi_lp::{solve, ConstraintTag, LpModel, LpStatus, Relation, VarBound};
use support::{complementary_slackness, random_lp, vertex_enumeration};

#[test]
fn random_lps_match_vertex_enumeration() {
    for seed in 0..300 {
        let model = random_lp(seed);
        let expected = vertex_enumeration(&model).expect("generator builds feasible LPs");
        let sol = solve(&model).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal, "seed {seed}");
        assert!(
            (sol.objective_value - expected).abs() <= 1e-8,
            "seed {seed}: simplex {} vs oracle {expected}",
            sol.objective_value
        );
    }
}

#[test]
fn three_variable_four_row_lps() {
    // Small dense family with a fixed shape.
    let mut checked = 0;
    for seed in 1000..1100u64 {
        let mut m = LpModel::new();
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 33) % 7) as f64 - 3.0
        };
        for _ in 0..3 {
            let c = next();
            m.add_variable(c, VarBound::NonNegative);
        }
        for _ in 0..3 {
            let row: Vec<(usize, f64)> = (0..3).map(|j| (j, next())).collect();
            let rhs = next().abs() + 1.0;
            m.add_constraint(row, Relation::Le, rhs, ConstraintTag::Other);
        }
        m.add_constraint((0..3).map(|j| (j, 1.0)), Relation::Le, 5.0, ConstraintTag::Other);
        let expected = vertex_enumeration(&m).unwrap();
        let sol = solve(&m).unwrap();
        assert!((sol.objective_value - expected).abs() <= 1e-8, "seed {seed}");
        checked += 1;
    }
    assert_eq!(checked, 100);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn strong_duality_and_complementary_slackness(seed in any::<u64>()) {
        let model = random_lp(seed);
        let sol = solve(&model).unwrap();
        prop_assert_eq!(sol.status, LpStatus::Optimal);
        let primal_obj = sol.objective_value;
        let dual_obj = model.dual_objective(&sol.dual);
        prop_assert!(model.primal_residual(&sol.primal) <= 1e-7);
        prop_assert!(model.dual_residual(&sol.dual) <= 1e-7);
        prop_assert!((primal_obj - dual_obj).abs() <= 1e-6 * (1.0 + primal_obj.abs()));
        prop_assert!(complementary_slackness(&model, &sol.primal, &sol.dual) <= 1e-6);
    }
}

#[test]
fn returned_basis_restarts_without_pivots() {
    for seed in 0..100 {
        let model = random_lp(seed);
        let first = solve(&model).unwrap();
        assert_eq!(first.basis.len(), model.num_constraints(), "seed {seed}");
        let options = sbpi_lp::SolveOptions {
            initial_basis: Some(first.basis.clone()),
            iteration_limit: None,
        };
        let again = sbpi_lp::solve_with(&model, &options).unwrap();
        assert!(again.warm_started, "seed {seed}");
        assert_eq!(again.iterations, 0, "seed {seed}");
        assert!((again.objective_value - first.objective_value).abs() <= 1e-9, "seed {seed}");
    }
}

/// Many rows through the origin: every pivot there is degenerate.
#[test]
fn degenerate_vertex_lps_match_vertex_enumeration() {
    let mut s = 0x2545_f491_4f6c_dd1d_u64;
    let mut next = move || {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        ((s >> 40) % 9) as f64 - 4.0
    };
    for case in 0..150 {
        let mut m = LpModel::new();
        for _ in 0..3 {
            let c = next();
            m.add_variable(c, VarBound::NonNegative);
        }
        for _ in 0..40 {
            let row: Vec<(usize, f64)> = (0..3).map(|j| (j, next())).collect();
            m.add_constraint(row, Relation::Le, 0.0, ConstraintTag::Other);
        }
        m.add_constraint((0..3).map(|j| (j, 1.0)), Relation::Le, 1.0, ConstraintTag::Other);
        let expected = vertex_enumeration(&m).unwrap();
        let sol = solve(&m).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal, "case {case}");
        assert!((sol.objective_value - expected).abs() <= 1e-8, "case {case}: {} vs {expected}", sol.objective_value);
        assert!(m.primal_residual(&sol.primal) <= 1e-9, "case {case}");
    }
}
