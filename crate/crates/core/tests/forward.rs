mod support;

use proptest::prelude::*;
use pwcheat::laplace::{solve_v_with_flux, transfer_function_constant};
use pwcheat::{solve_psi, solve_v, transfer_function, ConductivityProfile, PiecewiseFunction};
use support::*;

#[test]
fn oracle_reproduces_closed_forms() {
    let one = ConductivityProfile::constant(1.0).unwrap();
    assert!(rel_err(oracle_transfer(&one, 1.0), 1f64.tanh()) < 1e-11);
    let q = PiecewiseFunction::constant(1.0);
    let (p, dp) = oracle_psi(&q, 1.0, 1.0);
    assert!(rel_err(p, 1f64.cosh()) < 1e-11 && rel_err(dp, 1f64.sinh()) < 1e-11);
}

#[test]
fn two_piece_v_matches_oracle() {
    let a = ConductivityProfile::new(vec![0.0, 0.5, 1.0], vec![1.0, 4.0]).unwrap();
    let sol = solve_v(&a, 1.0).unwrap();
    let (v, flux) = oracle_v(&a, 1.0);
    assert!(rel_err(sol.node_v(2).value(), v) < 1e-10);
    assert!(rel_err(sol.node_flux(2).value(), flux) < 1e-10);
    assert!(rel_err(transfer_function(&a, 1.0).unwrap(), v / flux) < 1e-10);
    // interface values: first piece is sinh/cosh
    assert!(rel_err(sol.node_v(1).value(), 0.5f64.sinh()) < 1e-14);
    assert!(rel_err(sol.node_flux(1).value(), 0.5f64.cosh()) < 1e-14);
}

#[test]
fn two_piece_psi_matches_oracle() {
    let q2 = PiecewiseFunction::new(vec![0.0, 0.5, 1.0], vec![4.0, 1.0]).unwrap();
    for k in [0.5, 1.0, 3.0] {
        let sol = solve_psi(&q2, k).unwrap();
        for x in [0.25, 0.5, 0.8, 1.0] {
            let (p, dp) = oracle_psi(&q2, k, x);
            assert!(rel_err(sol.psi(x).unwrap().value(), p) < 1e-10, "k={k} x={x}");
            assert!(rel_err(sol.psi_prime(x).unwrap().value(), dp) < 1e-10, "k={k} x={x}");
        }
    }
}

#[test]
fn random_profiles_match_oracle() {
    let mut r = rng(11);
    for trial in 0..10 {
        let n = 1 + trial % 5;
        let a = random_profile(&mut r, n, 0.2, 5.0, 0.05, 1.0);
        for lambda in log_grid(0.01, 100.0, 6) {
            let h = transfer_function(&a, lambda).unwrap();
            assert!(rel_err(h, oracle_transfer(&a, lambda)) < 1e-8, "trial {trial} lambda {lambda}");
        }
    }
}

#[test]
fn flux_of_v_is_psi() {
    // a v' solves the psi problem with q^2 = 1/a and k = sqrt(lambda)
    let a = ConductivityProfile::new(vec![0.0, 0.3, 0.7, 1.0], vec![0.5, 2.0, 1.0]).unwrap();
    let lambda = 3.7;
    let v = solve_v(&a, lambda).unwrap();
    let psi = solve_psi(&a.q_squared(), lambda.sqrt()).unwrap();
    for x in [0.1, 0.3, 0.55, 1.0] {
        let flux = v.eval(x).unwrap().second_log().value();
        assert!(rel_err(flux, psi.psi(x).unwrap().value()) < 1e-13);
    }
}

#[test]
fn extreme_parameters_stay_finite() {
    let a = ConductivityProfile::new(vec![0.0, 0.5, 1.0], vec![1e-3, 1e3]).unwrap();
    let q2 = a.q_squared();
    let sol = solve_psi(&q2, 1e4).unwrap();
    assert!(sol.node_states().iter().all(|s| s.is_finite()));
    assert!(sol.psi(1.0).unwrap().ln_abs().is_finite());
    let h = transfer_function(&a, 1e8).unwrap();
    assert!(h.is_finite() && h > 0.0);
}

#[test]
fn steady_state_limit() {
    let a = ConductivityProfile::new(vec![0.0, 0.4, 1.0], vec![1.0, 3.0]).unwrap();
    let h = transfer_function(&a, 1e-6).unwrap();
    assert!(rel_err(h, a.thermal_resistance()) < 1e-4);
    let two = ConductivityProfile::constant(2.0).unwrap();
    assert!((transfer_function(&two, 1e-9).unwrap() - 0.5).abs() < 1e-6);
}

fn profile_strategy() -> impl Strategy<Value = ConductivityProfile> {
    (1usize..=5)
        .prop_flat_map(|n| (prop::collection::vec(0.01f64..1.0, n), prop::collection::vec(-2.0f64..2.0, n)))
        .prop_map(|(w, lv)| {
            let total: f64 = w.iter().sum();
            let mut x = vec![0.0];
            let mut acc = 0.0;
            for wi in &w[..w.len() - 1] {
                acc += wi / total;
                x.push(acc);
            }
            x.push(1.0);
            ConductivityProfile::new(x, lv.iter().map(|l| l.exp()).collect()).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scaling_law_for_constants(a in 1e-2f64..1e2, lambda in 1e-3f64..1e3) {
        let prof = ConductivityProfile::constant(a).unwrap();
        let h = transfer_function(&prof, lambda).unwrap();
        prop_assert!(rel_err(h, transfer_function_constant(a, lambda)) < 1e-12);
    }

    #[test]
    fn transfer_positive_decreasing_bounded(a in profile_strategy()) {
        let r = a.thermal_resistance();
        let mut prev = f64::INFINITY;
        for lambda in log_grid(1e-3, 1e3, 25) {
            let h = transfer_function(&a, lambda).unwrap();
            prop_assert!(h > 0.0 && h <= r * (1.0 + 1e-14));
            prop_assert!(h < prev);
            prev = h;
        }
        prop_assert!(rel_err(transfer_function(&a, 1e-6).unwrap(), r) < 1e-4);
    }

    #[test]
    fn normalization_independence(a in profile_strategy(), lambda in 1e-2f64..1e2, c in 1e-6f64..1e6) {
        let h1 = solve_v(&a, lambda).unwrap().transfer();
        let h2 = solve_v_with_flux(&a, lambda, c).unwrap().transfer();
        prop_assert!(rel_err(h2, h1) < 1e-14);
    }

    #[test]
    fn v_positive_and_continuous(a in profile_strategy(), lambda in 1e-2f64..1e2) {
        let sol = solve_v(&a, lambda).unwrap();
        let s0 = sol.node_states()[0];
        prop_assert_eq!(s0.first, 0.0);
        prop_assert_eq!(s0.second_log().value(), 1.0);
        for j in 1..sol.node_states().len() {
            prop_assert!(sol.node_v(j).sign() > 0 && sol.node_flux(j).sign() > 0);
        }
        // one-sided evaluations at interior breakpoints agree
        for &b in a.function().interior_breakpoints() {
            let left = sol.eval(b - 1e-13).unwrap();
            let right = sol.eval(b).unwrap();
            prop_assert!(rel_err(left.first_log().value(), right.first_log().value()) < 1e-9);
            prop_assert!(rel_err(left.second_log().value(), right.second_log().value()) < 1e-9);
        }
    }

    #[test]
    fn psi_monotone_in_x_and_k(a in profile_strategy()) {
        let q2 = a.q_squared();
        let xs: Vec<f64> = (0..=40).map(|i| i as f64 / 40.0).collect();
        let mut prev_k: Option<Vec<f64>> = None;
        for k in [0.5, 1.0, 2.0, 4.0, 8.0, 16.0] {
            let sol = solve_psi(&q2, k).unwrap();
            let mut row = Vec::new();
            let mut prev = 0.0;
            for &x in &xs {
                let s = sol.eval(x).unwrap();
                let lp = s.first_log().ln_abs();
                prop_assert!(s.first_log().sign() > 0 && lp >= 0.0);
                prop_assert!(s.second_log().sign() >= 0);
                prop_assert!(lp >= prev);
                prev = lp;
                row.push(lp);
            }
            if let Some(p) = &prev_k {
                for (now, before) in row.iter().zip(p) {
                    prop_assert!(now >= before);
                }
            }
            prev_k = Some(row);
        }
    }

    #[test]
    fn psi_initial_conditions_and_c1(a in profile_strategy(), k in 0.0f64..50.0) {
        let sol = solve_psi(&a.q_squared(), k).unwrap();
        prop_assert_eq!(sol.node_psi(0).value(), 1.0);
        prop_assert_eq!(sol.node_psi_prime(0).value(), 0.0);
        for &b in a.function().interior_breakpoints() {
            let l = sol.eval(b - 1e-13).unwrap();
            let r = sol.eval(b).unwrap();
            prop_assert!(rel_err(l.first_log().value(), r.first_log().value()) < 1e-9);
            if k > 0.0 {
                prop_assert!(rel_err(l.second_log().value(), r.second_log().value()) < 1e-9);
            }
        }
    }
}
