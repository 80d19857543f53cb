mod support;

use pwcheat::inverse::{jacobian, objective, reconstruct, residuals, ReconstructOptions};
use pwcheat::piecewise::ConductivityProfile;
use pwcheat::time_domain::synthesize_dataset;
use support::*;

fn linf_value_error(est: &ConductivityProfile, truth: &ConductivityProfile) -> f64 {
    est.values().iter().zip(truth.values()).map(|(a, b)| rel_err(*a, *b)).fold(0.0, f64::max)
}

fn breakpoint_error(est: &ConductivityProfile, truth: &ConductivityProfile) -> f64 {
    est.breakpoints().iter().zip(truth.breakpoints()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

fn recovered(est: &ConductivityProfile, truth: &ConductivityProfile) -> bool {
    est.num_pieces() == truth.num_pieces() && linf_value_error(est, truth) < 1e-3 && breakpoint_error(est, truth) < 1e-2
}

#[test]
fn reported_objective_matches_recomputation() {
    let mut r = rng(11);
    for _ in 0..4 {
        let truth = random_profile(&mut r, 2, 0.5, 2.5, 0.1, 1.5);
        let data = synthesize_dataset(&truth, &log_grid(1e-2, 1e2, 16), 0.01, 5).unwrap();
        let res = reconstruct(&data, 2, &ReconstructOptions::default()).unwrap();
        let again = objective(&res.profile, &data).unwrap();
        let summed: f64 = residuals(&res.profile, &data).unwrap().iter().map(|x| x * x).sum();
        assert!(rel_err(again, res.objective) <= 1e-12, "{again} vs {}", res.objective);
        assert!(rel_err(summed, res.objective) <= 1e-12);
    }
}

#[test]
fn jacobian_conditioning_worsens_as_grid_shrinks_to_small_lambda() {
    let truth = ConductivityProfile::new(vec![0.0, 0.4, 1.0], vec![1.0, 3.0]).unwrap();
    let mut prev = 0.0;
    for hi in [100.0, 10.0, 1.0, 0.1] {
        let data = synthesize_dataset(&truth, &log_grid(1e-2, hi, 8), 0.0, 0).unwrap();
        let cond = jacobian(&truth, &data, 1e-6).unwrap().condition_number();
        assert!(cond >= prev, "condition {cond} dropped below {prev} at lambda_max {hi}");
        prev = cond;
    }
}

#[test]
fn noisy_fit_is_statistically_consistent() {
    let truth = ConductivityProfile::new(vec![0.0, 0.4, 1.0], vec![1.0, 3.0]).unwrap();
    for seed in 0..5 {
        let data = synthesize_dataset(&truth, &log_grid(1e-2, 1e2, 16), 0.01, seed).unwrap();
        let res = reconstruct(&data, 2, &ReconstructOptions { seed, ..Default::default() }).unwrap();
        assert!(res.converged, "seed {seed}: {res:?}");
        assert!(res.objective <= 2.0 * data.len() as f64, "seed {seed}: chi2 {}", res.objective);
    }
}

#[test]
fn converged_restarts_agree_on_noiseless_data() {
    let mut r = rng(23);
    for trial in 0..6 {
        let truth = random_profile(&mut r, 2, 0.5, 2.5, 0.1, 1.5);
        let data = synthesize_dataset(&truth, &log_grid(1e-2, 1e2, 16), 0.0, 0).unwrap();
        let res = reconstruct(&data, 2, &ReconstructOptions { seed: trial, ..Default::default() }).unwrap();
        assert!(res.restarts_converged > 0, "trial {trial}");
        assert_eq!(res.restarts_agreeing, res.restarts_converged, "trial {trial}: {:?}", res.restarts);
    }
}

#[test]
fn noiseless_recovery_up_to_three_pieces() {
    let opts = ReconstructOptions { restarts: 32, max_iter: 1000, ..Default::default() };
    let mut r = rng(2024);
    for n in 1..=3 {
        let mut hits = 0;
        for trial in 0..20 {
            let truth = random_profile(&mut r, n, 0.5, 2.5, 0.1, 1.5);
            let data = synthesize_dataset(&truth, &log_grid(1e-2, 1e2, 8 * n), 0.0, 0).unwrap();
            let res = reconstruct(&data, n, &ReconstructOptions { seed: trial, ..opts }).unwrap();
            if recovered(&res.profile, &truth) {
                hits += 1;
            } else {
                assert!(
                    !res.converged,
                    "n={n} trial {trial}: wrong answer reported as converged: {:?} vs {:?}",
                    res.profile, truth
                );
            }
        }
        assert!(hits >= 16, "n={n}: only {hits}/20 recovered");
    }
}

#[test]
fn too_few_samples_is_rejected() {
    let truth = ConductivityProfile::new(vec![0.0, 0.5, 1.0], vec![1.0, 2.0]).unwrap();
    let data = synthesize_dataset(&truth, &log_grid(1e-2, 1e2, 5), 0.0, 0).unwrap();
    assert!(reconstruct(&data, 3, &ReconstructOptions::default()).is_err());
}
