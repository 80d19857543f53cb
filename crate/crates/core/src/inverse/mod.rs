//! Least-squares reconstruction of a piecewise-constant conductivity from samples of the
//! transfer function.
//!
//! The misfit is taken in `log H`: `r_i = (ln H(lambda_i; a) - ln H_i) / (sigma_i / H_i)`.
//! An `n`-piece profile is described by `2n - 1` unconstrained parameters: one logit per
//! value, mapped into `[c0, c1]` in log space, and `n - 1` softmax logits for the piece
//! widths, each width being at least `min_width`.

mod lm;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

pub use lm::StopReason;

use crate::dataset::TransferDataset;
use crate::error::{domain, validation, Error, Result};
use crate::laplace::transfer_function;
use crate::piecewise::{ConductivityProfile, Norm, DEFAULT_C0, DEFAULT_C1};

pub const DEFAULT_MIN_WIDTH: f64 = 0.02;
/// Distance (L1) within which two restarts count as the same solution.
pub const AGREEMENT_TOL: f64 = 1e-3;
/// Logit magnitude beyond which a value parameter is treated as sitting on a bound.
pub const SATURATION_LOGIT: f64 = 20.0;

/// Residuals `(ln H(lambda_i; a) - ln H_i) / (sigma_i / H_i)`.
pub fn residuals(a: &ConductivityProfile, data: &TransferDataset) -> Result<Vec<f64>> {
    data.samples()
        .par_iter()
        .map(|s| {
            let h = transfer_function(a, s.lambda)?;
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::Numerical(format!("H({}) = {h} is not positive", s.lambda)));
            }
            Ok((h.ln() - s.h.ln()) / (s.sigma / s.h))
        })
        .collect()
}

/// Weighted residual sum of squares.
pub fn objective(a: &ConductivityProfile, data: &TransferDataset) -> Result<f64> {
    Ok(residuals(a, data)?.iter().map(|r| r * r).sum())
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn logit(p: f64) -> f64 {
    let p = p.clamp(1e-12, 1.0 - 1e-12);
    (p / (1.0 - p)).ln()
}

/// Map between the unconstrained parameter vector and `n`-piece profiles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Parameterization {
    n: usize,
    c0: f64,
    c1: f64,
    min_width: f64,
}

impl Parameterization {
    pub fn new(n: usize, c0: f64, c1: f64, min_width: f64) -> Result<Self> {
        if n == 0 {
            return Err(validation("number of pieces must be at least 1"));
        }
        if !(c0 > 0.0 && c0 <= c1 && c1.is_finite()) {
            return Err(validation(format!("bounds must satisfy 0 < c0 <= c1, got c0={c0}, c1={c1}")));
        }
        if min_width.is_nan() || min_width < 0.0 || (n > 1 && n as f64 * min_width >= 1.0) {
            return Err(validation(format!("min_width {min_width} leaves no room for {n} pieces")));
        }
        Ok(Self { n, c0, c1, min_width })
    }

    /// Parameterization matching an existing profile: its piece count and bounds, and a
    /// width floor no larger than half its narrowest piece.
    pub fn for_profile(a: &ConductivityProfile) -> Result<Self> {
        let narrowest = a.function().pieces().map(|(l, r, _)| r - l).fold(f64::INFINITY, f64::min);
        let (c0, c1) = a.bounds();
        Self::new(a.num_pieces(), c0, c1, DEFAULT_MIN_WIDTH.min(0.5 * narrowest))
    }

    pub fn num_pieces(&self) -> usize {
        self.n
    }

    pub fn num_params(&self) -> usize {
        2 * self.n - 1
    }

    fn ln_range(&self) -> f64 {
        (self.c1 / self.c0).ln()
    }

    pub fn values(&self, theta: &[f64]) -> Vec<f64> {
        theta[..self.n]
            .iter()
            .map(|&z| (self.c0.ln() + self.ln_range() * sigmoid(z)).exp().clamp(self.c0, self.c1))
            .collect()
    }

    pub fn widths(&self, theta: &[f64]) -> Vec<f64> {
        let logits: Vec<f64> = theta[self.n..].iter().copied().chain(std::iter::once(0.0)).collect();
        let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = logits.iter().map(|y| (y - top).exp()).collect();
        let total: f64 = e.iter().sum();
        let free = 1.0 - self.n as f64 * self.min_width;
        e.iter().map(|v| self.min_width + free * v / total).collect()
    }

    pub fn breakpoints(&self, theta: &[f64]) -> Vec<f64> {
        let mut x = 0.0;
        let mut out = vec![0.0];
        for w in self.widths(theta) {
            x += w;
            out.push(x.min(1.0));
        }
        *out.last_mut().unwrap() = 1.0;
        out
    }

    pub fn profile(&self, theta: &[f64]) -> Result<ConductivityProfile> {
        ConductivityProfile::with_bounds(self.breakpoints(theta), self.values(theta), self.c0, self.c1)
    }

    /// Parameters reproducing `values` on `breakpoints` (clamped into the admissible set).
    pub fn params_for(&self, values: &[f64], breakpoints: &[f64]) -> Vec<f64> {
        let mut theta: Vec<f64> = values
            .iter()
            .map(|&v| {
                let range = self.ln_range();
                if range == 0.0 {
                    0.0
                } else {
                    logit((v.clamp(self.c0, self.c1) / self.c0).ln() / range)
                }
            })
            .collect();
        let excess: Vec<f64> = breakpoints.windows(2).map(|w| (w[1] - w[0] - self.min_width).max(1e-12)).collect();
        let last = *excess.last().unwrap();
        theta.extend(excess[..self.n - 1].iter().map(|e| (e / last).ln()));
        theta
    }

    /// `d ln a_j / d z_j` for the value logit `z_j`.
    pub fn dlog_value_dz(&self, z: f64) -> f64 {
        let s = sigmoid(z);
        self.ln_range() * s * (1.0 - s)
    }

    fn is_saturated(&self, theta: &[f64], j: usize) -> bool {
        j < self.n && theta[j].abs() > SATURATION_LOGIT
    }
}

/// Finite-difference Jacobian of the residuals in the transformed parameters.
#[derive(Debug, Clone)]
pub struct Jacobian {
    pub matrix: DMatrix<f64>,
    /// Columns computed with a one-sided difference because the parameter sits on a bound.
    pub one_sided: Vec<bool>,
}

impl Jacobian {
    pub fn any_one_sided(&self) -> bool {
        self.one_sided.iter().any(|&b| b)
    }

    /// `sigma_max / sigma_min` (infinite for a rank-deficient matrix).
    pub fn condition_number(&self) -> f64 {
        condition_number(&self.matrix)
    }
}

fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.singular_values();
    let (lo, hi) = sv.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &s| (l.min(s), h.max(s)));
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

fn check_h_rel(h_rel: f64) -> Result<()> {
    if (1e-8..=1e-3).contains(&h_rel) {
        Ok(())
    } else {
        Err(domain(format!("h_rel must lie in [1e-8, 1e-3], got {h_rel}")))
    }
}

/// Residuals of the model at `theta`, with ridge terms on successive log-value differences
/// appended when `ridge > 0`.
fn model_residuals(p: &Parameterization, theta: &[f64], data: &TransferDataset, ridge: f64) -> Result<Vec<f64>> {
    let mut r = residuals(&p.profile(theta)?, data)?;
    if ridge > 0.0 && p.n > 1 {
        let w = ridge.sqrt();
        let vals = p.values(theta);
        r.extend(vals.windows(2).map(|v| w * (v[1] / v[0]).ln()));
    }
    Ok(r)
}

fn jacobian_at(
    p: &Parameterization,
    theta: &[f64],
    data: &TransferDataset,
    h_rel: f64,
    ridge: f64,
) -> Result<Jacobian> {
    let base = model_residuals(p, theta, data, ridge)?;
    let mut matrix = DMatrix::zeros(base.len(), theta.len());
    let mut one_sided = vec![false; theta.len()];
    let mut t = theta.to_vec();
    for j in 0..theta.len() {
        let h = h_rel * theta[j].abs().max(1.0);
        let col: Vec<f64> = if p.is_saturated(theta, j) {
            one_sided[j] = true;
            // step back toward the interior
            let s = -theta[j].signum() * h;
            t[j] = theta[j] + s;
            let r = model_residuals(p, &t, data, ridge)?;
            r.iter().zip(&base).map(|(a, b)| (a - b) / s).collect()
        } else {
            t[j] = theta[j] + h;
            let rp = model_residuals(p, &t, data, ridge)?;
            t[j] = theta[j] - h;
            let rm = model_residuals(p, &t, data, ridge)?;
            rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * h)).collect()
        };
        t[j] = theta[j];
        for (i, v) in col.into_iter().enumerate() {
            matrix[(i, j)] = v;
        }
    }
    Ok(Jacobian { matrix, one_sided })
}

/// Jacobian of [`residuals`] with respect to the transformed parameters of `a`
/// (see [`Parameterization::for_profile`]), by central differences of relative size `h_rel`.
pub fn jacobian(a: &ConductivityProfile, data: &TransferDataset, h_rel: f64) -> Result<Jacobian> {
    check_h_rel(h_rel)?;
    let p = Parameterization::for_profile(a)?;
    let theta = p.params_for(a.values(), a.breakpoints());
    jacobian_at(&p, &theta, data, h_rel, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructOptions {
    pub c0: f64,
    pub c1: f64,
    pub restarts: usize,
    pub max_iter: usize,
    /// Stop when every Jacobian column is within this cosine of orthogonal to the residual.
    pub tol_grad: f64,
    /// Stop when an accepted step is below this size relative to the parameter norm.
    pub tol_step: f64,
    pub min_width: f64,
    pub damping_init: f64,
    pub seed: u64,
    /// Weight of the optional penalty on successive log-value differences (0 disables it).
    pub ridge: f64,
    /// Relative finite-difference step.
    pub h_rel: f64,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        Self {
            c0: DEFAULT_C0,
            c1: DEFAULT_C1,
            restarts: 8,
            max_iter: 200,
            tol_grad: 1e-10,
            tol_step: 1e-12,
            min_width: DEFAULT_MIN_WIDTH,
            damping_init: 1e-3,
            seed: 0,
            ridge: 0.0,
            h_rel: 1e-6,
        }
    }
}

/// Final state of one restart.
#[derive(Debug, Clone, Serialize)]
pub struct RestartSummary {
    pub index: usize,
    pub objective: f64,
    pub iterations: usize,
    pub stop: StopReason,
    pub converged: bool,
    pub distance_to_best: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReconstructionResult {
    pub profile: ConductivityProfile,
    /// Weighted residual sum of squares of `profile` (ridge terms excluded).
    pub objective: f64,
    pub iterations: usize,
    /// Best restart is stationary, off the value bounds, and its objective is at most twice the sample count.
    pub converged: bool,
    pub stop: StopReason,
    /// Converged restarts within [`AGREEMENT_TOL`] (L1) of the best profile, best included.
    pub restarts_agreeing: usize,
    pub restarts_converged: usize,
    pub jacobian_condition: f64,
    /// The final Jacobian needed a one-sided difference (a value on its bound).
    pub jacobian_one_sided: bool,
    pub restarts: Vec<RestartSummary>,
}

struct RestartRun {
    profile: ConductivityProfile,
    objective: f64,
    penalized: f64,
    iterations: usize,
    stop: StopReason,
    theta: Vec<f64>,
}

fn initial_params(p: &Parameterization, data: &TransferDataset, opts: &ReconstructOptions) -> Vec<Vec<f64>> {
    // H(0+) = \int dx / a: the smallest-lambda sample pins the harmonic mean.
    let a_mean = (1.0 / data.samples()[0].h).clamp(opts.c0, opts.c1);
    let n = p.n;
    let uniform: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    let base = p.params_for(&vec![a_mean; n], &uniform);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    (0..opts.restarts.max(1))
        .map(|r| {
            let mut theta = base.clone();
            if r > 0 {
                for (j, t) in theta.iter_mut().enumerate() {
                    let z: f64 = rng.sample(StandardNormal);
                    *t += if j < n { z / p.dlog_value_dz(*t).max(1e-3) * 0.7 } else { 0.7 * z };
                }
            }
            theta
        })
        .collect()
}

fn run_restart(
    p: &Parameterization,
    theta0: Vec<f64>,
    data: &TransferDataset,
    opts: &ReconstructOptions,
) -> Result<RestartRun> {
    let settings = lm::LmSettings {
        max_iter: opts.max_iter,
        tol_grad: opts.tol_grad,
        tol_step: opts.tol_step,
        damping_init: opts.damping_init,
    };
    let out = lm::minimize(
        |t| model_residuals(p, t, data, opts.ridge),
        |t| Ok(jacobian_at(p, t, data, opts.h_rel, opts.ridge)?.matrix),
        theta0,
        &settings,
    )?;
    let profile = p.profile(&out.theta)?;
    let objective = objective(&profile, data)?;
    let penalized = out.residuals.iter().map(|r| r * r).sum();
    Ok(RestartRun { profile, objective, penalized, iterations: out.iterations, stop: out.stop, theta: out.theta })
}

/// Multi-start damped least squares for an `n`-piece profile.
pub fn reconstruct(data: &TransferDataset, n: usize, opts: &ReconstructOptions) -> Result<ReconstructionResult> {
    if data.len() < 2 * n {
        return Err(Error::Config(format!(
            "{} samples cannot determine {} unknowns; need at least {}",
            data.len(),
            2 * n - 1,
            2 * n
        )));
    }
    check_h_rel(opts.h_rel)?;
    if opts.ridge.is_nan() || opts.ridge < 0.0 {
        return Err(validation("ridge weight must be nonnegative"));
    }
    let p = Parameterization::new(n, opts.c0, opts.c1, opts.min_width)?;
    let starts = initial_params(&p, data, opts);
    let runs: Vec<Result<RestartRun>> = starts.into_par_iter().map(|t| run_restart(&p, t, data, opts)).collect();

    let m = data.len() as f64;
    let is_converged = |run: &RestartRun| {
        run.stop.is_stationary() && run.objective <= 2.0 * m && !(0..n).any(|j| p.is_saturated(&run.theta, j))
    };
    let mut best: Option<usize> = None;
    let mut first_err = None;
    for (i, r) in runs.iter().enumerate() {
        match r {
            Ok(run) => {
                if best.is_none_or(|b| run.penalized < runs[b].as_ref().unwrap().penalized) {
                    best = Some(i);
                }
            }
            Err(e) if first_err.is_none() => first_err = Some(e.to_string()),
            Err(_) => {}
        }
    }
    let Some(b) = best else {
        return Err(Error::Numerical(format!("every restart failed: {}", first_err.unwrap_or_default())));
    };
    let best_run = runs[b].as_ref().unwrap();

    let mut summaries = Vec::new();
    let (mut agreeing, mut n_converged) = (0, 0);
    for (i, r) in runs.iter().enumerate() {
        let Ok(run) = r else { continue };
        let converged = is_converged(run);
        let distance = run.profile.function().distance(best_run.profile.function(), Norm::L1);
        if converged {
            n_converged += 1;
            if distance <= AGREEMENT_TOL {
                agreeing += 1;
            }
        }
        summaries.push(RestartSummary {
            index: i,
            objective: run.objective,
            iterations: run.iterations,
            stop: run.stop,
            converged,
            distance_to_best: distance,
        });
    }

    let jac = jacobian_at(&p, &best_run.theta, data, opts.h_rel, 0.0)?;
    Ok(ReconstructionResult {
        profile: best_run.profile.clone(),
        objective: best_run.objective,
        iterations: best_run.iterations,
        converged: is_converged(best_run),
        stop: best_run.stop,
        restarts_agreeing: agreeing,
        restarts_converged: n_converged,
        jacobian_condition: jac.condition_number(),
        jacobian_one_sided: jac.any_one_sided(),
        restarts: summaries,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectOptions {
    /// Multiplier of the `(2n - 1) ln m` complexity term.
    pub penalty: f64,
    /// Adjacent pieces whose values differ by less than this (relative) are merged.
    pub merge_tol: f64,
}

impl Default for SelectOptions {
    fn default() -> Self {
        Self { penalty: 1.0, merge_tol: 1e-3 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CandidateScore {
    pub n: usize,
    pub objective: f64,
    pub score: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelSelection {
    pub best_n: usize,
    pub result: ReconstructionResult,
    pub candidates: Vec<CandidateScore>,
}

/// Merges adjacent pieces whose values agree within `tol` relative; merged pieces take the
/// width-weighted harmonic mean, which preserves `\int dx / a`.
pub fn merge_close_pieces(a: &ConductivityProfile, tol: f64) -> Result<ConductivityProfile> {
    let mut bps = vec![0.0];
    let mut vals: Vec<f64> = Vec::new();
    let mut resist: Vec<f64> = Vec::new();
    for (l, r, v) in a.function().pieces() {
        if let Some(&last) = vals.last() {
            if (v - last).abs() <= tol * v.max(last) {
                let x0 = bps[bps.len() - 2];
                *resist.last_mut().unwrap() += (r - l) / v;
                *bps.last_mut().unwrap() = r;
                *vals.last_mut().unwrap() = (r - x0) / resist.last().unwrap();
                continue;
            }
        }
        bps.push(r);
        vals.push(v);
        resist.push((r - l) / v);
    }
    let (c0, c1) = a.bounds();
    let vals = vals.into_iter().map(|v| v.clamp(c0, c1)).collect();
    ConductivityProfile::with_bounds(bps, vals, c0, c1)
}

/// Fits `n = 1..=n_max` and picks the minimizer of `objective + penalty (2n - 1) ln m`.
pub fn model_select(
    data: &TransferDataset,
    n_max: usize,
    opts: &ReconstructOptions,
    sel: &SelectOptions,
) -> Result<ModelSelection> {
    if n_max == 0 {
        return Err(validation("n_max must be at least 1"));
    }
    let m = data.len() as f64;
    let mut best: Option<(f64, usize, ReconstructionResult)> = None;
    let mut candidates = Vec::new();
    let mut last_err = None;
    for n in 1..=n_max {
        if 2 * n > data.len() {
            break;
        }
        match reconstruct(data, n, opts) {
            Ok(res) => {
                let score = res.objective + sel.penalty * (2 * n - 1) as f64 * m.ln();
                candidates.push(CandidateScore { n, objective: res.objective, score, converged: res.converged });
                if best.as_ref().is_none_or(|(s, _, _)| score < *s) {
                    best = Some((score, n, res));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let Some((_, best_n, mut result)) = best else {
        return Err(last_err.unwrap_or_else(|| Error::Config("no admissible piece count".into())));
    };
    let merged = merge_close_pieces(&result.profile, sel.merge_tol)?;
    if merged.num_pieces() != result.profile.num_pieces() {
        result.objective = objective(&merged, data)?;
        result.profile = merged;
    }
    Ok(ModelSelection { best_n, result, candidates })
}
