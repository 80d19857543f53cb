//! Time-domain simulation of `u_t = (a(x) u_x)_x`, `u(x, 0) = 0`, `u(0, t) = 0`,
//! `a(1) u_x(1, t) = f(t)`, and numerical Laplace transforms of the sampled output.
//!
//! Space is discretized by cell-centered finite volumes on a grid whose faces include every
//! breakpoint of `a`, so each cell has a single conductivity and the harmonic face
//! transmissibility is exact. Time stepping is Crank-Nicolson with Rannacher smoothing:
//! the step at `t = 0` and every step containing a jump of `f` is replaced by two
//! backward-Euler half steps.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dataset::{Provenance, TransferDataset, TransferSample};
use crate::error::{validation, Error, Result};
use crate::format::{csv_metadata, fmt17};
use crate::laplace::transfer_function;
use crate::piecewise::ConductivityProfile;

/// Boundary flux `f(t)` at `x = 1`.
#[derive(Debug, Clone, PartialEq)]
pub enum FluxSpec {
    /// `f(t) = amplitude` for all `t >= 0`.
    Constant { amplitude: f64 },
    /// `f(t) = amplitude` on `[t_on, t_off)`, zero elsewhere.
    Pulse { amplitude: f64, t_on: f64, t_off: f64 },
    /// Piecewise-linear through `(t, f)` samples, zero outside the sampled range.
    Custom { samples: Vec<(f64, f64)> },
}

impl FluxSpec {
    pub fn unit_pulse(t_off: f64) -> Self {
        FluxSpec::Pulse { amplitude: 1.0, t_on: 0.0, t_off }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            FluxSpec::Constant { amplitude } if !amplitude.is_finite() => {
                Err(validation("flux amplitude must be finite"))
            }
            FluxSpec::Pulse { amplitude, t_on, t_off } => {
                if !(amplitude.is_finite() && t_on.is_finite() && t_off.is_finite()) {
                    return Err(validation("pulse parameters must be finite"));
                }
                if !(*t_on >= 0.0 && t_on < t_off) {
                    return Err(validation(format!("pulse needs 0 <= t_on < t_off, got [{t_on}, {t_off}]")));
                }
                Ok(())
            }
            FluxSpec::Custom { samples } => {
                if samples.len() < 2 {
                    return Err(validation("custom flux needs at least two samples"));
                }
                if samples.iter().any(|(t, f)| !t.is_finite() || !f.is_finite() || *t < 0.0) {
                    return Err(validation("custom flux samples must be finite with t >= 0"));
                }
                if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(validation("custom flux times must be strictly increasing"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// True when `f` vanishes everywhere; the inverse problem needs `f` not identically 0.
    pub fn is_identically_zero(&self) -> bool {
        match self {
            FluxSpec::Constant { amplitude } | FluxSpec::Pulse { amplitude, .. } => *amplitude == 0.0,
            FluxSpec::Custom { samples } => samples.iter().all(|&(_, f)| f == 0.0),
        }
    }

    fn one_sided(&self, t: f64, right: bool) -> f64 {
        match self {
            FluxSpec::Constant { amplitude } => {
                if t > 0.0 || (t == 0.0 && right) {
                    *amplitude
                } else {
                    0.0
                }
            }
            FluxSpec::Pulse { amplitude, t_on, t_off } => {
                let inside = if right { *t_on <= t && t < *t_off } else { *t_on < t && t <= *t_off };
                if inside {
                    *amplitude
                } else {
                    0.0
                }
            }
            FluxSpec::Custom { samples } => {
                let (t0, t1) = (samples[0].0, samples[samples.len() - 1].0);
                if t < t0 || t > t1 || (t == t0 && !right) || (t == t1 && right) {
                    return 0.0;
                }
                let i = samples.partition_point(|s| s.0 <= t).clamp(1, samples.len() - 1);
                let (ta, fa) = samples[i - 1];
                let (tb, fb) = samples[i];
                fa + (fb - fa) * (t - ta) / (tb - ta)
            }
        }
    }

    /// Sampled value: the average of the one-sided limits for `t > 0`, the right limit at 0.
    pub fn value(&self, t: f64) -> f64 {
        if t <= 0.0 {
            self.one_sided(0.0, true)
        } else {
            0.5 * (self.one_sided(t, false) + self.one_sided(t, true))
        }
    }

    /// Exact integral of `f` over `[t0, t1]`.
    pub fn integral(&self, t0: f64, t1: f64) -> f64 {
        let overlap = |a: f64, b: f64| (t1.min(b) - t0.max(a)).max(0.0);
        match self {
            FluxSpec::Constant { amplitude } => amplitude * overlap(0.0, f64::INFINITY),
            FluxSpec::Pulse { amplitude, t_on, t_off } => amplitude * overlap(*t_on, *t_off),
            FluxSpec::Custom { samples } => samples
                .windows(2)
                .map(|w| {
                    let (ta, fa) = w[0];
                    let (tb, fb) = w[1];
                    let lo = t0.max(ta);
                    let hi = t1.min(tb);
                    if hi <= lo {
                        return 0.0;
                    }
                    let at = |t: f64| fa + (fb - fa) * (t - ta) / (tb - ta);
                    0.5 * (at(lo) + at(hi)) * (hi - lo)
                })
                .sum(),
        }
    }

    /// Times `t >= 0` at which `f` jumps, including the switch-on at 0.
    pub fn jump_times(&self) -> Vec<f64> {
        let mut out = vec![0.0];
        match self {
            FluxSpec::Constant { .. } => {}
            FluxSpec::Pulse { t_on, t_off, .. } => {
                out.push(*t_on);
                out.push(*t_off);
            }
            FluxSpec::Custom { samples } => {
                if samples[0].1 != 0.0 {
                    out.push(samples[0].0);
                }
                let last = samples[samples.len() - 1];
                if last.1 != 0.0 {
                    out.push(last.0);
                }
            }
        }
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// Closed-form Laplace transform where one exists (constant and pulse).
    pub fn laplace(&self, lambda: f64) -> Option<f64> {
        match self {
            FluxSpec::Constant { amplitude } => Some(amplitude / lambda),
            FluxSpec::Pulse { amplitude, t_on, t_off } => {
                Some(amplitude * ((-lambda * t_on).exp() - (-lambda * t_off).exp()) / lambda)
            }
            FluxSpec::Custom { .. } => None,
        }
    }
}

/// Breakpoint-aligned cell-centered grid on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct Grid {
    faces: Vec<f64>,
    widths: Vec<f64>,
    conductivity: Vec<f64>,
    /// `trans[i]` couples cell `i-1` and cell `i`; `trans[0]` couples cell 0 to the
    /// Dirichlet face at `x = 0`.
    trans: Vec<f64>,
}

impl Grid {
    /// Distributes about `nx` cells over the pieces in proportion to their widths, at least
    /// two per piece.
    pub fn aligned(a: &ConductivityProfile, nx: usize) -> Result<Self> {
        let pieces = a.num_pieces();
        if nx < 2 * pieces {
            return Err(Error::Config(format!("nx = {nx} cannot resolve {pieces} pieces with two cells each")));
        }
        let mut faces = vec![0.0];
        let mut widths = Vec::new();
        let mut conductivity = Vec::new();
        for (l, r, av) in a.function().pieces() {
            let cells = ((r - l) * nx as f64).round().max(2.0) as usize;
            let h = (r - l) / cells as f64;
            for c in 0..cells {
                widths.push(h);
                conductivity.push(av);
                faces.push(if c + 1 == cells { r } else { l + (c + 1) as f64 * h });
            }
        }
        let mut trans = Vec::with_capacity(widths.len());
        trans.push(2.0 * conductivity[0] / widths[0]);
        for i in 1..widths.len() {
            let resistance = 0.5 * widths[i - 1] / conductivity[i - 1] + 0.5 * widths[i] / conductivity[i];
            trans.push(1.0 / resistance);
        }
        Ok(Self { faces, widths, conductivity, trans })
    }

    pub fn num_cells(&self) -> usize {
        self.widths.len()
    }

    pub fn faces(&self) -> &[f64] {
        &self.faces
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn centers(&self) -> Vec<f64> {
        self.faces.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// `\int u^2 dx` for cell averages `u`.
    pub fn energy(&self, u: &[f64]) -> f64 {
        u.iter().zip(&self.widths).map(|(v, h)| h * v * v).sum()
    }

    /// Temperature at `x = 1` reconstructed from the last cell and the boundary flux.
    pub fn boundary_value(&self, u: &[f64], flux: f64) -> f64 {
        let n = self.num_cells() - 1;
        u[n] + flux * 0.5 * self.widths[n] / self.conductivity[n]
    }

    /// Largest step for which the explicit half of Crank-Nicolson has a nonnegative matrix,
    /// which makes the scheme positivity preserving.
    pub fn max_positive_cn_dt(&self) -> f64 {
        (0..self.num_cells())
            .map(|i| {
                let right = self.trans.get(i + 1).copied().unwrap_or(0.0);
                2.0 * self.widths[i] / (self.trans[i] + right)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Solves `(M + c K) x = rhs` (tridiagonal, M-matrix) in place.
    fn implicit_solve(&self, c: f64, rhs: &mut [f64], scratch: &mut [f64]) {
        let n = self.num_cells();
        // Thomas algorithm; off-diagonals are -c * trans.
        let diag = |i: usize| {
            let right = if i + 1 < n { self.trans[i + 1] } else { 0.0 };
            self.widths[i] + c * (self.trans[i] + right)
        };
        let mut denom = diag(0);
        scratch[0] = if n > 1 { -c * self.trans[1] / denom } else { 0.0 };
        rhs[0] /= denom;
        for i in 1..n {
            let lower = -c * self.trans[i];
            denom = diag(i) - lower * scratch[i - 1];
            scratch[i] = if i + 1 < n { -c * self.trans[i + 1] / denom } else { 0.0 };
            rhs[i] = (rhs[i] - lower * rhs[i - 1]) / denom;
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= scratch[i] * rhs[i + 1];
        }
    }

    /// `out = M u - c K u`.
    fn explicit_apply(&self, c: f64, u: &[f64], out: &mut [f64]) {
        let n = self.num_cells();
        for i in 0..n {
            let mut flux_in = -self.trans[i] * u[i];
            if i > 0 {
                flux_in += self.trans[i] * u[i - 1];
            }
            if i + 1 < n {
                flux_in += self.trans[i + 1] * (u[i + 1] - u[i]);
            }
            out[i] = self.widths[i] * u[i] + c * flux_in;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeScheme {
    /// Crank-Nicolson with backward-Euler half steps at start-up and at flux jumps.
    CrankNicolsonRannacher,
    BackwardEuler,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationConfig {
    /// Approximate number of cells.
    pub nx: usize,
    pub dt: f64,
    pub t_end: f64,
    pub scheme: TimeScheme,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self { nx: 400, dt: 1e-3, t_end: 40.0, scheme: TimeScheme::CrankNicolsonRannacher }
    }
}

/// `f(t_m)` and `g(t_m) = u(1, t_m)` on `t_m = m dt`, `m = 0..=M`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    dt: f64,
    f: Vec<f64>,
    g: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Signal {
    F,
    G,
}

impl TimeSeries {
    pub fn new(dt: f64, f: Vec<f64>, g: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(validation("time step must be positive"));
        }
        if f.len() != g.len() || f.is_empty() {
            return Err(validation("f and g must have the same nonzero length"));
        }
        if f.iter().chain(&g).any(|v| !v.is_finite()) {
            return Err(validation("time series contains non-finite values"));
        }
        if g[0] != 0.0 {
            return Err(validation("g(0) must be 0 for a zero initial temperature"));
        }
        Ok(Self { dt, f, g })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.f.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f.is_empty()
    }

    pub fn t_end(&self) -> f64 {
        (self.len() - 1) as f64 * self.dt
    }

    pub fn f(&self) -> &[f64] {
        &self.f
    }

    pub fn g(&self) -> &[f64] {
        &self.g
    }

    pub fn signal(&self, which: Signal) -> &[f64] {
        match which {
            Signal::F => &self.f,
            Signal::G => &self.g,
        }
    }

    /// CSV with header `t,f,g`, preceded by `#` metadata lines.
    pub fn to_csv(&self, meta: &[(String, String)]) -> String {
        let mut out = csv_metadata(meta);
        out.push_str("t,f,g\n");
        for (m, (f, g)) in self.f.iter().zip(&self.g).enumerate() {
            out.push_str(&format!("{},{},{}\n", fmt17(m as f64 * self.dt), fmt17(*f), fmt17(*g)));
        }
        out
    }
}

/// Runs the simulation, calling `observe(t, u)` with the cell averages after every step
/// (and once at `t = 0`).
pub fn simulate_observed(
    a: &ConductivityProfile,
    flux: &FluxSpec,
    cfg: &SimulationConfig,
    mut observe: impl FnMut(f64, &Grid, &[f64]),
) -> Result<TimeSeries> {
    flux.validate()?;
    if !(cfg.dt > 0.0 && cfg.dt.is_finite() && cfg.t_end > 0.0 && cfg.t_end.is_finite()) {
        return Err(Error::Config("dt and t_end must be positive and finite".into()));
    }
    let grid = Grid::aligned(a, cfg.nx)?;
    let n = grid.num_cells();
    let steps = (cfg.t_end / cfg.dt).round().max(1.0) as usize;
    let dt = cfg.dt;
    let jumps = flux.jump_times();

    let mut u = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    let mut f_samples = Vec::with_capacity(steps + 1);
    let mut g_samples = Vec::with_capacity(steps + 1);
    f_samples.push(flux.value(0.0));
    g_samples.push(0.0);
    observe(0.0, &grid, &u);

    let mut jump_idx = 0;
    for m in 0..steps {
        let t0 = m as f64 * dt;
        let t1 = (m + 1) as f64 * dt;
        let mut smooth = cfg.scheme == TimeScheme::BackwardEuler;
        while jump_idx < jumps.len() && jumps[jump_idx] < t1 {
            if jumps[jump_idx] >= t0 {
                smooth = true;
            }
            jump_idx += 1;
        }
        if smooth {
            let half = 0.5 * dt;
            for s in 0..2 {
                let ta = t0 + s as f64 * half;
                // M u^{n+1} + dt/2 K u^{n+1} = M u^n + (dt/2) e_N fbar
                for i in 0..n {
                    rhs[i] = grid.widths[i] * u[i];
                }
                rhs[n - 1] += flux.integral(ta, ta + half);
                grid.implicit_solve(half, &mut rhs, &mut scratch);
                u.copy_from_slice(&rhs);
            }
        } else {
            grid.explicit_apply(0.5 * dt, &u, &mut rhs);
            rhs[n - 1] += flux.integral(t0, t1);
            grid.implicit_solve(0.5 * dt, &mut rhs, &mut scratch);
            u.copy_from_slice(&rhs);
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite temperature at t = {t1}")));
        }
        let f1 = flux.value(t1);
        f_samples.push(f1);
        g_samples.push(grid.boundary_value(&u, f1));
        observe(t1, &grid, &u);
    }
    TimeSeries::new(dt, f_samples, g_samples)
}

pub fn simulate(a: &ConductivityProfile, flux: &FluxSpec, cfg: &SimulationConfig) -> Result<TimeSeries> {
    simulate_observed(a, flux, cfg, |_, _, _| {})
}

/// Trapezoidal Laplace transform of a sampled signal, with a bound on the truncated tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceEstimate {
    pub value: f64,
    /// `|s_M| e^{-lambda T} / lambda`: the tail if the signal stays below its last sample.
    pub tail_bound: f64,
}

/// Fraction of the integral the tail bound may reach before the estimate is refused.
pub const TAIL_FRACTION: f64 = 1e-3;
/// Default decay threshold relative to the signal's peak.
pub const DEFAULT_TAIL_TOL_REL: f64 = 1e-8;

pub fn laplace_of_samples(series: &TimeSeries, which: Signal, lambda: f64) -> Result<LaplaceEstimate> {
    laplace_of_samples_with_tol(series, which, lambda, None)
}

/// `tail_tol` is absolute; `None` uses `1e-8 * max |signal|`.
pub fn laplace_of_samples_with_tol(
    series: &TimeSeries,
    which: Signal,
    lambda: f64,
    tail_tol: Option<f64>,
) -> Result<LaplaceEstimate> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(crate::error::domain(format!("lambda must be positive, got {lambda}")));
    }
    let s = series.signal(which);
    let dt = series.dt;
    let mut value = 0.0;
    for (m, w) in s.windows(2).enumerate() {
        let ea = (-lambda * m as f64 * dt).exp();
        let eb = (-lambda * (m + 1) as f64 * dt).exp();
        value += 0.5 * dt * (w[0] * ea + w[1] * eb);
    }
    let last = s.last().copied().unwrap_or(0.0).abs();
    let peak = s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = tail_tol.unwrap_or(DEFAULT_TAIL_TOL_REL * peak);
    let tail_bound = last * (-lambda * series.t_end()).exp() / lambda;
    if last > tol && tail_bound > TAIL_FRACTION * value.abs() {
        return Err(Error::Numerical(format!(
            "signal has not decayed (last sample {last:e}); tail bound {tail_bound:e} dominates at lambda = {lambda}"
        )));
    }
    Ok(LaplaceEstimate { value, tail_bound })
}

/// Relative noise level below which `sigma_i` is floored, so noiseless datasets still carry
/// usable weights.
pub const SIGMA_FLOOR_REL: f64 = 1e-6;

/// Samples `H(lambda_i)` with multiplicative Gaussian noise.
///
/// Noise comes from ChaCha8 seeded with `seed` (`rand_chacha::ChaCha8Rng::seed_from_u64`)
/// and standard normals drawn with `rand_distr::StandardNormal` (ziggurat), in the order
/// of `lambda_grid`.
pub fn synthesize_dataset(
    a: &ConductivityProfile,
    lambda_grid: &[f64],
    noise_rel: f64,
    seed: u64,
) -> Result<TransferDataset> {
    if lambda_grid.is_empty() {
        return Err(validation("lambda grid is empty"));
    }
    if !(noise_rel >= 0.0 && noise_rel.is_finite()) {
        return Err(validation("noise_rel must be finite and >= 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(lambda_grid.len());
    for &lambda in lambda_grid {
        let exact = transfer_function(a, lambda)?;
        let xi: f64 = StandardNormal.sample(&mut rng);
        let h = if noise_rel == 0.0 { exact } else { exact * (1.0 + noise_rel * xi) };
        samples.push(TransferSample { lambda, h, sigma: noise_rel.max(SIGMA_FLOOR_REL) * h });
    }
    TransferDataset::new(samples, Provenance::Synthetic { seed, noise_rel })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coarse() -> SimulationConfig {
        SimulationConfig { nx: 50, dt: 0.01, t_end: 2.0, ..Default::default() }
    }

    #[test]
    fn zero_flux_gives_zero_output() {
        let a = ConductivityProfile::new(vec![0.0, 0.5, 1.0], vec![1.0, 3.0]).unwrap();
        let ts = simulate(&a, &FluxSpec::Constant { amplitude: 0.0 }, &coarse()).unwrap();
        assert!(ts.g().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn steady_state_constant_flux() {
        let a = ConductivityProfile::constant(1.0).unwrap();
        let cfg = SimulationConfig { nx: 100, dt: 0.01, t_end: 12.0, ..Default::default() };
        let ts = simulate(&a, &FluxSpec::Constant { amplitude: 1.0 }, &cfg).unwrap();
        assert!((ts.g().last().unwrap() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn grid_aligns_with_breakpoints() {
        let a = ConductivityProfile::new(vec![0.0, 0.37, 0.5, 1.0], vec![1.0, 2.0, 3.0]).unwrap();
        let g = Grid::aligned(&a, 40).unwrap();
        for b in a.breakpoints() {
            assert!(g.faces().iter().any(|f| f == b));
        }
        assert!(matches!(Grid::aligned(&a, 5), Err(Error::Config(_))));
    }

    #[test]
    fn flux_spec_validation() {
        let bad = FluxSpec::Pulse { amplitude: 1.0, t_on: 2.0, t_off: 1.0 };
        assert!(bad.validate().is_err());
        let a = ConductivityProfile::constant(1.0).unwrap();
        assert!(simulate(&a, &bad, &coarse()).is_err());
        assert!(FluxSpec::Custom { samples: vec![(1.0, 0.0), (0.5, 1.0)] }.validate().is_err());
    }

    #[test]
    fn pulse_sampling_convention() {
        let p = FluxSpec::unit_pulse(1.0);
        assert_eq!(p.value(0.0), 1.0);
        assert_eq!(p.value(0.5), 1.0);
        assert_eq!(p.value(1.0), 0.5);
        assert_eq!(p.value(1.5), 0.0);
        assert!((p.integral(0.9, 1.2) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn custom_flux_integral_is_trapezoid() {
        let c = FluxSpec::Custom { samples: vec![(0.0, 0.0), (1.0, 2.0), (2.0, 0.0)] };
        assert!((c.integral(0.0, 2.0) - 2.0).abs() < 1e-15);
        assert!((c.value(0.5) - 1.0).abs() < 1e-15);
        assert_eq!(c.value(3.0), 0.0);
    }

    #[test]
    fn laplace_of_zero_and_pulse() {
        let ts = TimeSeries::new(0.01, vec![0.0; 11], vec![0.0; 11]).unwrap();
        assert_eq!(laplace_of_samples(&ts, Signal::G, 1.0).unwrap().value, 0.0);

        let dt = 1e-3;
        let p = FluxSpec::unit_pulse(1.0);
        let f: Vec<f64> = (0..=20000).map(|m| p.value(m as f64 * dt)).collect();
        let ts = TimeSeries::new(dt, f.clone(), vec![0.0; f.len()]).unwrap();
        let est = laplace_of_samples(&ts, Signal::F, 1.0).unwrap();
        assert!((est.value - (1.0 - (-1f64).exp())).abs() < 1e-6);
    }

    #[test]
    fn undecayed_signal_is_refused() {
        let f = vec![1.0; 101];
        let ts = TimeSeries::new(0.01, f, vec![0.0; 101]).unwrap();
        assert!(matches!(laplace_of_samples(&ts, Signal::F, 0.1), Err(Error::Numerical(_))));
        // large lambda: tail is negligible even though the signal persists
        assert!(laplace_of_samples(&ts, Signal::F, 1000.0).is_ok());
    }

    #[test]
    fn synthesize_noiseless_and_seeded() {
        let a = ConductivityProfile::new(vec![0.0, 0.4, 1.0], vec![1.0, 3.0]).unwrap();
        let grid = [0.1, 1.0, 10.0];
        let d = synthesize_dataset(&a, &grid, 0.0, 1).unwrap();
        for s in d.samples() {
            assert_eq!(s.h, transfer_function(&a, s.lambda).unwrap());
        }
        let n1 = synthesize_dataset(&a, &grid, 0.01, 42).unwrap();
        let n2 = synthesize_dataset(&a, &grid, 0.01, 42).unwrap();
        let n3 = synthesize_dataset(&a, &grid, 0.01, 43).unwrap();
        assert_eq!(n1, n2);
        assert_ne!(n1, n3);
        let two = ConductivityProfile::constant(2.0).unwrap();
        let d = synthesize_dataset(&two, &[1e-6], 0.0, 0).unwrap();
        assert!((d.samples()[0].h - 0.5).abs() < 1e-4);
    }
}
