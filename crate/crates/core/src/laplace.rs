//! Exact Laplace-domain solvers for piecewise-constant coefficients.
//!
//! Two formulations are covered:
//!
//! * the `psi`-problem `-psi'' + k^2 q^2(x) psi = 0`, `psi(0) = 1`, `psi'(0) = 0`, matched
//!   C¹ across breakpoints;
//! * the `v`-problem `lambda v - (a v')' = 0`, `v(0) = 0`, `a(0) v'(0) = 1`, matched by
//!   continuity of `v` and of the flux `a v'`.
//!
//! On each piece the solution is a combination of `cosh` and `sinh`, so the state is
//! advanced piece by piece in closed form. States are stored as [`ScaledPair`]s, which
//! keeps everything finite for `k` in the thousands.
//!
//! With `k = sqrt(lambda)` the flux `a v'` of the `v`-solution coincides with `psi`, and
//! `v = psi' / lambda`.

use crate::error::{domain, validation, Error, Result};
use crate::piecewise::{ConductivityProfile, PiecewiseFunction};
use crate::quadrature::CompositeRule;
use crate::scaled::{hyperbolic_scaled, ExpPiece, LogValue, ScaledPair};

/// Solution of the `psi`-problem for one spectral parameter `k`.
///
/// Node states hold `(psi, psi' / k)`; for `k = 0` the second component is the limit 0.
#[derive(Debug, Clone)]
pub struct PsiSolution {
    k: f64,
    breakpoints: Vec<f64>,
    q: Vec<f64>,
    nodes: Vec<ScaledPair>,
    coeffs: Vec<ScaledPair>,
}

fn propagate_psi(state: ScaledPair, q: f64, theta: f64) -> ScaledPair {
    if theta == 0.0 {
        return state;
    }
    let (c, s) = hyperbolic_scaled(theta);
    ScaledPair {
        first: state.first * c + state.second / q * s,
        second: state.first * q * s + state.second * c,
        log_scale: state.log_scale + theta,
    }
    .renormalized()
}

/// Solves the `psi`-problem for the potential `q2 = 1/a`.
pub fn solve_psi(q2: &PiecewiseFunction, k: f64) -> Result<PsiSolution> {
    if !(k >= 0.0 && k.is_finite()) {
        return Err(domain(format!("spectral parameter k must be finite and >= 0, got {k}")));
    }
    if let Some(v) = q2.values().iter().find(|&&v| v.is_nan() || v <= 0.0) {
        return Err(validation(format!("q^2 values must be positive, got {v}")));
    }
    let q: Vec<f64> = q2.values().iter().map(|v| v.sqrt()).collect();
    let mut state = ScaledPair::new(1.0, 0.0);
    let mut nodes = vec![state];
    let mut coeffs = Vec::with_capacity(q.len());
    for ((l, r, _), &qj) in q2.pieces().zip(&q) {
        coeffs.push(exp_coeffs(state, qj));
        state = propagate_psi(state, qj, k * qj * (r - l));
        if !state.is_finite() {
            return Err(Error::Numerical(format!("psi propagation overflowed at k = {k}")));
        }
        nodes.push(state);
    }
    Ok(PsiSolution { k, breakpoints: q2.breakpoints().to_vec(), q, nodes, coeffs })
}

/// `(A, B)` with `psi = A e^{kq y} + B e^{-kq y}` from the state `(psi, psi'/k)`.
fn exp_coeffs(state: ScaledPair, q: f64) -> ScaledPair {
    let d = state.second / q;
    ScaledPair { first: 0.5 * (state.first + d), second: 0.5 * (state.first - d), log_scale: state.log_scale }
}

impl PsiSolution {
    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// `q_j = sqrt(q^2_j)` per piece.
    pub fn q_values(&self) -> &[f64] {
        &self.q
    }

    /// Raw scaled node states `(psi, psi'/k)`, one per breakpoint.
    pub fn node_states(&self) -> &[ScaledPair] {
        &self.nodes
    }

    /// Per-interval `(A_j, B_j)` so that `psi = A_j e^{k q_j (x - x_j)} + B_j e^{-k q_j (x - x_j)}`.
    pub fn interval_coeffs(&self, j: usize) -> (LogValue, LogValue) {
        let c = self.coeffs[j];
        (c.first_log(), c.second_log())
    }

    pub fn node_psi(&self, j: usize) -> LogValue {
        self.nodes[j].first_log()
    }

    pub fn node_psi_prime(&self, j: usize) -> LogValue {
        self.nodes[j].second_log() * LogValue::from_f64(self.k)
    }

    fn piece_of(&self, x: f64) -> usize {
        let idx = self.breakpoints.partition_point(|&b| b <= x);
        idx.saturating_sub(1).min(self.q.len() - 1)
    }

    fn state_in_piece(&self, j: usize, x: f64) -> ScaledPair {
        let q = self.q[j];
        propagate_psi(self.nodes[j], q, self.k * q * (x - self.breakpoints[j]))
    }

    /// Scaled `(psi(x), psi'(x)/k)`.
    pub fn eval(&self, x: f64) -> Result<ScaledPair> {
        if !(0.0..=1.0).contains(&x) {
            return Err(domain(format!("x = {x} outside [0, 1]")));
        }
        Ok(self.state_in_piece(self.piece_of(x), x))
    }

    pub fn psi(&self, x: f64) -> Result<LogValue> {
        Ok(self.eval(x)?.first_log())
    }

    pub fn psi_prime(&self, x: f64) -> Result<LogValue> {
        Ok(self.eval(x)?.second_log() * LogValue::from_f64(self.k))
    }

    /// Exponential form of `psi` on piece `j`, with `y` measured from `x_start`.
    pub fn exp_piece(&self, j: usize, x_start: f64) -> ExpPiece {
        let q = self.q[j];
        let c = exp_coeffs(self.state_in_piece(j, x_start), q);
        ExpPiece { rate: self.k * q, a: c.first, b: c.second, log_scale: c.log_scale }
    }

    /// Exponential form of `psi` on the piece containing `(x_start, x_start + eps)`.
    pub fn exp_piece_at(&self, x_start: f64, x_end: f64) -> ExpPiece {
        self.exp_piece(self.piece_of(0.5 * (x_start + x_end)), x_start)
    }
}

/// Solution of the `v`-problem for one `lambda > 0`; node states hold `(v, a v')`.
#[derive(Debug, Clone)]
pub struct VSolution {
    lambda: f64,
    k: f64,
    breakpoints: Vec<f64>,
    sqrt_a: Vec<f64>,
    nodes: Vec<ScaledPair>,
}

fn propagate_v(state: ScaledPair, k: f64, sqrt_a: f64, dx: f64) -> ScaledPair {
    let theta = k * dx / sqrt_a;
    if theta == 0.0 {
        return state;
    }
    let (c, s) = hyperbolic_scaled(theta);
    let imp = k * sqrt_a;
    ScaledPair {
        first: state.first * c + state.second * (s / imp),
        second: state.first * imp * s + state.second * c,
        log_scale: state.log_scale + theta,
    }
    .renormalized()
}

pub fn solve_v(a: &ConductivityProfile, lambda: f64) -> Result<VSolution> {
    solve_v_with_flux(a, lambda, 1.0)
}

/// Like [`solve_v`] with the initial flux `a(0) v'(0)` set to `flux0` instead of 1.
pub fn solve_v_with_flux(a: &ConductivityProfile, lambda: f64, flux0: f64) -> Result<VSolution> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(domain(format!("lambda must be finite and > 0, got {lambda}")));
    }
    if !(flux0 != 0.0 && flux0.is_finite()) {
        return Err(domain("initial flux must be finite and nonzero"));
    }
    let k = lambda.sqrt();
    let sqrt_a: Vec<f64> = a.values().iter().map(|v| v.sqrt()).collect();
    let mut state = ScaledPair::new(0.0, flux0).renormalized();
    let mut nodes = vec![state];
    for ((l, r, _), &sa) in a.function().pieces().zip(&sqrt_a) {
        state = propagate_v(state, k, sa, r - l);
        if !state.is_finite() {
            return Err(Error::Numerical(format!("v propagation overflowed at lambda = {lambda}")));
        }
        nodes.push(state);
    }
    Ok(VSolution { lambda, k, breakpoints: a.breakpoints().to_vec(), sqrt_a, nodes })
}

impl VSolution {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn node_states(&self) -> &[ScaledPair] {
        &self.nodes
    }

    pub fn node_v(&self, j: usize) -> LogValue {
        self.nodes[j].first_log()
    }

    pub fn node_flux(&self, j: usize) -> LogValue {
        self.nodes[j].second_log()
    }

    fn piece_of(&self, x: f64) -> usize {
        let idx = self.breakpoints.partition_point(|&b| b <= x);
        idx.saturating_sub(1).min(self.sqrt_a.len() - 1)
    }

    fn state_in_piece(&self, j: usize, x: f64) -> ScaledPair {
        propagate_v(self.nodes[j], self.k, self.sqrt_a[j], x - self.breakpoints[j])
    }

    /// Scaled `(v(x), a v'(x))`.
    pub fn eval(&self, x: f64) -> Result<ScaledPair> {
        if !(0.0..=1.0).contains(&x) {
            return Err(domain(format!("x = {x} outside [0, 1]")));
        }
        Ok(self.state_in_piece(self.piece_of(x), x))
    }

    /// Exponential form of the flux `a v'` on piece `j`, `y` measured from `x_start`.
    pub fn flux_piece(&self, j: usize, x_start: f64) -> ExpPiece {
        let st = self.state_in_piece(j, x_start);
        let imp = self.k * self.sqrt_a[j];
        ExpPiece {
            rate: self.k / self.sqrt_a[j],
            a: 0.5 * (st.second + imp * st.first),
            b: 0.5 * (st.second - imp * st.first),
            log_scale: st.log_scale,
        }
    }

    /// Piece index used for the open interval `(x_start, x_end)`.
    pub fn piece_for(&self, x_start: f64, x_end: f64) -> usize {
        self.piece_of(0.5 * (x_start + x_end))
    }

    /// `v(1) / (a(1) v'(1))`.
    pub fn transfer(&self) -> f64 {
        let last = self.nodes.last().unwrap();
        last.first / last.second
    }
}

/// `H(lambda) = G(lambda) / F(lambda) = v(1, lambda) / (a(1) v'(1, lambda))`.
pub fn transfer_function(a: &ConductivityProfile, lambda: f64) -> Result<f64> {
    Ok(solve_v(a, lambda)?.transfer())
}

/// Closed form for constant conductivity: `tanh(sqrt(lambda/a)) / sqrt(lambda a)`.
pub fn transfer_function_constant(a: f64, lambda: f64) -> f64 {
    (lambda / a).sqrt().tanh() / (lambda * a).sqrt()
}

pub const RESIDUAL_GL_ORDER: usize = 8;
const RESIDUAL_GRID: usize = 16;

/// Defect of the Volterra form `psi(x) = 1 + k^2 \int_0^x (x - s) q^2(s) psi(s) ds`.
///
/// The integral is evaluated by composite Gauss-Legendre aligned with the pieces of `q2`,
/// using `quadrature_points` nodes in total over `[0, x]`. Returns the maximum over a node
/// grid (breakpoints plus 16 uniform intervals) of the defect relative to `psi(x)`.
pub fn psi_integral_residual(q2: &PiecewiseFunction, k: f64, quadrature_points: usize) -> Result<f64> {
    if quadrature_points < 16 {
        return Err(validation("psi_integral_residual needs at least 16 quadrature points"));
    }
    let sol = solve_psi(q2, k)?;
    if k == 0.0 {
        return Ok(0.0);
    }
    let rule = CompositeRule::new(RESIDUAL_GL_ORDER);
    let total_panels = (quadrature_points / RESIDUAL_GL_ORDER).max(1);

    let mut grid: Vec<f64> = (1..=RESIDUAL_GRID).map(|i| i as f64 / RESIDUAL_GRID as f64).collect();
    grid.extend_from_slice(q2.interior_breakpoints());
    grid.sort_by(f64::total_cmp);

    let mut worst: f64 = 0.0;
    for &x in &grid {
        let ln_psi_x = sol.psi(x)?.ln_abs();
        let mut cuts: Vec<f64> = vec![0.0];
        cuts.extend(q2.interior_breakpoints().iter().copied().filter(|&b| b < x));
        cuts.push(x);
        let mut integral = 0.0;
        for w in cuts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let j = sol.piece_of(0.5 * (lo + hi));
            let q2j = q2.values()[j];
            let panels = ((hi - lo) / x * total_panels as f64).ceil() as usize;
            integral += rule.integrate(lo, hi, panels, |s| {
                let st = sol.state_in_piece(j, s);
                (x - s) * q2j * st.first_log().unscaled(ln_psi_x)
            });
        }
        let defect = 1.0 - (-ln_psi_x).exp() - k * k * integral;
        worst = worst.max(defect.abs());
    }
    Ok(worst)
}
