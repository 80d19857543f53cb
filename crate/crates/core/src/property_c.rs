//! Numerical checks of the product-completeness ("Property C") machinery.
//!
//! For two potentials `q1^2`, `q2^2` the products `psi_1(x, k) psi_2(x, k)` are integrated
//! in closed form against piecewise-constant weights. Discretizing `h` on a fixed partition
//! turns `\int h psi_1 psi_2 = 0 for all k` into a linear system whose smallest singular
//! value is a finite-dimensional certificate that only `h = 0` solves it. The remaining
//! operations check the identity, coefficient inequalities and growth bounds used to show
//! that completeness, on computed solutions.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, validation, Error, Result};
use crate::laplace::{psi_integral_residual, solve_psi, solve_v, PsiSolution, VSolution};
use crate::piecewise::{union_breakpoints, ConductivityProfile, PiecewiseFunction, BREAKPOINT_TOL};
use crate::scaled::{product_integral, LogValue, ScaledPair};

/// Smallest `k q (y - x0)` at which `ratio(2k) > ratio(k) e^{theta/2}` is checked.
///
/// With `ratio = e^theta + c e^{-theta}`, `|c| <= 1`, the worst case `c = 1` gives
/// `ln cosh 2 theta - ln cosh theta`, which drops below `theta / 2` for `theta < 0.38`.
pub const DIVERGENCE_MIN_THETA: f64 = 0.5;

/// Guard added to the denominator of relative defects.
pub const DEFECT_GUARD: f64 = 1e-290;

/// Default spectral grid: log-spaced on `[0.25, 64]`, three points per partition piece.
pub fn default_k_grid(pieces: usize) -> Vec<f64> {
    log_grid(0.25, 64.0, 3 * pieces.max(1))
}

pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect()
}

/// Uniform partition of `[0, 1]` into `pieces` subintervals.
pub fn uniform_partition(pieces: usize) -> Vec<f64> {
    (0..=pieces).map(|i| i as f64 / pieces as f64).collect()
}

/// `\int_lo^hi psi_1 psi_2 dx`, exact, split at the breakpoints of both solutions.
fn product_over(s1: &PsiSolution, s2: &PsiSolution, lo: f64, hi: f64) -> LogValue {
    let mut cuts = vec![lo];
    cuts.extend(
        s1.breakpoints()
            .iter()
            .chain(s2.breakpoints())
            .copied()
            .filter(|&b| b > lo + BREAKPOINT_TOL && b < hi - BREAKPOINT_TOL),
    );
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() <= BREAKPOINT_TOL);
    cuts.push(hi);
    LogValue::sum(cuts.windows(2).map(|w| {
        let f = s1.exp_piece_at(w[0], w[1]);
        let g = s2.exp_piece_at(w[0], w[1]);
        product_integral(&f, &g, w[1] - w[0])
    }))
}

fn check_k(k: f64) -> Result<()> {
    if k > 0.0 && k.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("k must be finite and > 0, got {k}")))
    }
}

/// `\int_0^1 h(x) psi_1(x, k) psi_2(x, k) dx` by exact piecewise integration.
pub fn product_moment(
    h: &PiecewiseFunction,
    q1: &PiecewiseFunction,
    q2: &PiecewiseFunction,
    k: f64,
) -> Result<LogValue> {
    check_k(k)?;
    let s1 = solve_psi(q1, k)?;
    let s2 = solve_psi(q2, k)?;
    Ok(LogValue::sum(
        h.pieces().filter(|&(_, _, v)| v != 0.0).map(|(l, r, v)| LogValue::from_f64(v) * product_over(&s1, &s2, l, r)),
    ))
}

/// Moment matrix `M[i][m] = \int_{P_m} psi_1(x, k_i) psi_2(x, k_i) dx` with each row
/// divided by its largest entry.
#[derive(Debug, Clone)]
pub struct MomentMatrix {
    k_grid: Vec<f64>,
    partition: Vec<f64>,
    /// Log of each row's largest entry.
    row_ln_scale: Vec<f64>,
    normalized: DMatrix<f64>,
    singular_values: Vec<f64>,
}

pub fn moment_matrix(
    q1: &PiecewiseFunction,
    q2: &PiecewiseFunction,
    k_grid: &[f64],
    partition: &[f64],
) -> Result<MomentMatrix> {
    if partition.len() < 2 || partition[0] != 0.0 || *partition.last().unwrap() != 1.0 {
        return Err(validation("partition must start at 0 and end at 1"));
    }
    if partition.windows(2).any(|w| w[1] - w[0] <= BREAKPOINT_TOL) {
        return Err(validation("partition must be strictly increasing"));
    }
    let pieces = partition.len() - 1;
    if k_grid.len() < pieces {
        return Err(validation(format!("need at least {pieces} k values, got {}", k_grid.len())));
    }
    for &k in k_grid {
        check_k(k)?;
    }
    let mut sorted = k_grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(validation("k grid values must be distinct"));
    }

    let rows: Vec<Result<Vec<LogValue>>> = k_grid
        .par_iter()
        .map(|&k| {
            let s1 = solve_psi(q1, k)?;
            let s2 = solve_psi(q2, k)?;
            Ok(partition.windows(2).map(|w| product_over(&s1, &s2, w[0], w[1])).collect())
        })
        .collect();

    let mut normalized = DMatrix::zeros(k_grid.len(), pieces);
    let mut row_ln_scale = Vec::with_capacity(k_grid.len());
    for (i, row) in rows.into_iter().enumerate() {
        let row = row?;
        let top = row.iter().map(LogValue::ln_abs).fold(f64::NEG_INFINITY, f64::max);
        if !top.is_finite() {
            return Err(Error::Numerical(format!("moment row at k = {} is not finite", k_grid[i])));
        }
        for (m, e) in row.iter().enumerate() {
            normalized[(i, m)] = e.unscaled(top);
        }
        row_ln_scale.push(top);
    }
    let svd = normalized
        .clone()
        .try_svd(false, false, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Numerical("SVD of the moment matrix did not converge".into()))?;
    let mut singular_values: Vec<f64> = svd.singular_values.iter().copied().collect();
    singular_values.sort_by(|a, b| b.total_cmp(a));
    Ok(MomentMatrix {
        k_grid: k_grid.to_vec(),
        partition: partition.to_vec(),
        row_ln_scale,
        normalized,
        singular_values,
    })
}

impl MomentMatrix {
    pub fn k_grid(&self) -> &[f64] {
        &self.k_grid
    }

    pub fn partition(&self) -> &[f64] {
        &self.partition
    }

    pub fn normalized(&self) -> &DMatrix<f64> {
        &self.normalized
    }

    /// Unnormalized entry `M[i][m]`.
    pub fn entry(&self, i: usize, m: usize) -> LogValue {
        LogValue::from_scaled(self.normalized[(i, m)], self.row_ln_scale[i])
    }

    /// Singular values of the row-normalized matrix, descending.
    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn min_singular_value(&self) -> f64 {
        *self.singular_values.last().unwrap()
    }

    pub fn condition_number(&self) -> f64 {
        self.singular_values[0] / self.min_singular_value()
    }

    /// Spectral norm of the row-normalized matrix.
    pub fn norm(&self) -> f64 {
        self.singular_values[0]
    }

    /// Minimum-norm least-squares solution of `M_normalized h = rhs`, truncating singular
    /// values below `eps * max(rows, cols) * sigma_max`.
    pub fn solve_least_squares(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.normalized.nrows() {
            return Err(validation("right-hand side length does not match the k grid"));
        }
        let svd = self
            .normalized
            .clone()
            .try_svd(true, true, f64::EPSILON, 10_000)
            .ok_or_else(|| Error::Numerical("SVD did not converge".into()))?;
        let dims = self.normalized.nrows().max(self.normalized.ncols()) as f64;
        let tol = f64::EPSILON * dims * self.norm();
        let sol = svd.solve(&DVector::from_column_slice(rhs), tol).map_err(|e| Error::Numerical(e.to_string()))?;
        Ok(sol.iter().copied().collect())
    }

    /// Least-squares solve of `M h = 0`; a full-rank matrix returns `h = 0`.
    pub fn null_solve(&self) -> Result<Vec<f64>> {
        self.solve_least_squares(&vec![0.0; self.normalized.nrows()])
    }

    /// Number of singular values above the truncation threshold of
    /// [`solve_least_squares`](Self::solve_least_squares).
    pub fn numerical_rank(&self) -> usize {
        let dims = self.normalized.nrows().max(self.normalized.ncols()) as f64;
        let tol = f64::EPSILON * dims * self.norm();
        self.singular_values.iter().filter(|&&s| s > tol).count()
    }
}

/// Both sides of the integration-by-parts identity
/// `\int p v_1' v_2' dx = [p v_2' v_1 + a_1 w' v_1 - a_1 w v_1']_0^1`, `p = a_1 - a_2`,
/// `w = v_1 - v_2`.
#[derive(Debug, Clone, Copy)]
pub struct IdentityDefect {
    pub lhs: LogValue,
    pub rhs: LogValue,
    /// `|lhs - rhs| / (|lhs| + |rhs| + guard)`.
    pub defect: f64,
}

fn boundary_terms(s1: ScaledPair, s2: ScaledPair, a1: f64, a2: f64) -> LogValue {
    let (v1, f1) = (s1.first_log(), s1.second_log());
    let (v2, f2) = (s2.first_log(), s2.second_log());
    let a1l = LogValue::from_f64(a1);
    // v_j' = (a_j v_j') / a_j
    let dv1 = f1 * LogValue::from_f64(1.0 / a1);
    let dv2 = f2 * LogValue::from_f64(1.0 / a2);
    let w = v1 - v2;
    let dw = dv1 - dv2;
    let t1 = LogValue::from_f64(a1 - a2) * dv2 * v1;
    let t2 = a1l * dw * v1;
    let t3 = a1l * w * dv1;
    t1 + t2 - t3
}

pub fn orthogonality_identity(
    a1: &ConductivityProfile,
    a2: &ConductivityProfile,
    lambda: f64,
) -> Result<IdentityDefect> {
    let v1 = solve_v(a1, lambda)?;
    let v2 = solve_v(a2, lambda)?;
    let cuts = union_breakpoints(&[a1.function(), a2.function()]);
    let lhs = LogValue::sum(cuts.windows(2).map(|w| {
        let mid = 0.5 * (w[0] + w[1]);
        let (x1, x2) = (a1.eval(mid).unwrap(), a2.eval(mid).unwrap());
        let weight = (x1 - x2) / (x1 * x2);
        if weight == 0.0 {
            return LogValue::ZERO;
        }
        let f = v1.flux_piece(v1.piece_for(w[0], w[1]), w[0]);
        let g = v2.flux_piece(v2.piece_for(w[0], w[1]), w[0]);
        LogValue::from_f64(weight) * product_integral(&f, &g, w[1] - w[0])
    }));
    let first = |p: &ConductivityProfile| p.values()[0];
    let last = |p: &ConductivityProfile| *p.values().last().unwrap();
    let end_state = |v: &VSolution| *v.node_states().last().unwrap();
    let at_one = boundary_terms(end_state(&v1), end_state(&v2), last(a1), last(a2));
    let at_zero = boundary_terms(v1.node_states()[0], v2.node_states()[0], first(a1), first(a2));
    let rhs = at_one - at_zero;
    let diff = lhs - rhs;
    let denom = lhs.abs() + rhs.abs() + LogValue::from_f64(DEFECT_GUARD);
    let defect = if diff.is_zero() { 0.0 } else { (diff.ln_abs() - denom.ln_abs()).exp() };
    Ok(IdentityDefect { lhs, rhs, defect })
}

/// Relative defect of the integration-by-parts identity.
pub fn orthogonality_identity_defect(a1: &ConductivityProfile, a2: &ConductivityProfile, lambda: f64) -> Result<f64> {
    Ok(orthogonality_identity(a1, a2, lambda)?.defect)
}

/// Coefficients of `psi(x) = a e^{k q (x - x0)} + b e^{-k q (x - x0)}` on the last piece.
#[derive(Debug, Clone, Copy)]
pub struct ExpCoefficients {
    pub k: f64,
    pub x0: f64,
    pub q_last: f64,
    pub a_coef: LogValue,
    pub b_coef: LogValue,
    pub psi_x0: LogValue,
    // mantissas sharing one scale, for exact comparisons
    a_m: f64,
    b_m: f64,
    psi_m: f64,
}

impl ExpCoefficients {
    pub fn a_positive(&self) -> bool {
        self.a_m > 0.0
    }

    /// `a >= |b|`.
    pub fn dominates(&self) -> bool {
        self.a_m >= self.b_m.abs()
    }

    /// `2a > psi(x0)`.
    pub fn exceeds_psi(&self) -> bool {
        2.0 * self.a_m > self.psi_m
    }

    /// `2a >= psi(x0)`; equality holds at `x0 = 0` where `psi' = 0`.
    pub fn at_least_psi(&self) -> bool {
        2.0 * self.a_m >= self.psi_m
    }

    /// `(a - |b|) / a`.
    pub fn dominance_margin(&self) -> f64 {
        (self.a_m - self.b_m.abs()) / self.a_m
    }

    /// `(2a - psi(x0)) / (2a)`.
    pub fn excess_margin(&self) -> f64 {
        (2.0 * self.a_m - self.psi_m) / (2.0 * self.a_m)
    }
}

/// Computes `a = (psi(x0) + psi'(x0)/(k q))/2`, `b = (psi(x0) - psi'(x0)/(k q))/2`.
///
/// `x0` must lie in the last piece of the solution's potential (its left end included)
/// and `q_last` must equal `q` on that piece.
pub fn exp_coefficients(psi: &PsiSolution, x0: f64, q_last: f64) -> Result<ExpCoefficients> {
    let k = psi.k();
    if k == 0.0 {
        return Err(domain("exponential coefficients need k > 0"));
    }
    let bps = psi.breakpoints();
    let start = bps[bps.len() - 2];
    if !(x0 >= start - BREAKPOINT_TOL && x0 < 1.0) {
        return Err(domain(format!("x0 = {x0} is not in the last piece [{start}, 1)")));
    }
    let q = *psi.q_values().last().unwrap();
    if (q_last - q).abs() > 1e-12 * q {
        return Err(validation(format!("q_last = {q_last} does not match the last piece (q = {q})")));
    }
    let st = psi.eval(x0.max(start))?;
    let d = st.second / q_last;
    let a_m = 0.5 * (st.first + d);
    let b_m = 0.5 * (st.first - d);
    Ok(ExpCoefficients {
        k,
        x0,
        q_last,
        a_coef: LogValue::from_scaled(a_m, st.log_scale),
        b_coef: LogValue::from_scaled(b_m, st.log_scale),
        psi_x0: st.first_log(),
        a_m,
        b_m,
        psi_m: st.first,
    })
}

/// `psi(y, k) / a(k)` and the lower bound `e^{kq(y-x0)} - e^{-kq(y-x0)}`, both as logs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthRatio {
    pub ln_ratio: f64,
    pub ln_lower_bound: f64,
}

impl GrowthRatio {
    pub fn ratio(&self) -> f64 {
        self.ln_ratio.exp()
    }

    pub fn lower_bound(&self) -> f64 {
        self.ln_lower_bound.exp()
    }

    /// Lower bound holds up to `rel_tol` in the logarithm (rounding guard).
    pub fn bound_holds(&self, rel_tol: f64) -> bool {
        self.ln_ratio >= self.ln_lower_bound - rel_tol * self.ln_lower_bound.abs().max(1.0)
    }
}

/// Start of the last piece of `q2` (0 for a constant potential).
pub fn last_discontinuity(q2: &PiecewiseFunction) -> f64 {
    let b = q2.breakpoints();
    b[b.len() - 2]
}

/// Growth ratio for a given solution and an `x0` inside its last piece.
pub fn growth_ratio_from(psi: &PsiSolution, x0: f64, y: f64) -> Result<GrowthRatio> {
    if !(y > x0 && y < 1.0) {
        return Err(domain(format!("y = {y} must lie in ({x0}, 1)")));
    }
    let q = *psi.q_values().last().unwrap();
    let coeffs = exp_coefficients(psi, x0, q)?;
    let ln_ratio = psi.psi(y)?.ln_abs() - coeffs.a_coef.ln_abs();
    let theta = psi.k() * q * (y - x0);
    let ln_lower_bound = theta + (-(-2.0 * theta).exp_m1()).ln();
    Ok(GrowthRatio { ln_ratio, ln_lower_bound })
}

/// `psi(y, k) / a(k)` with `x0` the last discontinuity of `q2`.
pub fn growth_ratio(q2: &PiecewiseFunction, y: f64, k: f64) -> Result<GrowthRatio> {
    check_k(k)?;
    let x0 = last_discontinuity(q2);
    if !(y > x0 && y < 1.0) {
        return Err(domain(format!("y = {y} must lie in ({x0}, 1)")));
    }
    growth_ratio_from(&solve_psi(q2, k)?, x0, y)
}

// ---------------------------------------------------------------------------------------
// Verification report
// ---------------------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct InvariantCheck {
    pub name: String,
    pub pass: bool,
    pub worst_value: f64,
    pub location: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentCertificate {
    pub min_sv: f64,
    pub cond: f64,
    pub k_grid: Vec<f64>,
    pub partition: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub invariants: Vec<InvariantCheck>,
    pub moment_certificate: MomentCertificate,
}

impl VerificationReport {
    pub fn all_pass(&self) -> bool {
        self.invariants.iter().all(|c| c.pass)
    }
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub k_samples: Vec<f64>,
    pub quadrature_points: usize,
    pub residual_tol: f64,
    pub identity_lambdas: Vec<f64>,
    pub identity_tol: f64,
    pub pieces: usize,
    pub k_grid: Option<Vec<f64>>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            k_samples: vec![0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0],
            quadrature_points: 1024,
            residual_tol: 1e-6,
            identity_lambdas: vec![0.5, 2.0, 8.0],
            identity_tol: 1e-8,
            pieces: 4,
            k_grid: None,
        }
    }
}

/// Tracks the smallest margin seen for one invariant; the check passes when no margin
/// fell below zero (or to zero, when `strict`).
struct Tracker {
    name: &'static str,
    strict: bool,
    worst: f64,
    location: String,
    failed: bool,
}

impl Tracker {
    fn new(name: &'static str, strict: bool) -> Self {
        Self { name, strict, worst: f64::INFINITY, location: String::new(), failed: false }
    }

    fn record(&mut self, margin: f64, location: impl FnOnce() -> String) {
        let bad = margin.is_nan() || if self.strict { margin <= 0.0 } else { margin < 0.0 };
        if bad {
            self.failed = true;
        }
        if margin < self.worst || margin.is_nan() {
            self.worst = margin;
            self.location = location();
        }
    }

    fn finish(self) -> InvariantCheck {
        InvariantCheck { name: self.name.into(), pass: !self.failed, worst_value: self.worst, location: self.location }
    }
}

/// Node grid used by the sweeps: breakpoints of both potentials plus 20 uniform intervals.
fn sweep_grid(q1: &PiecewiseFunction, q2: &PiecewiseFunction) -> Vec<f64> {
    let mut xs: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
    xs.extend(q1.breakpoints());
    xs.extend(q2.breakpoints());
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|a, b| (*a - *b).abs() <= BREAKPOINT_TOL);
    xs
}

/// Runs every check on the pair `(q1, q2)` and builds the moment certificate on a uniform
/// partition with `opts.pieces` pieces.
pub fn verify(q1: &PiecewiseFunction, q2: &PiecewiseFunction, opts: &VerifyOptions) -> Result<VerificationReport> {
    let xs = sweep_grid(q1, q2);
    let x0 = last_discontinuity(q1).max(last_discontinuity(q2));
    let strict_excess = x0 > 0.0;

    let mut positivity = Tracker::new("psi_positive_monotone", false);
    let mut residual = Tracker::new("volterra_residual", false);
    let mut dominance = Tracker::new("coefficient_dominance", false);
    let mut excess = Tracker::new("coefficient_exceeds_psi", strict_excess);
    let mut chain = Tracker::new("bound_chain", false);
    let mut lower = Tracker::new("growth_lower_bound", false);
    let mut divergence = Tracker::new("growth_divergence", true);
    let mut identity = Tracker::new("orthogonality_identity", true);

    for (label, q2p) in [("q1", q1), ("q2", q2)] {
        let mut prev: Option<Vec<f64>> = None;
        for &k in &opts.k_samples {
            let sol = solve_psi(q2p, k)?;
            let mut ln_psi = Vec::with_capacity(xs.len());
            let mut last_ln = f64::NEG_INFINITY;
            for &x in &xs {
                let st = sol.eval(x)?;
                let lp = st.first_log();
                let dp = st.second_log();
                // psi >= 1 and psi' >= 0, compared as logs/signs
                positivity.record(lp.ln_abs() * f64::from(lp.sign()), || format!("{label} k={k} x={x} psi>=1"));
                positivity.record(if dp.sign() >= 0 { 0.0 } else { -dp.ln_abs().exp() }, || {
                    format!("{label} k={k} x={x} psi'>=0")
                });
                positivity.record(lp.ln_abs() - last_ln, || format!("{label} k={k} x={x} nondecreasing in x"));
                last_ln = lp.ln_abs();
                ln_psi.push(lp.ln_abs());
            }
            if let Some(p) = &prev {
                for (i, (&now, &before)) in ln_psi.iter().zip(p).enumerate() {
                    positivity.record(now - before, || format!("{label} k={k} x={} nondecreasing in k", xs[i]));
                }
            }
            prev = Some(ln_psi.clone());

            let r = psi_integral_residual(q2p, k, opts.quadrature_points)?;
            residual.record(opts.residual_tol - r, || format!("{label} k={k} residual={r:e}"));

            let q_last = *sol.q_values().last().unwrap();
            let c = exp_coefficients(&sol, x0, q_last)?;
            dominance.record(c.dominance_margin(), || format!("{label} k={k}"));
            excess.record(c.excess_margin(), || format!("{label} k={k}"));

            let ln_psi_x0 = c.psi_x0.ln_abs();
            for (i, &x) in xs.iter().enumerate() {
                if x > x0 + BREAKPOINT_TOL {
                    break;
                }
                let lp = ln_psi[i];
                chain.record(lp, || format!("{label} k={k} x={x} 1<=psi"));
                chain.record(ln_psi_x0 - lp, || format!("{label} k={k} x={x} psi<=psi(x0)"));
            }
            chain.record(c.excess_margin(), || format!("{label} k={k} psi(x0)<2a"));

            for y in interior_points(x0) {
                let g = growth_ratio_from(&sol, x0, y)?;
                // rounding guard: the bound is tight to e^{-2 theta} relative
                let guard = 1e-12 * g.ln_lower_bound.abs().max(1.0);
                lower.record(g.ln_ratio - g.ln_lower_bound + guard, || format!("{label} k={k} y={y}"));
            }
        }

        let y = 0.5 * (x0 + 1.0);
        let q_last = last_value(q2p).sqrt();
        for &k in opts.k_samples.iter().filter(|&&k| k >= 4.0) {
            if !opts.k_samples.contains(&(2.0 * k)) || k * q_last * (y - x0) < DIVERGENCE_MIN_THETA {
                continue;
            }
            let g1 = growth_ratio_from(&solve_psi(q2p, k)?, x0, y)?;
            let g2 = growth_ratio_from(&solve_psi(q2p, 2.0 * k)?, x0, y)?;
            let needed = g1.ln_ratio + 0.5 * k * q_last * (y - x0);
            divergence.record(g2.ln_ratio - needed, || format!("{label} k={k}->{}", 2.0 * k));
        }
    }

    let a1 = conductivity_of(q1)?;
    let a2 = conductivity_of(q2)?;
    for &lambda in &opts.identity_lambdas {
        let d = orthogonality_identity_defect(&a1, &a2, lambda)?;
        identity.record(opts.identity_tol - d, || format!("lambda={lambda} defect={d:e}"));
    }

    let partition = uniform_partition(opts.pieces);
    let k_grid = opts.k_grid.clone().unwrap_or_else(|| default_k_grid(opts.pieces));
    let mm = moment_matrix(q1, q2, &k_grid, &partition)?;
    let mut certificate = Tracker::new("moment_certificate", true);
    certificate.record(mm.min_singular_value(), || format!("pieces={}", opts.pieces));

    Ok(VerificationReport {
        invariants: vec![
            positivity.finish(),
            residual.finish(),
            dominance.finish(),
            excess.finish(),
            chain.finish(),
            lower.finish(),
            divergence.finish(),
            identity.finish(),
            certificate.finish(),
        ],
        moment_certificate: MomentCertificate {
            min_sv: mm.min_singular_value(),
            cond: mm.condition_number(),
            k_grid,
            partition,
        },
    })
}

fn interior_points(x0: f64) -> [f64; 3] {
    [0.25, 0.5, 0.75].map(|t| x0 + t * (1.0 - x0))
}

fn last_value(f: &PiecewiseFunction) -> f64 {
    *f.values().last().unwrap()
}

/// `a = 1 / q^2` with bounds wide enough for any positive potential.
pub fn conductivity_of(q2: &PiecewiseFunction) -> Result<ConductivityProfile> {
    let a = q2.map(|v| 1.0 / v);
    let (lo, hi) = a.values().iter().fold((f64::INFINITY, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
    ConductivityProfile::from_function(a, lo.min(crate::piecewise::DEFAULT_C0), hi.max(crate::piecewise::DEFAULT_C1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pf(x: &[f64], v: &[f64]) -> PiecewiseFunction {
        PiecewiseFunction::new(x.to_vec(), v.to_vec()).unwrap()
    }

    #[test]
    fn product_moment_examples() {
        let one = PiecewiseFunction::constant(1.0);
        let zero = PiecewiseFunction::constant(0.0);
        assert!(product_moment(&zero, &one, &one, 1.0).unwrap().is_zero());
        let v = product_moment(&one, &one, &one, 1.0).unwrap().value();
        assert!((v - (0.5 + 2f64.sinh() / 4.0)).abs() < 1e-14);
        assert!((v - 1.406715).abs() < 1e-6);
        let q = pf(&[0.0, 0.5, 1.0], &[4.0, 1.0]);
        let h = q.subtract(&q);
        for k in [0.5, 3.0, 40.0] {
            assert!(product_moment(&h, &q, &q, k).unwrap().is_zero());
        }
        assert!(product_moment(&one, &one, &one, 0.0).is_err());
    }

    #[test]
    fn moment_matrix_single_entry() {
        let one = PiecewiseFunction::constant(1.0);
        let mm = moment_matrix(&one, &one, &[1.0], &[0.0, 1.0]).unwrap();
        assert!((mm.entry(0, 0).value() - (0.5 + 2f64.sinh() / 4.0)).abs() < 1e-14);
        assert!((mm.min_singular_value() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn moment_matrix_rows_sum_to_moment() {
        let q1 = PiecewiseFunction::constant(1.0);
        let q2 = pf(&[0.0, 0.5, 1.0], &[4.0, 1.0]);
        let ks = log_grid(0.25, 16.0, 12);
        let mm = moment_matrix(&q1, &q2, &ks, &uniform_partition(4)).unwrap();
        assert!(mm.min_singular_value() > 0.0);
        let one = PiecewiseFunction::constant(1.0);
        for (i, &k) in ks.iter().enumerate() {
            let row = LogValue::sum((0..4).map(|m| mm.entry(i, m)));
            let direct = product_moment(&one, &q1, &q2, k).unwrap();
            assert!(((row.ln_abs() - direct.ln_abs()).exp() - 1.0).abs() < 1e-10, "k={k}");
        }
    }

    #[test]
    fn moment_matrix_validation() {
        let q = PiecewiseFunction::constant(1.0);
        assert!(moment_matrix(&q, &q, &[1.0], &uniform_partition(2)).is_err());
        assert!(moment_matrix(&q, &q, &[1.0, 1.0], &uniform_partition(2)).is_err());
        assert!(moment_matrix(&q, &q, &[1.0, -1.0], &uniform_partition(2)).is_err());
        assert!(moment_matrix(&q, &q, &[1.0, 2.0], &[0.0, 0.5]).is_err());
    }

    #[test]
    fn identity_defect_examples() {
        let a = ConductivityProfile::new(vec![0.0, 0.3, 1.0], vec![1.0, 2.0]).unwrap();
        assert_eq!(orthogonality_identity_defect(&a, &a, 1.0).unwrap(), 0.0);
        let one = ConductivityProfile::constant(1.0).unwrap();
        let two = ConductivityProfile::constant(2.0).unwrap();
        assert!(orthogonality_identity_defect(&one, &two, 1.0).unwrap() < 1e-10);
    }

    #[test]
    fn exp_coefficients_examples() {
        let one = PiecewiseFunction::constant(1.0);
        let sol = solve_psi(&one, 1.0).unwrap();
        let c = exp_coefficients(&sol, 0.0, 1.0).unwrap();
        assert_eq!(c.a_coef.value(), 0.5);
        assert_eq!(c.b_coef.value(), 0.5);
        assert!(c.dominates() && c.at_least_psi() && !c.exceeds_psi());

        let q2 = pf(&[0.0, 0.5, 1.0], &[4.0, 1.0]);
        let sol = solve_psi(&q2, 1.0).unwrap();
        let c = exp_coefficients(&sol, 0.5, 1.0).unwrap();
        let (ch, sh) = (1f64.cosh(), 1f64.sinh());
        assert!((c.a_coef.value() - 0.5 * (ch + 2.0 * sh)).abs() < 1e-14);
        assert!((c.b_coef.value() - 0.5 * (ch - 2.0 * sh)).abs() < 1e-14);
        assert!((c.a_coef.value() - 1.946744).abs() < 5e-6);
        assert!((c.b_coef.value() + 0.403663).abs() < 5e-6);
        assert!(c.dominates() && c.exceeds_psi());
        assert!((2.0 * c.a_coef.value() - 3.893488).abs() < 1e-5);
        assert!((c.psi_x0.value() - ch).abs() < 1e-14);

        let sol0 = solve_psi(&q2, 0.0).unwrap();
        assert!(exp_coefficients(&sol0, 0.5, 1.0).is_err());
        assert!(exp_coefficients(&sol, 0.2, 1.0).is_err());
        assert!(exp_coefficients(&sol, 0.5, 2.0).is_err());
    }

    #[test]
    fn growth_ratio_examples() {
        let one = PiecewiseFunction::constant(1.0);
        let g = growth_ratio(&one, 0.5, 1.0).unwrap();
        assert!((g.ratio() - 0.5f64.cosh() / 0.5).abs() < 1e-13);
        assert!((g.lower_bound() - 2.0 * 0.5f64.sinh()).abs() < 1e-13);
        assert!(g.bound_holds(0.0));
        let mut last = 0.0;
        for k in [1.0, 2.0, 4.0, 8.0, 16.0, 32.0] {
            let r = growth_ratio(&one, 0.5, k).unwrap().ln_ratio;
            assert!(r > last);
            last = r;
        }
        let g = growth_ratio(&one, 0.5, 64.0).unwrap();
        assert!(g.ln_ratio >= 32.0 - 1e-12);
        assert!(growth_ratio(&one, 1.0, 1.0).is_err());
        let q2 = pf(&[0.0, 0.5, 1.0], &[4.0, 1.0]);
        assert!(growth_ratio(&q2, 0.4, 1.0).is_err());
    }

    #[test]
    fn verify_reference_pair_passes() {
        let q1 = PiecewiseFunction::constant(1.0);
        let q2 = pf(&[0.0, 0.5, 1.0], &[4.0, 1.0]);
        let report = verify(&q1, &q2, &VerifyOptions::default()).unwrap();
        for c in &report.invariants {
            assert!(c.pass, "{c:?}");
        }
        assert!(report.moment_certificate.min_sv > 0.0);
    }
}
