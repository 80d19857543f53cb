//! Independent oracles and random generators shared by the integration tests.
//!
//! The oracles integrate the governing ODEs numerically with the adaptive Dormand-Prince
//! 8(5,3) integrator, restarted at every breakpoint, and never touch the closed-form
//! propagation used by the library.
#![allow(dead_code)]

use ode_solvers::{Dop853, OutputType, SVector, System};
use pwcheat::{ConductivityProfile, PiecewiseFunction};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub const RTOL: f64 = 1e-13;
pub const ATOL: f64 = 1e-16;

type State<const N: usize> = SVector<f64, N>;

/// Integrates `y' = f(x, y)` over `[lo, hi]` and returns `y(hi)`.
fn integrate<const N: usize, S: System<f64, State<N>>>(sys: S, lo: f64, hi: f64, y0: State<N>, atol: f64) -> State<N> {
    let mut solver = Dop853::new(sys, lo, hi, hi - lo, y0, RTOL, atol);
    // dense output with a single interval is unreliable; step endpoints are exact
    solver.set_output(OutputType::Sparse);
    solver.integrate().expect("oracle integration failed");
    *solver.y_out().last().expect("oracle produced no output")
}

/// `(v, a v')` with `v' = phi / a`, `phi' = lambda v` on a piece of constant `a`.
struct VSystem {
    a: f64,
    lambda: f64,
}

impl System<f64, State<2>> for VSystem {
    fn system(&self, _x: f64, y: &State<2>, dy: &mut State<2>) {
        dy[0] = y[1] / self.a;
        dy[1] = self.lambda * y[0];
    }
}

/// Union of breakpoints of several step functions (tolerance 1e-12).
pub fn union(funcs: &[&PiecewiseFunction]) -> Vec<f64> {
    let mut xs: Vec<f64> = funcs.iter().flat_map(|f| f.breakpoints().iter().copied()).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
    xs
}

fn mid_value(f: &PiecewiseFunction, l: f64, r: f64) -> f64 {
    f.eval(0.5 * (l + r)).unwrap()
}

/// `(v(1), a(1) v'(1))` for `v(0) = 0`, `a(0) v'(0) = 1`.
pub fn oracle_v(a: &ConductivityProfile, lambda: f64) -> (f64, f64) {
    let mut y = State::<2>::new(0.0, 1.0);
    for (l, r, av) in a.function().pieces() {
        y = integrate(VSystem { a: av, lambda }, l, r, y, ATOL);
    }
    (y[0], y[1])
}

pub fn oracle_transfer(a: &ConductivityProfile, lambda: f64) -> f64 {
    let (v, flux) = oracle_v(a, lambda);
    v / flux
}

/// `(psi, psi')` for `psi'' = k^2 q^2 psi`.
struct PsiSystem {
    k2q2: f64,
}

impl System<f64, State<2>> for PsiSystem {
    fn system(&self, _x: f64, y: &State<2>, dy: &mut State<2>) {
        dy[0] = y[1];
        dy[1] = self.k2q2 * y[0];
    }
}

/// `(psi(x), psi'(x))` from `psi(0) = 1`, `psi'(0) = 0`.
pub fn oracle_psi(q2: &PiecewiseFunction, k: f64, x: f64) -> (f64, f64) {
    let mut y = State::<2>::new(1.0, 0.0);
    for (l, r, v) in q2.pieces() {
        if l >= x {
            break;
        }
        let hi = r.min(x);
        y = integrate(PsiSystem { k2q2: k * k * v }, l, hi, y, ATOL);
    }
    (y[0], y[1])
}

/// Two `psi` solutions and the running integral of `h psi_1 psi_2`.
struct MomentSystem {
    k2q1: f64,
    k2q2: f64,
    h: f64,
}

impl System<f64, State<5>> for MomentSystem {
    fn system(&self, _x: f64, y: &State<5>, dy: &mut State<5>) {
        dy[0] = y[1];
        dy[1] = self.k2q1 * y[0];
        dy[2] = y[3];
        dy[3] = self.k2q2 * y[2];
        dy[4] = self.h * y[0] * y[2];
    }
}

/// `\int_0^1 h psi_1 psi_2 dx` by integrating the augmented system.
pub fn oracle_product_moment(h: &PiecewiseFunction, q1: &PiecewiseFunction, q2: &PiecewiseFunction, k: f64) -> f64 {
    let xs = union(&[h, q1, q2]);
    let mut y = State::<5>::from_column_slice(&[1.0, 0.0, 1.0, 0.0, 0.0]);
    for w in xs.windows(2) {
        let sys = MomentSystem {
            k2q1: k * k * mid_value(q1, w[0], w[1]),
            k2q2: k * k * mid_value(q2, w[0], w[1]),
            h: mid_value(h, w[0], w[1]),
        };
        y = integrate(sys, w[0], w[1], y, ATOL);
    }
    y[4]
}

/// Two `v` solutions and the running integral of `p v_1' v_2'`.
struct IdentitySystem {
    a1: f64,
    a2: f64,
    lambda: f64,
}

impl System<f64, State<5>> for IdentitySystem {
    fn system(&self, _x: f64, y: &State<5>, dy: &mut State<5>) {
        let d1 = y[1] / self.a1;
        let d2 = y[3] / self.a2;
        dy[0] = d1;
        dy[1] = self.lambda * y[0];
        dy[2] = d2;
        dy[3] = self.lambda * y[2];
        dy[4] = (self.a1 - self.a2) * d1 * d2;
    }
}

/// `\int_0^1 (a_1 - a_2) v_1' v_2' dx`.
pub fn oracle_identity_lhs(a1: &ConductivityProfile, a2: &ConductivityProfile, lambda: f64) -> f64 {
    let xs = union(&[a1.function(), a2.function()]);
    let mut y = State::<5>::from_column_slice(&[0.0, 1.0, 0.0, 1.0, 0.0]);
    for w in xs.windows(2) {
        let sys = IdentitySystem {
            a1: mid_value(a1.function(), w[0], w[1]),
            a2: mid_value(a2.function(), w[0], w[1]),
            lambda,
        };
        y = integrate(sys, w[0], w[1], y, ATOL);
    }
    y[4]
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Sorted interior breakpoints with every piece at least `min_width` wide.
pub fn random_breakpoints(rng: &mut ChaCha8Rng, n: usize, min_width: f64) -> Vec<f64> {
    assert!(n as f64 * min_width < 1.0);
    let mut cuts: Vec<f64> = (0..n - 1).map(|_| rng.random::<f64>()).collect();
    cuts.sort_by(f64::total_cmp);
    // map uniform order statistics into widths >= min_width
    let free = 1.0 - n as f64 * min_width;
    let mut out = vec![0.0];
    for (i, c) in cuts.iter().enumerate() {
        out.push(c * free + (i + 1) as f64 * min_width);
    }
    out.push(1.0);
    out
}

/// Profile with `n` pieces, log-uniform values in `[lo, hi]`, adjacent values differing by
/// at least the factor `min_ratio`.
pub fn random_profile(
    rng: &mut ChaCha8Rng,
    n: usize,
    lo: f64,
    hi: f64,
    min_width: f64,
    min_ratio: f64,
) -> ConductivityProfile {
    let x = random_breakpoints(rng, n, min_width);
    let mut vals: Vec<f64> = Vec::with_capacity(n);
    while vals.len() < n {
        let v = (lo.ln() + rng.random::<f64>() * (hi / lo).ln()).exp();
        if let Some(&p) = vals.last() {
            let r: f64 = v / p;
            if r.max(1.0 / r) < min_ratio {
                continue;
            }
        }
        vals.push(v);
    }
    ConductivityProfile::new(x, vals).unwrap()
}

pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| (lo.ln() + (hi / lo).ln() * i as f64 / (count - 1) as f64).exp()).collect()
}

pub fn rel_err(x: f64, y: f64) -> f64 {
    (x - y).abs() / y.abs()
}
