//! Damped Gauss-Newton (Levenberg-Marquardt) on a generic residual map.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;

#[derive(Debug, Clone, Copy)]
pub(crate) struct LmSettings {
    pub max_iter: usize,
    pub tol_grad: f64,
    pub tol_step: f64,
    pub damping_init: f64,
}

/// Why the iteration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Every column of `J` is nearly orthogonal to the residual.
    Gradient,
    /// Accepted step below the step tolerance.
    Step,
    /// Residual vector is exactly zero.
    ZeroResidual,
    /// No decrease found even with very large damping (roundoff floor).
    Stalled,
    MaxIter,
}

impl StopReason {
    pub fn is_stationary(self) -> bool {
        self != StopReason::MaxIter
    }
}

#[derive(Debug, Clone)]
pub(crate) struct LmOutcome {
    pub theta: Vec<f64>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub stop: StopReason,
}

const DAMPING_UP: f64 = 10.0;
const DAMPING_DOWN: f64 = 3.0;
const DAMPING_MAX: f64 = 1e20;

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum()
}

/// Largest cosine between a Jacobian column and the residual.
fn gradient_cosine(j: &DMatrix<f64>, r: &DVector<f64>) -> f64 {
    let rn = r.norm();
    if rn == 0.0 {
        return 0.0;
    }
    j.column_iter()
        .map(|c| {
            let cn = c.norm();
            if cn == 0.0 {
                0.0
            } else {
                (c.dot(r) / (cn * rn)).abs()
            }
        })
        .fold(0.0, f64::max)
}

pub(crate) fn minimize(
    residual: impl Fn(&[f64]) -> Result<Vec<f64>>,
    jacobian: impl Fn(&[f64]) -> Result<DMatrix<f64>>,
    theta0: Vec<f64>,
    s: &LmSettings,
) -> Result<LmOutcome> {
    let mut theta = theta0;
    let mut r = residual(&theta)?;
    let mut f = sum_sq(&r);
    let mut mu = s.damping_init;
    let mut iterations = 0;
    let stop = loop {
        if f == 0.0 {
            break StopReason::ZeroResidual;
        }
        if iterations >= s.max_iter {
            break StopReason::MaxIter;
        }
        iterations += 1;
        let j = jacobian(&theta)?;
        let rv = DVector::from_column_slice(&r);
        if gradient_cosine(&j, &rv) < s.tol_grad {
            break StopReason::Gradient;
        }
        let jtj = j.transpose() * &j;
        let g = j.transpose() * &rv;
        let dmax = jtj.diagonal().max();
        let floor = if dmax > 0.0 { 1e-12 * dmax } else { 1.0 };

        let mut accepted = None;
        while mu <= DAMPING_MAX {
            let mut a = jtj.clone();
            for i in 0..a.nrows() {
                a[(i, i)] += mu * jtj[(i, i)].max(floor);
            }
            let Some(chol) = a.cholesky() else {
                mu *= DAMPING_UP;
                continue;
            };
            let delta = chol.solve(&(-&g));
            let trial: Vec<f64> = theta.iter().zip(delta.iter()).map(|(t, d)| t + d).collect();
            match residual(&trial) {
                Ok(rt) if sum_sq(&rt).is_finite() && sum_sq(&rt) < f => {
                    mu /= DAMPING_DOWN;
                    accepted = Some((trial, rt, delta.norm()));
                    break;
                }
                _ => mu *= DAMPING_UP,
            }
        }
        let Some((trial, rt, step)) = accepted else {
            break StopReason::Stalled;
        };
        let scale: f64 = theta.iter().map(|t| t * t).sum::<f64>().sqrt();
        theta = trial;
        r = rt;
        f = sum_sq(&r);
        if step <= s.tol_step * (scale + s.tol_step) {
            break StopReason::Step;
        }
    };
    Ok(LmOutcome { theta, residuals: r, iterations, stop })
}
