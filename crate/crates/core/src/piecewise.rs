//! Piecewise-constant functions on `[0, 1]` and the conductivity profiles built from them.
//!
//! A [`PiecewiseFunction`] is described by breakpoints `0 = x_1 < ... < x_{n+1} = 1` and one
//! value per piece. At an interior breakpoint the function takes the value of the piece to
//! its right; at `x = 1` it takes the value of the last piece.

use serde::{Deserialize, Serialize};

use crate::error::{domain, validation, Result};

/// Two breakpoints closer than this are treated as the same point.
pub const BREAKPOINT_TOL: f64 = 1e-12;

pub const DEFAULT_C0: f64 = 1e-3;
pub const DEFAULT_C1: f64 = 1e3;

#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseFunction {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L1,
    Linf,
}

impl PiecewiseFunction {
    /// Validates and normalizes.
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Ok(Self::from_raw(breakpoints, values)?.normalize())
    }

    /// Validates the representation without merging pieces.
    ///
    /// Breakpoints must be non-decreasing, start at exactly 0 and end at exactly 1.
    /// Zero-width pieces are allowed here and removed by [`normalize`](Self::normalize).
    pub fn from_raw(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(validation("a piecewise function needs at least one piece"));
        }
        if breakpoints.len() != values.len() + 1 {
            return Err(validation(format!(
                "expected {} breakpoints for {} values, got {}",
                values.len() + 1,
                values.len(),
                breakpoints.len()
            )));
        }
        if breakpoints.iter().chain(values.iter()).any(|v| !v.is_finite()) {
            return Err(validation("breakpoints and values must be finite"));
        }
        if breakpoints[0] != 0.0 || *breakpoints.last().unwrap() != 1.0 {
            return Err(validation("breakpoints must start at 0 and end at 1"));
        }
        if breakpoints.windows(2).any(|w| w[1] < w[0]) {
            return Err(validation("breakpoints must be sorted"));
        }
        if breakpoints.windows(2).all(|w| w[1] - w[0] <= BREAKPOINT_TOL) {
            return Err(validation("all pieces have zero width"));
        }
        Ok(Self { breakpoints, values })
    }

    pub fn constant(value: f64) -> Self {
        Self { breakpoints: vec![0.0, 1.0], values: vec![value] }
    }

    /// Drops zero-width pieces and merges neighbours with equal values.
    pub fn normalize(&self) -> Self {
        let mut bps = vec![self.breakpoints[0]];
        let mut vals: Vec<f64> = Vec::with_capacity(self.values.len());
        for (w, &v) in self.breakpoints.windows(2).zip(&self.values) {
            if w[1] - w[0] <= BREAKPOINT_TOL {
                continue;
            }
            if vals.last() == Some(&v) {
                *bps.last_mut().unwrap() = w[1];
            } else {
                vals.push(v);
                bps.push(w[1]);
            }
        }
        // A dropped trailing sliver can leave the last breakpoint short of 1.
        *bps.last_mut().unwrap() = 1.0;
        Self { breakpoints: bps, values: vals }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn num_pieces(&self) -> usize {
        self.values.len()
    }

    /// Iterates `(left, right, value)` over the pieces.
    pub fn pieces(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.breakpoints.windows(2).zip(&self.values).map(|(w, &v)| (w[0], w[1], v))
    }

    /// Index of the piece containing `x`, using the right-limit convention.
    pub fn piece_index(&self, x: f64) -> usize {
        let idx = self.breakpoints.partition_point(|&b| b <= x);
        idx.saturating_sub(1).min(self.values.len() - 1)
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(domain(format!("x = {x} outside [0, 1]")));
        }
        Ok(self.values[self.piece_index(x)])
    }

    /// Pointwise combination on the union refinement of both breakpoint sets, normalized.
    pub fn combine(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        let bps = union_breakpoints(&[self, other]);
        let values = bps
            .windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                f(self.values[self.piece_index(mid)], other.values[other.piece_index(mid)])
            })
            .collect();
        Self { breakpoints: bps, values }.normalize()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { breakpoints: self.breakpoints.clone(), values: self.values.iter().map(|&v| f(v)).collect() }.normalize()
    }

    pub fn subtract(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a - b)
    }

    pub fn distance(&self, other: &Self, norm: Norm) -> f64 {
        let bps = union_breakpoints(&[self, other]);
        let diffs = bps.windows(2).map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            let d = self.values[self.piece_index(mid)] - other.values[other.piece_index(mid)];
            (w[1] - w[0], d.abs())
        });
        match norm {
            Norm::L1 => diffs.map(|(w, d)| w * d).sum(),
            Norm::Linf => diffs.map(|(_, d)| d).fold(0.0, f64::max),
        }
    }

    /// Exact integral over `[0, 1]`.
    pub fn integral(&self) -> f64 {
        self.pieces().map(|(l, r, v)| (r - l) * v).sum()
    }

    /// Interior breakpoints (excluding 0 and 1).
    pub fn interior_breakpoints(&self) -> &[f64] {
        &self.breakpoints[1..self.breakpoints.len() - 1]
    }
}

/// Sorted union of the breakpoints of several functions, merging points within
/// [`BREAKPOINT_TOL`] of each other.
pub fn union_breakpoints(funcs: &[&PiecewiseFunction]) -> Vec<f64> {
    let mut all: Vec<f64> = funcs.iter().flat_map(|f| f.breakpoints.iter().copied()).collect();
    all.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(all.len());
    for x in all {
        match out.last() {
            Some(&last) if x - last <= BREAKPOINT_TOL => {}
            _ => out.push(x),
        }
    }
    // A near-1 breakpoint may have absorbed 1 itself.
    *out.last_mut().unwrap() = 1.0;
    out
}

/// A positive piecewise-constant conductivity `a(x)` with bounds `c0 <= a_j <= c1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConductivityProfile {
    func: PiecewiseFunction,
    c0: f64,
    c1: f64,
}

impl ConductivityProfile {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::with_bounds(breakpoints, values, DEFAULT_C0, DEFAULT_C1)
    }

    pub fn with_bounds(breakpoints: Vec<f64>, values: Vec<f64>, c0: f64, c1: f64) -> Result<Self> {
        Self::from_function(PiecewiseFunction::new(breakpoints, values)?, c0, c1)
    }

    pub fn from_function(func: PiecewiseFunction, c0: f64, c1: f64) -> Result<Self> {
        if !(c0.is_finite() && c1.is_finite() && c0 > 0.0 && c0 <= c1) {
            return Err(validation(format!("bounds must satisfy 0 < c0 <= c1, got c0={c0}, c1={c1}")));
        }
        if let Some(v) = func.values.iter().find(|&&v| v < c0 || v > c1) {
            return Err(validation(format!("conductivity value {v} outside [{c0}, {c1}]")));
        }
        Ok(Self { func: func.normalize(), c0, c1 })
    }

    pub fn constant(value: f64) -> Result<Self> {
        Self::new(vec![0.0, 1.0], vec![value])
    }

    pub fn function(&self) -> &PiecewiseFunction {
        &self.func
    }

    pub fn breakpoints(&self) -> &[f64] {
        self.func.breakpoints()
    }

    pub fn values(&self) -> &[f64] {
        self.func.values()
    }

    pub fn num_pieces(&self) -> usize {
        self.func.num_pieces()
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.c0, self.c1)
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        self.func.eval(x)
    }

    /// The reciprocal view `q^2(x) = 1 / a(x)`.
    pub fn q_squared(&self) -> PiecewiseFunction {
        self.func.map(|a| 1.0 / a)
    }

    /// `\int_0^1 dx / a(x)`, the steady-state value of the transfer function.
    pub fn thermal_resistance(&self) -> f64 {
        self.func.pieces().map(|(l, r, a)| (r - l) / a).sum()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("profile serialization");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ProfileJson = serde_json::from_str(text).map_err(|e| validation(format!("profile JSON: {e}")))?;
        Self::with_bounds(doc.breakpoints, doc.values, doc.c0.unwrap_or(DEFAULT_C0), doc.c1.unwrap_or(DEFAULT_C1))
    }
}

impl Serialize for ConductivityProfile {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        ProfileJson {
            breakpoints: self.func.breakpoints.clone(),
            values: self.func.values.clone(),
            c0: Some(self.c0),
            c1: Some(self.c1),
        }
        .serialize(serializer)
    }
}

/// On-disk profile format.
#[derive(Debug, Serialize, Deserialize)]
struct ProfileJson {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    c0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    c1: Option<f64>,
}
