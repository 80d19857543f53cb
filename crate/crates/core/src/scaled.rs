//! Overflow-safe arithmetic for quantities that grow like `exp(k q x)`.
//!
//! Hyperbolic propagation over an interval multiplies the state by roughly
//! `e^{theta}`; for `theta > 709` the plain `f64` product overflows. Values here are kept
//! as `mantissa * e^{log_scale}` with the mantissa renormalized by powers of two, which
//! introduces no rounding.

use std::cmp::Ordering;
use std::ops::{Add, Mul, Neg, Sub};

/// A real number stored as a sign and the natural log of its magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogValue {
    sign: i8,
    ln_abs: f64,
}

impl LogValue {
    pub const ZERO: LogValue = LogValue { sign: 0, ln_abs: f64::NEG_INFINITY };

    pub fn from_f64(x: f64) -> Self {
        match x.partial_cmp(&0.0) {
            Some(Ordering::Greater) => LogValue { sign: 1, ln_abs: x.ln() },
            Some(Ordering::Less) => LogValue { sign: -1, ln_abs: (-x).ln() },
            _ => Self::ZERO,
        }
    }

    /// `mantissa * e^{log_scale}`.
    pub fn from_scaled(mantissa: f64, log_scale: f64) -> Self {
        let mut v = Self::from_f64(mantissa);
        if v.sign != 0 {
            v.ln_abs += log_scale;
        }
        v
    }

    /// A positive number given by its logarithm.
    pub fn from_ln(ln_abs: f64) -> Self {
        LogValue { sign: 1, ln_abs }
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    /// Natural log of the magnitude (`-inf` for zero).
    pub fn ln_abs(&self) -> f64 {
        self.ln_abs
    }

    /// Plain `f64`; may overflow to infinity.
    pub fn value(&self) -> f64 {
        match self.sign {
            0 => 0.0,
            s => f64::from(s) * self.ln_abs.exp(),
        }
    }

    pub fn abs(self) -> Self {
        LogValue { sign: self.sign.abs(), ..self }
    }

    /// Value after dividing by `e^{log_scale}`.
    pub fn unscaled(&self, log_scale: f64) -> f64 {
        match self.sign {
            0 => 0.0,
            s => f64::from(s) * (self.ln_abs - log_scale).exp(),
        }
    }

    pub fn sum<I: IntoIterator<Item = LogValue>>(iter: I) -> Self {
        iter.into_iter().fold(Self::ZERO, |acc, v| acc + v)
    }
}

impl Neg for LogValue {
    type Output = LogValue;
    fn neg(self) -> Self {
        LogValue { sign: -self.sign, ..self }
    }
}

impl Add for LogValue {
    type Output = Self;

    fn add(self, other: Self) -> Self {
        if self.sign == 0 {
            return other;
        }
        if other.sign == 0 {
            return self;
        }
        let (big, small) = if self.ln_abs >= other.ln_abs { (self, other) } else { (other, self) };
        let d = small.ln_abs - big.ln_abs;
        if big.sign == small.sign {
            LogValue { sign: big.sign, ln_abs: big.ln_abs + d.exp().ln_1p() }
        } else if d == 0.0 {
            Self::ZERO
        } else {
            LogValue { sign: big.sign, ln_abs: big.ln_abs + (-d.exp_m1()).ln() }
        }
    }
}

impl Sub for LogValue {
    type Output = Self;

    fn sub(self, other: Self) -> Self {
        self + -other
    }
}

impl Mul for LogValue {
    type Output = LogValue;
    fn mul(self, rhs: Self) -> Self {
        if self.sign == 0 || rhs.sign == 0 {
            return Self::ZERO;
        }
        LogValue { sign: self.sign * rhs.sign, ln_abs: self.ln_abs + rhs.ln_abs }
    }
}

/// A pair of reals sharing one exponent: `(first, second) * e^{log_scale}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledPair {
    pub first: f64,
    pub second: f64,
    pub log_scale: f64,
}

impl ScaledPair {
    pub fn new(first: f64, second: f64) -> Self {
        Self { first, second, log_scale: 0.0 }
    }

    /// Rescales the mantissas by a power of two so the larger lies in `[1, 2)`.
    pub fn renormalized(mut self) -> Self {
        let m = self.first.abs().max(self.second.abs());
        if m > 0.0 && m.is_finite() {
            let e = m.log2().floor() as i32;
            let f = pow2(-e);
            self.first *= f;
            self.second *= f;
            self.log_scale += f64::from(e) * std::f64::consts::LN_2;
        }
        self
    }

    pub fn first_log(&self) -> LogValue {
        LogValue::from_scaled(self.first, self.log_scale)
    }

    pub fn second_log(&self) -> LogValue {
        LogValue::from_scaled(self.second, self.log_scale)
    }

    pub fn is_finite(&self) -> bool {
        self.first.is_finite() && self.second.is_finite() && self.log_scale.is_finite()
    }
}

fn pow2(e: i32) -> f64 {
    // powi on 2.0 is exact across the normal range used here (|e| < 1000).
    2f64.powi(e)
}

/// `(cosh theta, sinh theta) * e^{-theta}` for `theta >= 0`, accurate for small theta.
pub fn hyperbolic_scaled(theta: f64) -> (f64, f64) {
    let em = (-2.0 * theta).exp_m1();
    (0.5 * (2.0 + em), -0.5 * em)
}

/// `f(y) = e^{log_scale} (a e^{rate y} + b e^{-rate y})` for `y` measured from the left
/// end of a piece on which the coefficient is constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpPiece {
    pub rate: f64,
    pub a: f64,
    pub b: f64,
    pub log_scale: f64,
}

impl ExpPiece {
    pub fn eval(&self, y: f64) -> LogValue {
        let up = LogValue::from_scaled(self.a, self.log_scale + self.rate * y);
        let down = LogValue::from_scaled(self.b, self.log_scale - self.rate * y);
        up + down
    }
}

/// `ln \int_0^w e^{gamma y} dy`.
fn ln_exp_integral(gamma: f64, w: f64) -> f64 {
    let z = gamma * w;
    if z == 0.0 {
        w.ln()
    } else if gamma > 0.0 {
        z + (-(-z).exp_m1() / gamma).ln()
    } else {
        (z.exp_m1() / gamma).ln()
    }
}

/// `\int_0^w f(y) g(y) dy` in closed form.
pub fn product_integral(f: &ExpPiece, g: &ExpPiece, w: f64) -> LogValue {
    let scale = f.log_scale + g.log_scale;
    let term = |c: f64, gamma: f64| LogValue::from_scaled(c, scale + ln_exp_integral(gamma, w));
    LogValue::sum([
        term(f.a * g.a, f.rate + g.rate),
        term(f.a * g.b, f.rate - g.rate),
        term(f.b * g.a, g.rate - f.rate),
        term(f.b * g.b, -f.rate - g.rate),
    ])
}
