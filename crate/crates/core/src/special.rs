//! Gamma-function helpers in log space with sign tracking.

use std::f64::consts::PI;
use std::ops::{Div, Mul, Neg};

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// A real number stored as `sign · exp(log_abs)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogSigned {
    pub sign: i8,
    pub log_abs: f64,
}

impl LogSigned {
    pub fn positive(log_abs: f64) -> Self {
        LogSigned { sign: 1, log_abs }
    }

    pub fn powi(self, n: i64) -> Self {
        let sign = if n % 2 == 0 { 1 } else { self.sign };
        LogSigned { sign, log_abs: self.log_abs * n as f64 }
    }

    pub fn value(self) -> f64 {
        self.sign as f64 * self.log_abs.exp()
    }

    /// `log` of the value, which must be positive.
    pub fn ln(self) -> Result<f64> {
        if self.sign > 0 {
            Ok(self.log_abs)
        } else {
            Err(Error::domain("logarithm of a negative quantity"))
        }
    }
}

impl Mul for LogSigned {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        LogSigned { sign: self.sign * o.sign, log_abs: self.log_abs + o.log_abs }
    }
}

impl Div for LogSigned {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        LogSigned { sign: self.sign * o.sign, log_abs: self.log_abs - o.log_abs }
    }
}

impl Neg for LogSigned {
    type Output = Self;
    fn neg(self) -> Self {
        LogSigned { sign: -self.sign, log_abs: self.log_abs }
    }
}

fn is_pole(x: f64) -> bool {
    x <= 0.0 && x == x.round()
}

/// `(sign Γ(x), log|Γ(x)|)` for real non-pole `x`.
///
/// Left of zero it uses `Γ(x) Γ(1-x) = π / sin(πx)`, so the Lanczos series is
/// only ever evaluated at positive arguments.
pub fn ln_gamma_signed(x: f64) -> Result<LogSigned> {
    if !x.is_finite() {
        return Err(Error::domain(format!("Gamma at non-finite argument {x}")));
    }
    if is_pole(x) {
        return Err(Error::domain(format!("Gamma has a pole at {x}")));
    }
    if x > 0.0 {
        return Ok(LogSigned::positive(ln_gamma(x)));
    }
    let s = sin_pi(x);
    let sign = if s > 0.0 { 1 } else { -1 };
    Ok(LogSigned { sign, log_abs: PI.ln() - s.abs().ln() - ln_gamma(1.0 - x) })
}

/// `sin(πx)` with the argument reduced to `[-1/2, 1/2]` first.
fn sin_pi(x: f64) -> f64 {
    let n = x.round();
    let r = x - n;
    let s = (PI * r).sin();
    if (n as i64) % 2 == 0 {
        s
    } else {
        -s
    }
}

/// `l(x) = Γ(x)/Γ(1-x)` as a signed log, for real non-integer `x`.
///
/// On `(0,1)` the value is positive and on `(-1,0)` negative. Integers are
/// rejected: `l` has a pole at `0, -1, -2, ...` and a zero at `1, 2, ...`.
pub fn log_l(x: f64) -> Result<LogSigned> {
    if !x.is_finite() || x == x.round() {
        return Err(Error::domain(format!("l(x) = Γ(x)/Γ(1-x) is singular or zero at x = {x}")));
    }
    Ok(ln_gamma_signed(x)? / ln_gamma_signed(1.0 - x)?)
}

/// `log(-l(-y))` for `y ∈ (0,1)`, checking the factor is positive.
pub fn log_neg_l_neg(y: f64) -> Result<f64> {
    let v = log_l(-y)?;
    if v.sign >= 0 {
        return Err(Error::domain(format!("-l(-{y}) is not positive")));
    }
    Ok(v.log_abs)
}

/// `log n!`.
pub fn ln_factorial(n: u64) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_is_one() {
        let v = log_l(0.5).unwrap();
        assert_eq!(v.sign, 1);
        assert!(v.log_abs.abs() < 1e-15);
    }

    #[test]
    fn one_third_against_reference() {
        // Γ(1/3) = 2.678938534707747633..., Γ(2/3) = 1.354117939426400416...
        let v = log_l(1.0 / 3.0).unwrap();
        let reference = (2.678_938_534_707_747_6_f64 / 1.354_117_939_426_400_4).ln();
        assert_eq!(v.sign, 1);
        assert!((v.log_abs - reference).abs() < 1e-14);
    }

    #[test]
    fn negative_side_sign_and_pole() {
        let mut prev = 0.0;
        for y in [1e-1, 1e-3, 1e-6, 1e-9] {
            let v = log_l(-y).unwrap();
            assert_eq!(v.sign, -1);
            assert!(v.log_abs > prev);
            // l(-y) ≈ -1/y near the pole.
            assert!((v.log_abs + y.ln()).abs() < 2.0 * y.max(1e-9));
            prev = v.log_abs;
        }
    }

    #[test]
    fn gamma_reflection_values() {
        // Γ(-1/2) = -2√π, Γ(-3/2) = 4√π/3.
        let g = ln_gamma_signed(-0.5).unwrap();
        assert_eq!(g.sign, -1);
        assert!((g.value() + 2.0 * PI.sqrt()).abs() < 1e-13);
        let g = ln_gamma_signed(-1.5).unwrap();
        assert_eq!(g.sign, 1);
        assert!((g.value() - 4.0 * PI.sqrt() / 3.0).abs() < 1e-13);
    }

    #[test]
    fn rejects_integers() {
        for x in [0.0, -1.0, 1.0, 2.0, f64::NAN] {
            assert!(log_l(x).is_err());
        }
        assert!(ln_gamma_signed(-3.0).is_err());
        assert!(ln_gamma_signed(3.0).is_ok());
    }

    #[test]
    fn reflection_antisymmetry() {
        for i in 1..100 {
            let x = i as f64 / 100.0;
            let s = log_l(x).unwrap().log_abs + log_l(1.0 - x).unwrap().log_abs;
            assert!(s.abs() < 1e-12, "x = {x}: {s}");
        }
    }
}
