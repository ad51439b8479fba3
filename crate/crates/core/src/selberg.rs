//! Complex Selberg integrals over `C^N` and their large-`N` limit.
//!
//! The integrand with exponents `w = (w_1, w_2, w_3)` attached to `0, 1, ∞` is
//!
//! ```text
//! ρ_N^w(z) = Π_{i<j} |z_i - z_j|^{-2|V|/(N-1)} · Π_i |z_i|^{-2 w_1} |z_i - 1|^{-2 w_2},
//! |V| = 2 - w_1 - w_2 - w_3,
//! ```
//!
//! and `w_3` enters only through `|V|`, as the decay rate at infinity. Its
//! integral is the Dotsenko–Fateev Gamma product with step `g = |V|/(2(N-1))`:
//!
//! ```text
//! Z_N = π^N N! (-l(-g))^{-N} Π_{j=0}^{N-1} (-l(-(j+1) g)) / Π_k l(w_k + j g),
//! l(x) = Γ(x)/Γ(1-x).
//! ```
//!
//! For `N = 1` the integral is the complex beta value
//! `π l(1-w_1) l(1-w_2) l(w_1+w_2-1)`, finite for `w_1 + w_2 > 1`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;
use crate::special::{ln_factorial, log_l, log_neg_l_neg, LogSigned};

/// Exponents `(w_1, w_2, w_3)` in `[0,1)` with `|V| = 2 - Σ w > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightTriple {
    pub w: [f64; 3],
}

impl WeightTriple {
    pub fn new(w1: f64, w2: f64, w3: f64) -> Result<Self> {
        let w = [w1, w2, w3];
        for (i, x) in w.iter().enumerate() {
            if !(x.is_finite() && (0.0..1.0).contains(x)) {
                return Err(Error::validation(format!("w{} = {x} is not in [0,1)", i + 1)));
            }
        }
        let t = WeightTriple { w };
        if t.abs_v() <= 0.0 {
            return Err(Error::validation(format!("|V| = {} is not positive", t.abs_v())));
        }
        Ok(t)
    }

    pub fn symmetric(x: f64) -> Result<Self> {
        Self::new(x, x, x)
    }

    pub fn abs_v(&self) -> f64 {
        2.0 - self.w.iter().sum::<f64>()
    }

    /// `w_i < Σ_{j≠i} w_j` for every `i`.
    pub fn is_kstable(&self) -> bool {
        let s: f64 = self.w.iter().sum();
        self.w.iter().all(|x| 2.0 * x < s)
    }

    /// Closure `w_i <= Σ_{j≠i} w_j`, which includes `(0,0,0)`.
    pub fn is_kpolystable_closure(&self) -> bool {
        let s: f64 = self.w.iter().sum();
        self.w.iter().all(|x| 2.0 * x <= s)
    }

    pub fn permuted(&self, p: [usize; 3]) -> Self {
        WeightTriple { w: [self.w[p[0]], self.w[p[1]], self.w[p[2]]] }
    }
}

fn open_unit(x: f64) -> bool {
    x > 0.0 && x < 1.0
}

/// Checks every Gamma argument of the product formula lies in `(0,1)`.
fn check_domain(w: &WeightTriple, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::validation("N must be at least 1"));
    }
    if n == 1 {
        let [w1, w2, _] = w.w;
        if !(w1 + w2 > 1.0) {
            return Err(Error::domain(format!(
                "the N = 1 integral needs w1 + w2 > 1, got {}",
                w1 + w2
            )));
        }
        return Ok(0.0);
    }
    let g = w.abs_v() / (2.0 * (n - 1) as f64);
    for j in 0..n {
        let x = (j + 1) as f64 * g;
        if !open_unit(x) {
            return Err(Error::domain(format!("(j+1)·|V|/(2(N-1)) = {x} not in (0,1) at j = {j}")));
        }
        for (k, wk) in w.w.iter().enumerate() {
            let y = wk + j as f64 * g;
            if !open_unit(y) {
                return Err(Error::domain(format!(
                    "w{} + j·|V|/(2(N-1)) = {y} not in (0,1) at (j, k) = ({j}, {})",
                    k + 1,
                    k + 1
                )));
            }
        }
    }
    Ok(g)
}

fn ln_l_pos(x: f64) -> Result<f64> {
    log_l(x)?.ln()
}

/// `log Z_N^w` by the Gamma-product formula.
pub fn selberg_log_z(w: &WeightTriple, n: u64) -> Result<f64> {
    let g = check_domain(w, n)?;
    if n == 1 {
        let [w1, w2, _] = w.w;
        return Ok(PI.ln() + ln_l_pos(1.0 - w1)? + ln_l_pos(1.0 - w2)? + ln_l_pos(w1 + w2 - 1.0)?);
    }
    let nf = n as f64;
    let mut s = nf * PI.ln() + ln_factorial(n) - nf * log_neg_l_neg(g)?;
    for j in 0..n {
        s += log_neg_l_neg((j + 1) as f64 * g)?;
        for wk in w.w {
            s -= ln_l_pos(wk + j as f64 * g)?;
        }
    }
    Ok(s)
}

/// The `N = 1` value with the factor printed as `l(1-w_1)^2`; kept so the
/// oracle tests can show it is not the integral.
pub fn beta_integral_printed_variant(w1: f64, w2: f64) -> Result<f64> {
    Ok(PI.ln() + 2.0 * ln_l_pos(1.0 - w1)? + ln_l_pos(w1 + w2 - 1.0)?)
}

pub const QUAD_TOL: f64 = 1e-10;
const QUAD_MAX_INTERVALS: usize = 20_000;

/// `inf M` for the weight triple:
///
/// ```text
/// log(|V|/2) + log π - 1
///   + (2/|V|) ( ∫_{-|V|/2}^0 log(-l(x)) dx - Σ_k ∫_{w_k}^{w_k+|V|/2} log l(x) dx ).
/// ```
pub fn inf_mabuchi(w: &WeightTriple) -> Result<f64> {
    if !w.is_kpolystable_closure() {
        return Err(Error::domain(format!("weights {:?} violate w_i <= Σ_(j≠i) w_j", w.w)));
    }
    let v = w.abs_v();
    let h = v / 2.0;
    let neg = quad::integrate(|x| log_l(x).map(|s| s.log_abs).unwrap_or(f64::NAN), -h, 0.0, QUAD_TOL, QUAD_MAX_INTERVALS)?;
    let mut acc = neg.value;
    for wk in w.w {
        let r = quad::integrate(
            |x| log_l(x).map(|s| s.sign as f64 * s.log_abs).unwrap_or(f64::NAN),
            wk,
            wk + h,
            QUAD_TOL,
            QUAD_MAX_INTERVALS,
        )?;
        acc -= r.value;
    }
    Ok(h.ln() + PI.ln() - 1.0 + acc / h)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: u64,
    pub log_z_over_n: f64,
    pub target: f64,
    /// `|log Z / N - target|`.
    pub error: f64,
    pub error_times_n_over_log_n: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Schedule {
    Fixed(WeightTriple),
    /// `w_N = (2/(N+2))·(1,1,1)`, targeting `inf M` at `w = 0`.
    Symmetric,
}

impl Schedule {
    pub fn weights(&self, n: u64) -> Result<WeightTriple> {
        match self {
            Schedule::Fixed(w) => Ok(*w),
            Schedule::Symmetric => WeightTriple::symmetric(2.0 / (n as f64 + 2.0)),
        }
    }

    pub fn target(&self) -> Result<f64> {
        match self {
            Schedule::Fixed(w) => {
                if !w.is_kstable() {
                    return Err(Error::domain("fixed schedule needs w_i < Σ_(j≠i) w_j"));
                }
                inf_mabuchi(w)
            }
            Schedule::Symmetric => inf_mabuchi(&WeightTriple::symmetric(0.0)?),
        }
    }
}

/// Rows `(N, log Z_N / N, target, error, error·N/log N)`.
pub fn convergence_run(schedule: &Schedule, ns: &[u64]) -> Result<Vec<ConvergenceRow>> {
    let target = schedule.target()?;
    ns.par_iter()
        .map(|&n| {
            if n < 2 {
                return Err(Error::validation("convergence rows need N >= 2"));
            }
            let lz = selberg_log_z(&schedule.weights(n)?, n)? / n as f64;
            let error = (lz - target).abs();
            Ok(ConvergenceRow {
                n,
                log_z_over_n: lz,
                target,
                error,
                error_times_n_over_log_n: error * n as f64 / (n as f64).ln(),
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ArithModel {
    /// `P^1` over the integers with trivial divisor, `N >= 4`.
    P1Z,
    /// Equal weights `w` at `0` and `∞`, `N >= 3`.
    P1ZDw(f64),
}

/// Arithmetic period as a signed log, valid for the meromorphic continuation.
///
/// `P1Z`: with `m = N-3` points and step `1/(N-1)`,
/// `π^m m! (-l(-1/(N-1)))^{-m} Π_{j<m} (-l(-(j+1)/(N-1))) / l((j+2)/(N-1))^3`,
/// and `π l(1/3)^3` at `N = 4`.
///
/// `P1ZDw`: with `m = N-1` points and step `s = (1-w)/(N-1)`,
/// `π^m m! (-l(-s))^{-m} Π_{j<m} (-l(-(j+1)s)) / (l(w + j s)^2 l((j+2) s))`.
pub fn arithmetic_signed(n: u64, model: ArithModel) -> Result<LogSigned> {
    let pi = LogSigned::positive(PI.ln());
    match model {
        ArithModel::P1Z => {
            if n < 4 {
                return Err(Error::validation("the trivial-divisor model needs N >= 4"));
            }
            if n == 4 {
                return Ok(pi * log_l(1.0 / 3.0)?.powi(3));
            }
            let m = n - 3;
            let d = (n - 1) as f64;
            let mut z = pi.powi(m as i64) * LogSigned::positive(ln_factorial(m));
            z = z / (-log_l(-1.0 / d)?).powi(m as i64);
            for j in 0..m {
                z = z * -log_l(-((j + 1) as f64) / d)?;
                z = z / log_l((j + 2) as f64 / d)?.powi(3);
            }
            Ok(z)
        }
        ArithModel::P1ZDw(w) => {
            if n < 3 {
                return Err(Error::validation("the two-point model needs N >= 3"));
            }
            if !(w < 1.0) || !w.is_finite() {
                return Err(Error::domain(format!("weight {w} must be below 1")));
            }
            let m = n - 1;
            let s = (1.0 - w) / (n - 1) as f64;
            let mut z = pi.powi(m as i64) * LogSigned::positive(ln_factorial(m));
            z = z / (-log_l(-s)?).powi(m as i64);
            for j in 0..m {
                let jf = j as f64;
                z = z * -log_l(-(jf + 1.0) * s)?;
                z = z / log_l(w + jf * s)?.powi(2);
                z = z / log_l((jf + 2.0) * s)?;
            }
            Ok(z)
        }
    }
}

/// `log Z_N` of the arithmetic models where the integral converges.
///
/// The two-point model converges for `w ∈ (1/N, 1)`; at `w = 1/N` the factor
/// `l(N s)` vanishes and the period has a pole.
pub fn arithmetic_log_z(n: u64, model: ArithModel) -> Result<f64> {
    if let ArithModel::P1ZDw(w) = model {
        let lo = 1.0 / n as f64;
        if !(w > lo && w < 1.0) {
            return Err(Error::domain(format!("two-point period converges only for w in ({lo}, 1), got {w}")));
        }
    }
    arithmetic_signed(n, model)?.ln()
}

/// Triple and point count whose Selberg integral equals the arithmetic period.
pub fn arithmetic_reduction(n: u64, model: ArithModel) -> Result<(WeightTriple, u64)> {
    match model {
        // One point only sees w_1 and w_2, so the third slot is left at zero.
        ArithModel::P1Z if n == 4 => Ok((WeightTriple::new(2.0 / 3.0, 2.0 / 3.0, 0.0)?, 1)),
        ArithModel::P1Z if n >= 5 => Ok((WeightTriple::symmetric(2.0 / (n - 1) as f64)?, n - 3)),
        ArithModel::P1ZDw(w) if n >= 3 => {
            Ok((WeightTriple::new(w, 2.0 * (1.0 - w) / (n - 1) as f64, w)?, n - 1))
        }
        _ => Err(Error::validation("N out of range for the model")),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate_log_z: f64,
    pub stderr: f64,
    pub samples: u64,
    pub rejected: u64,
}

/// Per-coordinate proposal: a three-way mixture concentrated near `0`, `1`
/// and `∞` with the same power behaviour as the integrand there.
///
/// The core density is `q_a(z) = (1-a)/π |z|^{-2a} (1+|z|^2)^{a-2}`; `a = 0`
/// is the uniform sphere measure carried to `C` by stereographic projection.
/// The `∞` component is the image of `q_c` under `z -> 1/z`, with density
/// `(1-c)/π (1+|z|^2)^{c-2}`.
#[derive(Clone, Copy, Debug)]
struct Proposal {
    a0: f64,
    a1: f64,
    c: f64,
}

impl Proposal {
    fn sample_core<R: Rng>(rng: &mut R, a: f64) -> (f64, f64) {
        let u: f64 = rng.random();
        let tau = u.powf(1.0 / (1.0 - a));
        let r = (tau / (1.0 - tau)).sqrt();
        let th = 2.0 * PI * rng.random::<f64>();
        (r * th.cos(), r * th.sin())
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> (f64, f64) {
        match rng.random_range(0..3u8) {
            0 => Self::sample_core(rng, self.a0),
            1 => {
                let (x, y) = Self::sample_core(rng, self.a1);
                (x + 1.0, y)
            }
            _ => {
                let (x, y) = Self::sample_core(rng, self.c);
                let r2 = x * x + y * y;
                (x / r2, -y / r2)
            }
        }
    }

    fn ln_density(&self, x: f64, y: f64) -> f64 {
        let core = |a: f64, r2: f64| (1.0 - a) / PI * r2.powf(-a) * (1.0 + r2).powf(a - 2.0);
        let r2 = x * x + y * y;
        let s2 = (x - 1.0) * (x - 1.0) + y * y;
        let inf = (1.0 - self.c) / PI * (1.0 + r2).powf(self.c - 2.0);
        ((core(self.a0, r2) + core(self.a1, s2) + inf) / 3.0).ln()
    }
}

/// Conditions under which `ρ²/q` is integrable, so the estimator has finite variance.
fn check_variance(w: &WeightTriple, n: u64) -> Result<()> {
    let v = w.abs_v();
    if n >= 2 {
        let nf = n as f64;
        if nf * v / (nf - 1.0) >= 1.0 {
            return Err(Error::domain(format!(
                "importance weights have infinite variance: N|V|/(N-1) = {} >= 1",
                nf * v / (nf - 1.0)
            )));
        }
        if let Some(wk) = w.w.iter().find(|wk| *wk + v >= 1.0) {
            return Err(Error::domain(format!("importance weights have infinite variance: w + |V| = {} >= 1", wk + v)));
        }
    }
    Ok(())
}

const MC_CHUNK: u64 = 1 << 16;
const MC_REJECT_FRACTION: f64 = 1e-6;

/// Importance-sampling estimate of `log Z_N^w` for `N ∈ {1,2,3}`.
pub fn mc_oracle(w: &WeightTriple, n: u64, samples: u64, seed: u64) -> Result<McEstimate> {
    if !(1..=3).contains(&n) {
        return Err(Error::validation("the Monte Carlo oracle supports N in {1, 2, 3}"));
    }
    if samples < 2 {
        return Err(Error::validation("need at least two samples"));
    }
    check_domain(w, n)?;
    check_variance(w, n)?;
    let [w1, w2, w3] = w.w;
    let prop = Proposal { a0: w1, a1: w2, c: if n == 1 { 2.0 - w1 - w2 } else { w3 } };
    let pair = if n >= 2 { 2.0 * w.abs_v() / (n - 1) as f64 } else { 0.0 };
    let chunks = samples.div_ceil(MC_CHUNK);
    let parts: Vec<(f64, f64, u64, u64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let count = MC_CHUNK.min(samples - c * MC_CHUNK);
            let (mut s1, mut s2, mut bad) = (0.0, 0.0, 0u64);
            let mut z = [(0.0, 0.0); 3];
            for _ in 0..count {
                let mut lw = 0.0;
                for zi in z.iter_mut().take(n as usize) {
                    *zi = prop.sample(&mut rng);
                    let (x, y) = *zi;
                    let r2 = x * x + y * y;
                    let s2 = (x - 1.0) * (x - 1.0) + y * y;
                    lw += -w1 * r2.ln() - w2 * s2.ln() - prop.ln_density(x, y);
                }
                for i in 0..n as usize {
                    for j in (i + 1)..n as usize {
                        let d2 = (z[i].0 - z[j].0).powi(2) + (z[i].1 - z[j].1).powi(2);
                        lw -= 0.5 * pair * d2.ln();
                    }
                }
                let f = lw.exp();
                if f.is_finite() && !f.is_nan() {
                    s1 += f;
                    s2 += f * f;
                } else {
                    bad += 1;
                }
            }
            (s1, s2, count - bad, bad)
        })
        .collect();
    let (s1, s2, good, bad) = parts
        .iter()
        .fold((0.0, 0.0, 0, 0), |a, p| (a.0 + p.0, a.1 + p.1, a.2 + p.2, a.3 + p.3));
    if bad as f64 > MC_REJECT_FRACTION * samples as f64 {
        return Err(Error::domain(format!("{bad} of {samples} importance weights were not finite")));
    }
    let m = s1 / good as f64;
    let var = (s2 / good as f64 - m * m).max(0.0) * good as f64 / (good - 1) as f64;
    let se = (var / good as f64).sqrt();
    Ok(McEstimate { estimate_log_z: m.ln(), stderr: se / m, samples: good, rejected: bad })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_at_two_thirds() {
        let w = WeightTriple::new(2.0 / 3.0, 2.0 / 3.0, 0.0).unwrap();
        let expect = PI.ln() + 3.0 * log_l(1.0 / 3.0).unwrap().log_abs;
        assert!((selberg_log_z(&w, 1).unwrap() - expect).abs() < 1e-14);
    }

    #[test]
    fn permutation_invariant() {
        let w = WeightTriple::new(0.7, 0.6, 0.5).unwrap();
        for n in [2, 3, 10] {
            let base = selberg_log_z(&w, n).unwrap();
            for p in [[1, 0, 2], [2, 1, 0], [1, 2, 0]] {
                assert!((selberg_log_z(&w.permuted(p), n).unwrap() - base).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn domain_errors() {
        // |V| = 1.1 gives N|V|/(2(N-1)) = 1.1 at N = 2.
        let w = WeightTriple::new(0.3, 0.3, 0.3).unwrap();
        assert!(matches!(selberg_log_z(&w, 2), Err(Error::Domain(_))));
        let w = WeightTriple::new(0.2, 0.3, 0.0).unwrap();
        assert!(matches!(selberg_log_z(&w, 1), Err(Error::Domain(_))));
        assert!(WeightTriple::new(1.0, 0.0, 0.0).is_err());
        assert!(WeightTriple::new(0.9, 0.9, 0.5).is_err());
        assert!(selberg_log_z(&WeightTriple::new(0.5, 0.5, 0.5).unwrap(), 0).is_err());
    }

    #[test]
    fn mabuchi_at_zero() {
        let m = inf_mabuchi(&WeightTriple::symmetric(0.0).unwrap()).unwrap();
        assert!((m - (PI.ln() + 1.0)).abs() < 1e-9, "{m}");
    }

    #[test]
    fn mabuchi_permutation() {
        let w = WeightTriple::new(0.5, 0.4, 0.3).unwrap();
        let a = inf_mabuchi(&w).unwrap();
        let b = inf_mabuchi(&w.permuted([2, 0, 1])).unwrap();
        assert!((a - b).abs() < 1e-12);
        assert!(inf_mabuchi(&WeightTriple::new(0.9, 0.1, 0.1).unwrap()).is_err());
    }

    #[test]
    fn n_two_row_present() {
        let rows = convergence_run(&Schedule::Symmetric, &[2, 3]).unwrap();
        assert!(rows.iter().all(|r| r.log_z_over_n.is_finite()));
        assert!(convergence_run(&Schedule::Symmetric, &[1]).is_err());
    }

    #[test]
    fn arithmetic_small_cases() {
        let z4 = arithmetic_log_z(4, ArithModel::P1Z).unwrap();
        let (w, m) = arithmetic_reduction(4, ArithModel::P1Z).unwrap();
        assert_eq!(m, 1);
        assert!((z4 - selberg_log_z(&w, m).unwrap()).abs() < 1e-13);
        assert!(arithmetic_log_z(3, ArithModel::P1Z).is_err());
        assert!(arithmetic_log_z(5, ArithModel::P1ZDw(0.1)).is_err());
        // The continuation stays defined below 1/N, away from poles.
        assert!(arithmetic_signed(5, ArithModel::P1ZDw(0.1)).is_ok());
    }

    #[test]
    fn oracle_variance_guard() {
        let w = WeightTriple::new(0.5, 0.5, 0.5).unwrap();
        assert!(mc_oracle(&w, 2, 1000, 1).is_err());
        assert!(mc_oracle(&w, 4, 1000, 1).is_err());
    }

    #[test]
    fn oracle_reproducible() {
        let w = WeightTriple::new(0.6, 0.7, 0.0).unwrap();
        let a = mc_oracle(&w, 1, 100_000, 3).unwrap();
        let b = mc_oracle(&w, 1, 100_000, 3).unwrap();
        assert_eq!(a, b);
    }
}
