//! Slab-constrained Metropolis sampling of point configurations on the unit
//! two-sphere, with thermodynamic-integration estimates of `log Z`.
//!
//! Target on `(S^2)^N`:
//!
//! ```text
//! exp(-β N E(x)) · Π ρ_w(x_i) · 1{‖m_N(x)‖_∞ < ε},
//! E(x) = -(1/(kN)) Σ_{i<j} log(|x_i - x_j|^2 / 4),   k = (N-1)/V,  V = 2 - 2w,
//! ```
//!
//! relative to the uniform probability measure. `ρ_w` is the normalised
//! density `(|x - p_0|^2 |x - p_1|^2 / 16)^{-w}` in the poles `p_0, p_1`.
//! The moment `m_N` is the centre of mass for `w = 0` and
//! `(2/(VN)) Σ x_{i,3}` otherwise.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::beta::ln_beta;
use statrs::function::gamma::ln_gamma;

use crate::curve::LogFanoCurve;
use crate::error::{Error, Result};
use crate::quad;
use crate::rational::{ExtRational, Q};
use crate::thresholds::gamma_n_reduced;

pub type Vec3 = [f64; 3];

const UNIT_TOL: f64 = 1e-12;

fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn dist2(a: &Vec3, b: &Vec3) -> f64 {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    dot(&d, &d)
}

fn normalize(a: Vec3) -> Vec3 {
    let r = dot(&a, &a).sqrt();
    [a[0] / r, a[1] / r, a[2] / r]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec3>", into = "Vec<Vec3>")]
pub struct SphereConfig {
    points: Vec<Vec3>,
}

impl TryFrom<Vec<Vec3>> for SphereConfig {
    type Error = Error;
    fn try_from(points: Vec<Vec3>) -> Result<Self> {
        SphereConfig::new(points)
    }
}

impl From<SphereConfig> for Vec<Vec3> {
    fn from(c: SphereConfig) -> Self {
        c.points
    }
}

impl SphereConfig {
    pub fn new(points: Vec<Vec3>) -> Result<Self> {
        for (i, p) in points.iter().enumerate() {
            let r = dot(p, p).sqrt();
            if !r.is_finite() || (r - 1.0).abs() > UNIT_TOL {
                return Err(Error::validation(format!("point {i} is not on the unit sphere (|x| = {r})")));
            }
        }
        Ok(SphereConfig { points })
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Same configuration under the rotation matrix `r` (rows).
    pub fn rotated(&self, r: &[Vec3; 3]) -> Result<Self> {
        let pts = self.points.iter().map(|p| normalize([dot(&r[0], p), dot(&r[1], p), dot(&r[2], p)])).collect();
        SphereConfig::new(pts)
    }
}

fn check_w(w: f64) -> Result<()> {
    if !(0.0..1.0).contains(&w) {
        return Err(Error::validation(format!("w must lie in [0, 1), got {w}")));
    }
    Ok(())
}

/// `k = (N-1)/V` with `V = 2 - 2w`.
pub fn level(n: usize, w: f64) -> f64 {
    (n as f64 - 1.0) / (2.0 - 2.0 * w)
}

pub fn energy(config: &SphereConfig, w: f64) -> Result<f64> {
    check_w(w)?;
    let n = config.len();
    if n < 2 {
        return Err(Error::validation("energy needs at least two points"));
    }
    let pts = config.points();
    let mut s = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let d = dist2(&pts[i], &pts[j]);
            if d == 0.0 {
                return Err(Error::domain(format!("points {i} and {j} coincide: energy is infinite")));
            }
            s += (d / 4.0).ln();
        }
    }
    Ok(-s / (level(n, w) * n as f64))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Moment {
    Vector(Vec3),
    Scalar(f64),
}

impl Moment {
    pub fn sup_norm(&self) -> f64 {
        match self {
            Moment::Vector(v) => v.iter().fold(0.0f64, |m, x| m.max(x.abs())),
            Moment::Scalar(s) => s.abs(),
        }
    }
}

fn moment_of_sum(sum: &Vec3, n: usize, w: f64) -> Moment {
    let nf = n as f64;
    if w == 0.0 {
        Moment::Vector([sum[0] / nf, sum[1] / nf, sum[2] / nf])
    } else {
        Moment::Scalar(2.0 * sum[2] / ((2.0 - 2.0 * w) * nf))
    }
}

pub fn moment(config: &SphereConfig, w: f64) -> Result<Moment> {
    check_w(w)?;
    if config.is_empty() {
        return Err(Error::validation("empty configuration"));
    }
    let mut sum = [0.0; 3];
    for p in config.points() {
        for c in 0..3 {
            sum[c] += p[c];
        }
    }
    Ok(moment_of_sum(&sum, config.len(), w))
}

/// `log ρ_w(x)` against the uniform probability measure.
pub fn log_rho(w: f64, x: &Vec3) -> f64 {
    if w == 0.0 {
        return 0.0;
    }
    let t = 0.5 * (1.0 + x[2]);
    -w * (t * (1.0 - t)).ln() - ln_beta(1.0 - w, 1.0 - w)
}

/// Independent draw from `ρ_w`: `(1 + x_3)/2 ~ Beta(1-w, 1-w)`, uniform azimuth.
fn sample_rho<R: Rng>(rng: &mut R, beta: Option<&Beta<f64>>) -> Vec3 {
    let z = match beta {
        None => 2.0 * rng.random::<f64>() - 1.0,
        Some(b) => 2.0 * b.sample(rng) - 1.0,
    };
    let phi = 2.0 * PI * rng.random::<f64>();
    let r = (1.0 - z * z).max(0.0).sqrt();
    [r * phi.cos(), r * phi.sin(), z]
}

fn rho_sampler(w: f64) -> Result<Option<Beta<f64>>> {
    if w == 0.0 {
        Ok(None)
    } else {
        Beta::new(1.0 - w, 1.0 - w).map(Some).map_err(|e| Error::validation(e.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerParams {
    pub n: usize,
    pub beta: f64,
    pub w: f64,
    pub eps: f64,
    pub step_sigma: f64,
    /// Single-site proposals after burn-in.
    pub n_steps: u64,
    pub burn_in: u64,
    pub seed: u64,
}

impl SamplerParams {
    /// `ε = min(0.05, 1/N)`, initial step 0.5, burn-in of 10% of the steps.
    pub fn new(n: usize, beta: f64, w: f64, n_steps: u64, seed: u64) -> Self {
        SamplerParams {
            n,
            beta,
            w,
            eps: default_eps(n),
            step_sigma: 0.5,
            n_steps,
            burn_in: (n_steps / 10).max(100 * n as u64),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::validation("sampler needs N >= 2"));
        }
        check_w(self.w)?;
        if !(self.eps > 0.0) {
            return Err(Error::validation("slab half-width eps must be positive"));
        }
        if !(self.step_sigma > 0.0 && self.step_sigma.is_finite()) {
            return Err(Error::validation("step_sigma must be positive"));
        }
        if !self.beta.is_finite() {
            return Err(Error::validation("beta must be finite"));
        }
        if self.n_steps < self.n as u64 {
            return Err(Error::validation("n_steps must cover at least one sweep"));
        }
        check_integrable(self.n, self.w, self.beta)
    }
}

pub fn default_eps(n: usize) -> f64 {
    0.05f64.min(1.0 / n as f64)
}

/// Refuses `β <= -γ^(N)` of the reduced threshold for `Δ = 0` or `Δ_w`.
pub fn check_integrable(n: usize, w: f64, beta: f64) -> Result<()> {
    if beta >= 0.0 {
        return Ok(());
    }
    let curve = if w == 0.0 {
        LogFanoCurve::trivial()
    } else {
        let wq = Q::approximate_float(w).ok_or_else(|| Error::validation("w has no rational approximation"))?;
        LogFanoCurve::two_point(wq)?
    };
    let gamma = gamma_n_reduced(&curve, n as u64)?;
    match gamma {
        ExtRational::Infinity => Ok(()),
        ExtRational::Finite(g) => {
            let g = crate::rational::to_f64(&g);
            if -beta >= g {
                Err(Error::domain(format!("beta = {beta} is at or beyond the integrability threshold -{g}")))
            } else {
                Ok(())
            }
        }
    }
}

/// Antipodal pairs along random axes, plus an equatorial triangle for odd `N`.
pub fn initial_config<R: Rng>(n: usize, rng: &mut R) -> Result<SphereConfig> {
    if n < 2 {
        return Err(Error::validation("need N >= 2"));
    }
    let mut pts = Vec::with_capacity(n);
    let pairs = if n % 2 == 1 { (n - 3) / 2 } else { n / 2 };
    if n % 2 == 1 {
        let phase = 2.0 * PI * rng.random::<f64>();
        for j in 0..3 {
            let a = phase + 2.0 * PI * j as f64 / 3.0;
            pts.push([a.cos(), a.sin(), 0.0]);
        }
    }
    for _ in 0..pairs {
        let p = sample_rho(rng, None);
        pts.push(p);
        pts.push([-p[0], -p[1], -p[2]]);
    }
    SphereConfig::new(pts)
}

/// Log acceptance data shared by the chain and the discrete detailed-balance check.
struct Target {
    n: usize,
    w: f64,
    eps: f64,
    /// `β/k`: the log-weight is `(β/k) Σ_{i<j} log(|x_i - x_j|^2/4)`.
    coupling: f64,
}

impl Target {
    fn new(n: usize, w: f64, beta: f64, eps: f64) -> Self {
        Target { n, w, eps, coupling: beta / level(n, w) }
    }

    fn in_slab(&self, sum: &Vec3) -> bool {
        moment_of_sum(sum, self.n, self.w).sup_norm() < self.eps
    }

    /// Log target ratio for moving point `i` to `y`, or `None` outside the support.
    fn log_ratio(&self, pts: &[Vec3], sum: &Vec3, i: usize, y: &Vec3) -> Option<f64> {
        let x = &pts[i];
        let new_sum = [sum[0] - x[0] + y[0], sum[1] - x[1] + y[1], sum[2] - x[2] + y[2]];
        if !self.in_slab(&new_sum) {
            return None;
        }
        let mut s = 0.0;
        if self.coupling != 0.0 {
            for (j, p) in pts.iter().enumerate() {
                if j != i {
                    let dn = dist2(y, p);
                    if dn == 0.0 {
                        return None;
                    }
                    s += (dn / dist2(x, p)).ln();
                }
            }
        }
        Some(self.coupling * s + log_rho(self.w, y) - log_rho(self.w, x))
    }
}

/// Complex spherical harmonic coefficient of the empirical measure.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    pub l: u32,
    pub m: i32,
    pub re: f64,
    pub im: f64,
}

pub const MAX_L: usize = 4;

/// `Y_l^m(x)` for `0 <= m <= l <= 4`, Condon-Shortley phase, as `(re, im)`,
/// indexed by `l(l+1)/2 + m`.
pub fn spherical_harmonics(x: &Vec3) -> [(f64, f64); 15] {
    let z = x[2];
    let mut out = [(0.0, 0.0); 15];
    // (x + iy)^m = sin^m θ e^{imφ}; q[l] = P_l^m(z) / sin^m θ.
    let mut pw = (1.0, 0.0);
    let mut qmm = 1.0;
    let fact = |k: usize| (1..=k).map(|v| v as f64).product::<f64>();
    for m in 0..=MAX_L {
        if m > 0 {
            qmm *= -((2 * m - 1) as f64);
            pw = (pw.0 * x[0] - pw.1 * x[1], pw.0 * x[1] + pw.1 * x[0]);
        }
        let mut q_prev = 0.0;
        let mut q = qmm;
        for l in m..=MAX_L {
            if l > m {
                let next = if l == m + 1 {
                    z * (2 * m + 1) as f64 * qmm
                } else {
                    ((2 * l - 1) as f64 * z * q - (l + m - 1) as f64 * q_prev) / (l - m) as f64
                };
                q_prev = q;
                q = next;
            }
            let norm = ((2 * l + 1) as f64 / (4.0 * PI) * fact(l - m) / fact(l + m)).sqrt();
            out[l * (l + 1) / 2 + m] = (norm * q * pw.0, norm * q * pw.1);
        }
    }
    out
}

/// Per-sweep records of a chain.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ChainSeries {
    pub energy: Vec<f64>,
    /// `(1/N) Σ x x^T - I/3`, row-major.
    pub quadrupole: Vec<[f64; 9]>,
    /// `(1/N) Σ Y_l^m(x_i)` for `m >= 0`, indexed as in [`spherical_harmonics`].
    pub harmonics: Vec<[(f64, f64); 15]>,
    pub moment_sup: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observables {
    pub mean_moment: Vec<f64>,
    /// Frobenius norm of the chain-averaged traceless quadrupole.
    pub quadrupole_dev: f64,
    pub quadrupole: [f64; 9],
    pub mean_energy: f64,
    pub var_energy: f64,
    /// `-l <= m <= l`, `l <= 4`.
    pub harmonic_coeffs: Vec<Harmonic>,
    pub acceptance_rate: f64,
    /// Largest `‖m_N‖_∞` over retained sweeps.
    pub max_moment_sup: f64,
    pub step_sigma: f64,
    pub sweeps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainRun {
    pub params: SamplerParams,
    pub observables: Observables,
    pub series: ChainSeries,
    pub final_config: SphereConfig,
}

fn tangent_proposal<R: Rng>(rng: &mut R, x: &Vec3, sigma: f64) -> Vec3 {
    let g: Vec3 = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
    let gx = dot(&g, x);
    normalize([
        x[0] + sigma * (g[0] - gx * x[0]),
        x[1] + sigma * (g[1] - gx * x[1]),
        x[2] + sigma * (g[2] - gx * x[2]),
    ])
}

const TUNE_BATCH: u64 = 200;

/// Runs one chain. Proposal scale is tuned during burn-in toward 30-50%
/// acceptance, then frozen; one record is taken every `N` steps.
pub fn run_chain(params: &SamplerParams) -> Result<ChainRun> {
    params.validate()?;
    let n = params.n;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut pts = initial_config(n, &mut rng)?.points;
    let target = Target::new(n, params.w, params.beta, params.eps);
    let mut sum = [0.0; 3];
    for p in &pts {
        for c in 0..3 {
            sum[c] += p[c];
        }
    }
    if !target.in_slab(&sum) {
        return Err(Error::validation("initial configuration lies outside the slab"));
    }
    let mut sigma = params.step_sigma;
    let step = |pts: &mut Vec<Vec3>, sum: &mut Vec3, rng: &mut ChaCha8Rng, sigma: f64| -> bool {
        let i = rng.random_range(0..n);
        let y = tangent_proposal(rng, &pts[i], sigma);
        let Some(lr) = target.log_ratio(pts, sum, i, &y) else { return false };
        if lr >= 0.0 || rng.random::<f64>().ln() < lr {
            let x = pts[i];
            for c in 0..3 {
                sum[c] += y[c] - x[c];
            }
            pts[i] = y;
            true
        } else {
            false
        }
    };
    let mut done = 0;
    while done < params.burn_in {
        let batch = TUNE_BATCH.min(params.burn_in - done);
        let acc = (0..batch).filter(|_| step(&mut pts, &mut sum, &mut rng, sigma)).count() as f64 / batch as f64;
        if acc < 0.3 {
            sigma *= 0.8;
        } else if acc > 0.5 {
            sigma *= 1.25;
        }
        sigma = sigma.clamp(1e-4, 4.0);
        done += batch;
    }
    let mut series = ChainSeries::default();
    let mut accepted = 0u64;
    let nn = n as u64;
    for s in 1..=params.n_steps {
        if step(&mut pts, &mut sum, &mut rng, sigma) {
            accepted += 1;
        }
        if s % nn == 0 {
            // Fresh sums each record so incremental drift never accumulates.
            sum = [0.0; 3];
            for p in &pts {
                for c in 0..3 {
                    sum[c] += p[c];
                }
            }
            record(&mut series, &pts, &sum, params.w)?;
        }
    }
    let observables = summarize(&series, accepted as f64 / params.n_steps as f64, sigma, params.w)?;
    Ok(ChainRun { params: *params, observables, series, final_config: SphereConfig { points: pts } })
}

fn record(series: &mut ChainSeries, pts: &[Vec3], sum: &Vec3, w: f64) -> Result<()> {
    let n = pts.len();
    let nf = n as f64;
    let cfg = SphereConfig { points: pts.to_vec() };
    series.energy.push(energy(&cfg, w)?);
    let mut q = [0.0; 9];
    let mut h = [(0.0, 0.0); 15];
    for p in pts {
        for a in 0..3 {
            for b in 0..3 {
                q[3 * a + b] += p[a] * p[b] / nf;
            }
        }
        for (acc, y) in h.iter_mut().zip(spherical_harmonics(p)) {
            acc.0 += y.0 / nf;
            acc.1 += y.1 / nf;
        }
    }
    for a in 0..3 {
        q[4 * a] -= 1.0 / 3.0;
    }
    series.quadrupole.push(q);
    series.harmonics.push(h);
    series.moment_sup.push(moment_of_sum(sum, n, w).sup_norm());
    Ok(())
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, c) = xs.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    s / c as f64
}

/// Expands `m >= 0` coefficients to `-l..=l` using `Y_l^{-m} = (-1)^m conj(Y_l^m)`.
pub fn expand_harmonics(h: &[(f64, f64); 15]) -> Vec<Harmonic> {
    let mut out = Vec::with_capacity(25);
    for l in 0..=MAX_L {
        for m in -(l as i32)..=(l as i32) {
            let (re, im) = h[l * (l + 1) / 2 + m.unsigned_abs() as usize];
            let (re, im) = if m < 0 {
                let s = if m % 2 == 0 { 1.0 } else { -1.0 };
                (s * re, -s * im)
            } else {
                (re, im)
            };
            out.push(Harmonic { l: l as u32, m, re, im });
        }
    }
    out
}

fn summarize(series: &ChainSeries, acceptance_rate: f64, sigma: f64, w: f64) -> Result<Observables> {
    let k = series.energy.len();
    if k == 0 {
        return Err(Error::validation("chain produced no records"));
    }
    let mean_energy = mean(series.energy.iter().copied());
    let var_energy = mean(series.energy.iter().map(|e| (e - mean_energy).powi(2)));
    let mut quad = [0.0; 9];
    for q in &series.quadrupole {
        for (a, b) in quad.iter_mut().zip(q) {
            *a += b / k as f64;
        }
    }
    let mut h = [(0.0, 0.0); 15];
    for r in &series.harmonics {
        for (a, b) in h.iter_mut().zip(r) {
            a.0 += b.0 / k as f64;
            a.1 += b.1 / k as f64;
        }
    }
    // ℓ = 1 coefficients are proportional to the centre of mass.
    let c1 = (3.0 / (4.0 * PI)).sqrt();
    let mean_moment = if w == 0.0 {
        vec![-h[2].0 * 2f64.sqrt() / c1, -h[2].1 * 2f64.sqrt() / c1, h[1].0 / c1]
    } else {
        vec![2.0 * h[1].0 / (c1 * (2.0 - 2.0 * w))]
    };
    Ok(Observables {
        mean_moment,
        quadrupole_dev: quad.iter().map(|x| x * x).sum::<f64>().sqrt(),
        quadrupole: quad,
        mean_energy,
        var_energy,
        harmonic_coeffs: expand_harmonics(&h),
        acceptance_rate,
        max_moment_sup: series.moment_sup.iter().copied().fold(0.0, f64::max),
        step_sigma: sigma,
        sweeps: k,
    })
}

/// Block-bootstrap standard error of the mean of `xs`.
///
/// Non-overlapping blocks of length `block`; `resamples` bootstrap replicates
/// drawn from a generator seeded with `seed`.
pub fn block_bootstrap_se(xs: &[f64], block: usize, resamples: usize, seed: u64) -> Result<f64> {
    let block = block.max(1);
    let nb = xs.len() / block;
    if nb < 2 || resamples < 2 {
        return Err(Error::validation("bootstrap needs at least two blocks and two resamples"));
    }
    let means: Vec<f64> = xs.chunks_exact(block).map(|c| c.iter().sum::<f64>() / block as f64).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reps: Vec<f64> = (0..resamples)
        .map(|_| (0..nb).map(|_| means[rng.random_range(0..nb)]).sum::<f64>() / nb as f64)
        .collect();
    let m = mean(reps.iter().copied());
    Ok((reps.iter().map(|r| (r - m).powi(2)).sum::<f64>() / (resamples - 1) as f64).sqrt())
}

/// Default block length: `⌈sqrt(len)⌉`.
pub fn default_block(len: usize) -> usize {
    (len as f64).sqrt().ceil() as usize
}

/// Bootstrap errors of chain averages.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapErrors {
    pub energy: f64,
    pub quadrupole: [f64; 9],
    /// `(l, m, se_re, se_im)` for `m >= 0`.
    pub harmonics: Vec<(u32, u32, f64, f64)>,
}

pub fn bootstrap_errors(series: &ChainSeries, resamples: usize, seed: u64) -> Result<BootstrapErrors> {
    let block = default_block(series.energy.len());
    let se = |xs: Vec<f64>| block_bootstrap_se(&xs, block, resamples, seed);
    let energy = se(series.energy.clone())?;
    let mut quadrupole = [0.0; 9];
    for (c, q) in quadrupole.iter_mut().enumerate() {
        *q = se(series.quadrupole.iter().map(|r| r[c]).collect())?;
    }
    let mut harmonics = Vec::with_capacity(15);
    for l in 0..=MAX_L {
        for m in 0..=l {
            let idx = l * (l + 1) / 2 + m;
            let re = se(series.harmonics.iter().map(|r| r[idx].0).collect())?;
            let im = se(series.harmonics.iter().map(|r| r[idx].1).collect())?;
            harmonics.push((l as u32, m as u32, re, im));
        }
    }
    Ok(BootstrapErrors { energy, quadrupole, harmonics })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogZEstimate {
    pub estimate: f64,
    pub stderr: f64,
}

/// Floor on the slab hit rate below which `log Z(0)` is not estimated.
pub const HIT_RATE_FLOOR: f64 = 1e-6;
const MC_CHUNK: u64 = 1 << 16;

/// Sums `(Σ f, Σ f², hits)` over `samples` i.i.d. `ρ_w` configurations, where
/// `f = exp(-β N E)` inside the slab and 0 outside.
fn iid_slab_sums(n: usize, w: f64, beta: f64, eps: f64, samples: u64, seed: u64) -> Result<(f64, f64, u64)> {
    let beta_dist = rho_sampler(w)?;
    let target = Target::new(n, w, beta, eps);
    let chunks = samples.div_ceil(MC_CHUNK);
    let parts: Vec<(f64, f64, u64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let count = MC_CHUNK.min(samples - c * MC_CHUNK);
            let mut pts = vec![[0.0; 3]; n];
            let (mut s1, mut s2, mut hits) = (0.0, 0.0, 0u64);
            for _ in 0..count {
                let mut sum = [0.0; 3];
                for p in pts.iter_mut() {
                    *p = sample_rho(&mut rng, beta_dist.as_ref());
                    for k in 0..3 {
                        sum[k] += p[k];
                    }
                }
                if !target.in_slab(&sum) {
                    continue;
                }
                hits += 1;
                let f = if beta == 0.0 {
                    1.0
                } else {
                    let mut s = 0.0;
                    for i in 0..n {
                        for j in i + 1..n {
                            s += (dist2(&pts[i], &pts[j]) / 4.0).ln();
                        }
                    }
                    (target.coupling * s).exp()
                };
                s1 += f;
                s2 += f * f;
            }
            (s1, s2, hits)
        })
        .collect();
    Ok(parts.into_iter().fold((0.0, 0.0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2)))
}

fn log_mean_with_se(s1: f64, s2: f64, samples: u64) -> Result<LogZEstimate> {
    let m = samples as f64;
    let mu = s1 / m;
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::convergence("Monte Carlo mean is zero or not finite"));
    }
    let var = (s2 / m - mu * mu).max(0.0) * m / (m - 1.0);
    Ok(LogZEstimate { estimate: mu.ln(), stderr: (var / m).sqrt() / mu })
}

/// `log Z(0)`: the slab probability under i.i.d. `ρ_w` points.
pub fn log_z0(n: usize, w: f64, eps: f64, samples: u64, seed: u64) -> Result<LogZEstimate> {
    check_w(w)?;
    if n < 2 || !(eps > 0.0) || samples < 2 {
        return Err(Error::validation("need N >= 2, eps > 0 and at least two samples"));
    }
    let (_, _, hits) = iid_slab_sums(n, w, 0.0, eps, samples, seed)?;
    let p = hits as f64 / samples as f64;
    if p < HIT_RATE_FLOOR {
        return Err(Error::convergence(format!("slab hit rate {p:.3e} is below the floor {HIT_RATE_FLOOR:e}")));
    }
    Ok(LogZEstimate { estimate: p.ln(), stderr: ((1.0 - p) / (p * samples as f64)).sqrt() })
}

/// Plain Monte Carlo of `∫ exp(-β N E) Π ρ_w 1_slab` with `ρ_w`-distributed points.
pub fn direct_mc_log_z(n: usize, w: f64, beta: f64, eps: f64, samples: u64, seed: u64) -> Result<LogZEstimate> {
    if !(2..=7).contains(&n) {
        return Err(Error::validation("direct Monte Carlo supports 2 <= N <= 7"));
    }
    check_w(w)?;
    if !(eps > 0.0) || samples < 2 {
        return Err(Error::validation("need eps > 0 and at least two samples"));
    }
    check_integrable(n, w, beta)?;
    let (s1, s2, _) = iid_slab_sums(n, w, beta, eps, samples, seed)?;
    log_mean_with_se(s1, s2, samples)
}

/// One node of the thermodynamic-integration grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TiNode {
    pub beta: f64,
    pub mean_energy: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TiEstimate {
    pub log_z: LogZEstimate,
    pub log_z0: LogZEstimate,
    pub nodes: Vec<TiNode>,
}

/// `log Z(β) = log Z(0) - N ∫_0^β <E>_{β'} dβ'` by the trapezoid rule.
///
/// `params.beta` is ignored; each grid node runs its own chain with seed
/// `params.seed + i`. `log Z(0)` uses `z0_samples` i.i.d. configurations.
pub fn estimate_log_z(params: &SamplerParams, beta_grid: &[f64], z0_samples: u64) -> Result<TiEstimate> {
    if beta_grid.is_empty() || beta_grid[0] != 0.0 {
        return Err(Error::validation("the beta grid must start at 0"));
    }
    let dir = beta_grid.last().copied().unwrap_or(0.0).signum();
    if beta_grid.windows(2).any(|p| (p[1] - p[0]) * dir <= 0.0) {
        return Err(Error::validation("the beta grid must be strictly monotone"));
    }
    for &b in beta_grid {
        SamplerParams { beta: b, ..*params }.validate()?;
    }
    let log_z0 = log_z0(params.n, params.w, params.eps, z0_samples, params.seed ^ 0x5a5a_5a5a)?;
    if beta_grid.len() == 1 {
        return Ok(TiEstimate { log_z: log_z0, log_z0, nodes: Vec::new() });
    }
    let nodes: Vec<TiNode> = beta_grid
        .par_iter()
        .enumerate()
        .map(|(i, &b)| {
            let p = SamplerParams { beta: b, seed: params.seed.wrapping_add(i as u64), ..*params };
            let run = run_chain(&p)?;
            let se = block_bootstrap_se(&run.series.energy, default_block(run.series.energy.len()), 200, p.seed)?;
            Ok(TiNode { beta: b, mean_energy: run.observables.mean_energy, stderr: se })
        })
        .collect::<Result<_>>()?;
    let nf = params.n as f64;
    let mut integral = 0.0;
    let mut var = 0.0;
    let mut wts = vec![0.0; nodes.len()];
    for i in 0..nodes.len() - 1 {
        let h = nodes[i + 1].beta - nodes[i].beta;
        integral += 0.5 * h * (nodes[i].mean_energy + nodes[i + 1].mean_energy);
        wts[i] += 0.5 * h;
        wts[i + 1] += 0.5 * h;
    }
    for (wt, node) in wts.iter().zip(&nodes) {
        var += (wt * node.stderr).powi(2);
    }
    let estimate = log_z0.estimate - nf * integral;
    let stderr = (log_z0.stderr.powi(2) + nf * nf * var).sqrt();
    Ok(TiEstimate { log_z: LogZEstimate { estimate, stderr }, log_z0, nodes })
}

/// `log ‖z^j‖^2 = log(π j! (2k-j)! / (2k+1)!)` for the weight `(1+|z|^2)^{-(2k+2)}`.
pub fn log_monomial_norm(k: f64, j: usize) -> f64 {
    let jf = j as f64;
    PI.ln() + ln_gamma(jf + 1.0) + ln_gamma(2.0 * k - jf + 1.0) - ln_gamma(2.0 * k + 2.0)
}

/// `(1/k) Σ_{j=0}^{2k} log ‖z^j‖^2`, the shift from monomial-basis to
/// orthonormal-basis normalisation of `log Z`.
pub fn basis_change_logfactor(k: f64) -> Result<f64> {
    let two_k = 2.0 * k;
    if !(two_k >= 1.0) || (two_k - two_k.round()).abs() > 1e-12 {
        return Err(Error::validation(format!("2k must be a positive integer, got k = {k}")));
    }
    let d = two_k.round() as usize;
    Ok((0..=d).map(|j| log_monomial_norm(k, j)).sum::<f64>() / k)
}

/// `‖z^j‖^2` by quadrature of `π ∫_0^∞ u^j (1+u)^{-(2k+2)} du`.
pub fn monomial_norm_quadrature(k: f64, j: usize) -> Result<f64> {
    let jf = j as f64;
    // u = s/(1-s) maps [0, 1) onto [0, ∞).
    let f = |s: f64| {
        if s >= 1.0 {
            return 0.0;
        }
        let u = s / (1.0 - s);
        u.powf(jf) * (1.0 + u).powf(-(2.0 * k + 2.0)) / ((1.0 - s) * (1.0 - s))
    };
    Ok(PI * quad::integrate(f, 0.0, 1.0, 1e-13, 2000)?.value)
}

/// Slab probability for two uniform points by nested quadrature.
///
/// The mean is `r u` with `u` uniform on the sphere and `r^2` uniform on `[0, 1]`,
/// so the probability is `∫_0^1 2r g(ε/r) dr` where `g(a)` is the fraction of
/// the sphere inside the cube `[-a, a]^3`.
pub fn two_point_slab_probability(eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::validation("eps must be positive"));
    }
    let circle = |b: f64| {
        if b >= 1.0 {
            1.0
        } else if b <= std::f64::consts::FRAC_1_SQRT_2 {
            0.0
        } else {
            (b.asin() - b.acos()) / (0.5 * PI)
        }
    };
    let cube_fraction = |a: f64| -> Result<f64> {
        if a >= 1.0 {
            return Ok(1.0);
        }
        // z = u_3 is uniform on [-1, 1]; the rest of u lies on a circle of radius sqrt(1 - z^2).
        let inner = quad::integrate(|z: f64| circle(a / (1.0 - z * z).sqrt()), 0.0, a, 1e-12, 4000)?;
        Ok(inner.value)
    };
    let outer = quad::integrate(
        |r: f64| if r == 0.0 { 0.0 } else { 2.0 * r * cube_fraction(eps / r).unwrap_or(f64::NAN) },
        0.0,
        1.0,
        1e-10,
        4000,
    )?;
    if !outer.value.is_finite() {
        return Err(Error::convergence("inner quadrature failed"));
    }
    Ok(outer.value)
}

/// Stationary distribution of the Metropolis kernel on two points restricted to
/// `dirs`, against the target; returns the largest absolute difference.
///
/// The slab can disconnect the state space. The kernel is reversible, so each
/// communicating class keeps its initial mass and the target is normalised
/// within each class.
pub fn detailed_balance_defect(dirs: &[Vec3], w: f64, beta: f64, eps: f64) -> Result<f64> {
    let target = Target::new(2, w, beta, eps);
    let m = dirs.len();
    let idx = |a: usize, b: usize| a * m + b;
    let states = m * m;
    let admissible = |a: usize, b: usize| {
        let s = [dirs[a][0] + dirs[b][0], dirs[a][1] + dirs[b][1], dirs[a][2] + dirs[b][2]];
        a != b && target.in_slab(&s)
    };
    let log_pi = |a: usize, b: usize| {
        target.coupling * (dist2(&dirs[a], &dirs[b]) / 4.0).ln() + log_rho(w, &dirs[a]) + log_rho(w, &dirs[b])
    };
    // Kernel: pick a site (1/2), propose a uniform other direction (1/(m-1)).
    let mut kernel = vec![Vec::<(usize, f64)>::new(); states];
    for a in 0..m {
        for b in 0..m {
            if !admissible(a, b) {
                continue;
            }
            let pts = [dirs[a], dirs[b]];
            let sum = [pts[0][0] + pts[1][0], pts[0][1] + pts[1][1], pts[0][2] + pts[1][2]];
            let mut stay = 1.0;
            for site in 0..2 {
                for (c, dc) in dirs.iter().enumerate() {
                    let (na, nb) = if site == 0 { (c, b) } else { (a, c) };
                    if c == pts_index(site, a, b) || na == nb {
                        continue;
                    }
                    let q = 0.5 / (m - 1) as f64;
                    if let Some(lr) = target.log_ratio(&pts, &sum, site, dc) {
                        let acc = lr.min(0.0).exp() * q;
                        kernel[idx(a, b)].push((idx(na, nb), acc));
                        stay -= acc;
                    }
                }
            }
            kernel[idx(a, b)].push((idx(a, b), stay));
        }
    }
    let live: Vec<usize> = (0..states).filter(|&s| !kernel[s].is_empty()).collect();
    if live.is_empty() {
        return Err(Error::validation("no admissible states"));
    }
    let mut p = vec![0.0; states];
    for &s in &live {
        p[s] = 1.0 / live.len() as f64;
    }
    for _ in 0..200_000 {
        let mut nxt = vec![0.0; states];
        for &s in &live {
            for &(t, pr) in &kernel[s] {
                nxt[t] += p[s] * pr;
            }
        }
        let diff = nxt.iter().zip(&p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        p = nxt;
        if diff < 1e-16 {
            break;
        }
    }
    let mut class = vec![usize::MAX; states];
    let mut n_classes = 0;
    for &s0 in &live {
        if class[s0] != usize::MAX {
            continue;
        }
        let mut stack = vec![s0];
        class[s0] = n_classes;
        while let Some(s) = stack.pop() {
            for &(t, pr) in &kernel[s] {
                if pr > 0.0 && class[t] == usize::MAX {
                    class[t] = n_classes;
                    stack.push(t);
                }
            }
        }
        n_classes += 1;
    }
    let mut pi = vec![0.0; states];
    let mut pi_tot = vec![0.0; n_classes];
    let mut start_mass = vec![0.0; n_classes];
    for &s in &live {
        pi[s] = log_pi(s / m, s % m).exp();
        pi_tot[class[s]] += pi[s];
        start_mass[class[s]] += 1.0 / live.len() as f64;
    }
    Ok(live
        .iter()
        .map(|&s| (p[s] - pi[s] / pi_tot[class[s]] * start_mass[class[s]]).abs())
        .fold(0.0, f64::max))
}

fn pts_index(site: usize, a: usize, b: usize) -> usize {
    if site == 0 {
        a
    } else {
        b
    }
}
