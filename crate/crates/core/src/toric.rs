//! Toric potentials on the real line and functionals along geodesic rays.
//!
//! A metric is a convex `φ(x)` on `R` with slopes in `P = [-V/2, V/2]`; its
//! Legendre dual `v(y) = sup_x (xy - φ(x))` lives on `P`. The measure is
//! `μ = φ'' dx / V`. With reference potential `φ_0`:
//!
//! ```text
//! L(v)   = (V/2)(v(-V/2) + v(V/2)) - ∫_P v dy
//! E      = (-L(v) + ∫ φ_0 φ'' dx) / V
//! D      = (1/V) ∫ φ'' log(φ''/V) dx + (1/V) ∫ ψ φ'' dx + log Z_ref
//! F_{-γ} = -γ E + D
//! Ding_γ = (1/V) ∫_P v dy - (1/γ) log ∫ exp(-(γ φ + (1-γ) φ_0)) dx
//! ```
//!
//! where `ψ` and `Z_ref` describe the reference measure of the entropy term.

use serde::{Deserialize, Serialize};
use statrs::function::beta::ln_beta;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    /// `φ(x)` on a symmetric truncation `[-X, X]` of the line.
    Primal,
    /// `v(y)` on the moment interval.
    Dual,
}

/// Convex function sampled on a uniform grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexProfile {
    pub side: Side,
    pub lo: f64,
    pub hi: f64,
    pub values: Vec<f64>,
}

const CONVEXITY_TOL: f64 = 1e-9;
const NEGATIVE_MASS_TOL: f64 = 1e-2;

impl ConvexProfile {
    pub fn from_fn(side: Side, lo: f64, hi: f64, nodes: usize, f: impl Fn(f64) -> f64) -> Self {
        let h = (hi - lo) / (nodes - 1) as f64;
        let values = (0..nodes).map(|i| f(lo + i as f64 * h)).collect();
        ConvexProfile { side, lo, hi, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.len() - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        grid_node(self.lo, self.hi, self.len(), i)
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.node(i)).collect()
    }

    fn validate(&self) -> Result<()> {
        if self.len() < 3 || !(self.hi > self.lo) {
            return Err(Error::validation("a profile needs at least three nodes on a non-empty interval"));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("profile values must be finite"));
        }
        Ok(())
    }

    /// Most negative second difference, relative to the value scale.
    pub fn convexity_defect(&self) -> f64 {
        let scale = 1.0 + self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        self.values
            .windows(3)
            .map(|w| (w[0] - 2.0 * w[1] + w[2]) / scale)
            .fold(0.0f64, f64::min)
    }

    pub fn check_convex(&self) -> Result<()> {
        self.validate()?;
        let d = self.convexity_defect();
        if d < -CONVEXITY_TOL {
            return Err(Error::validation(format!("profile is not convex: relative second difference {d:.3e}")));
        }
        Ok(())
    }

    /// Largest absolute first difference quotient.
    pub fn max_slope(&self) -> f64 {
        let h = self.spacing();
        self.values.windows(2).map(|w| ((w[1] - w[0]) / h).abs()).fold(0.0, f64::max)
    }

    /// Trapezoid rule over the grid.
    pub fn integral(&self) -> f64 {
        let v = &self.values;
        let inner: f64 = v[1..v.len() - 1].iter().sum();
        self.spacing() * (inner + 0.5 * (v[0] + v[v.len() - 1]))
    }
}

/// Whether the parabola through nodes `i-1, i, i+1` describes the function:
/// `i` is at least two nodes from either end and its curvature is positive
/// and within a factor 2 of both neighbours. A kink puts all curvature on one
/// node and fails the test.
fn smooth_at(c: &[f64], i: usize) -> bool {
    if i < 2 || i + 2 >= c.len() {
        return false;
    }
    let ci = c[i];
    let near = |cj: f64| cj >= 0.5 * ci && cj <= 2.0 * ci;
    ci > 0.0 && near(c[i - 1]) && near(c[i + 1])
}

/// Discrete Legendre transform onto `nodes` points of `[lo, hi]`.
///
/// For each output coordinate the maximiser over input nodes is found by a
/// monotone scan, then refined by the vertex of the local parabola where the
/// input is smooth. Inputs with kinks keep the exact discrete maximum.
pub fn legendre_onto(p: &ConvexProfile, lo: f64, hi: f64, nodes: usize) -> Result<ConvexProfile> {
    p.check_convex()?;
    if nodes < 3 || !(hi > lo) {
        return Err(Error::validation("target grid needs at least three nodes"));
    }
    let xs = p.nodes();
    let f = &p.values;
    let n = f.len();
    let mut curv = vec![f64::NAN; n];
    for k in 1..n - 1 {
        curv[k] = f[k - 1] - 2.0 * f[k] + f[k + 1];
    }
    let out_side = match p.side {
        Side::Primal => Side::Dual,
        Side::Dual => Side::Primal,
    };
    let mut out = ConvexProfile { side: out_side, lo, hi, values: Vec::with_capacity(nodes) };
    let mut i = 0usize;
    for j in 0..nodes {
        let s = grid_node(lo, hi, nodes, j);
        let g = |k: usize| xs[k] * s - f[k];
        while i + 1 < n && g(i + 1) >= g(i) {
            i += 1;
        }
        // Restart from the left is never needed: the maximiser is monotone in s.
        let mut best = g(i);
        if smooth_at(&curv, i) {
            let (gm, gp) = (g(i - 1), g(i + 1));
            let c = curv[i];
            let delta = (gp - gm) / (2.0 * c);
            if delta.abs() <= 0.5 {
                best += 0.25 * (gp - gm) * delta;
            }
        }
        out.values.push(best);
    }
    lower_envelope(&mut out);
    Ok(out)
}

/// Replaces values by the lower convex envelope of the sampled points.
///
/// Refinement switching on and off between neighbouring nodes leaves
/// node-level dents; the envelope removes them.
fn lower_envelope(p: &mut ConvexProfile) {
    let xs = p.nodes();
    let v = &p.values;
    let mut hull: Vec<usize> = Vec::with_capacity(v.len());
    for i in 0..v.len() {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            // Drop b when it lies on or above the chord from a to i.
            let cross = (xs[b] - xs[a]) * (v[i] - v[a]) - (v[b] - v[a]) * (xs[i] - xs[a]);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    let mut out = v.clone();
    for seg in hull.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        for (i, o) in out.iter_mut().enumerate().take(b).skip(a + 1) {
            let t = (xs[i] - xs[a]) / (xs[b] - xs[a]);
            *o = v[a] + t * (v[b] - v[a]);
        }
    }
    p.values = out;
}

// Symmetric formula keeps the middle node at exactly 0 on symmetric grids.
fn grid_node(lo: f64, hi: f64, nodes: usize, j: usize) -> f64 {
    let n = (nodes - 1) as f64;
    (lo * (n - j as f64) + hi * j as f64) / n
}

/// Legendre transform of a primal profile onto `P = [-V/2, V/2]`, or of a
/// dual profile onto the primal grid `[-x_max, x_max]`.
pub fn legendre(p: &ConvexProfile, half_width: f64, nodes: usize) -> Result<ConvexProfile> {
    legendre_onto(p, -half_width, half_width, nodes)
}

/// `φ_0(x) = V log(2 cosh(x/2))`.
pub fn phi0(v: f64, x: f64) -> f64 {
    let a = x.abs();
    v * (0.5 * a + (-a).exp().ln_1p())
}

/// Closed-form dual of [`phi0`]: with `s = 2y/V`,
/// `v_0(y) = (V/2)((1+s) log(1+s) + (1-s) log(1-s)) - V log 2`.
pub fn v0(v: f64, y: f64) -> f64 {
    let s = (2.0 * y / v).clamp(-1.0, 1.0);
    let xlx = |t: f64| if t > 0.0 { t * t.ln() } else { 0.0 };
    0.5 * v * (xlx(1.0 + s) + xlx(1.0 - s)) - v * std::f64::consts::LN_2
}

/// `φ_0''(x) / V = sech^2(x/2) / 4`.
fn phi0_density(x: f64) -> f64 {
    let c = (0.5 * x).cosh();
    0.25 / (c * c)
}

pub fn reference_potential(v: f64, x_max: f64, nodes: usize) -> Result<ConvexProfile> {
    if !(v > 0.0) {
        return Err(Error::validation("V must be positive"));
    }
    if !(x_max > 0.0) || nodes < 3 {
        return Err(Error::validation("grid needs x_max > 0 and at least three nodes"));
    }
    Ok(ConvexProfile::from_fn(Side::Primal, -x_max, x_max, nodes, |x| phi0(v, x)))
}

/// Reference measure of the entropy term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Reference {
    /// `e^{-φ_0} dx / Z_0` with `Z_0 = B(V/2, V/2)`.
    Weighted,
    /// `φ_0'' dx / V`, a probability measure.
    Smooth,
}

impl Reference {
    fn psi(self, v: f64, x: f64) -> f64 {
        match self {
            Reference::Weighted => phi0(v, x),
            Reference::Smooth => -phi0_density(x).ln(),
        }
    }

    fn log_z(self, v: f64) -> f64 {
        match self {
            Reference::Weighted => ln_beta(0.5 * v, 0.5 * v),
            Reference::Smooth => 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Functionals {
    pub l: f64,
    pub e: f64,
    pub d: f64,
    pub f_minus_gamma: f64,
    pub ding_gamma: f64,
    /// `∫ φ'' dx`, which should equal `V`.
    pub mass: f64,
}

/// `log ∫ exp(a(x)) dx` by the trapezoid rule with linear tails past the grid.
fn log_integral_exp(a: &[f64], h: f64) -> Result<f64> {
    let n = a.len();
    let m = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for (i, ai) in a.iter().enumerate() {
        let wgt = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        s += wgt * (ai - m).exp();
    }
    s *= h;
    let left = (a[1] - a[0]) / h;
    let right = (a[n - 1] - a[n - 2]) / h;
    if left <= 0.0 || right >= 0.0 {
        return Err(Error::domain("exponential integral diverges: integrand does not decay past the grid"));
    }
    s += (a[0] - m).exp() / left + (a[n - 1] - m).exp() / (-right);
    Ok(m + s.ln())
}

/// Functionals from a primal/dual pair on matching grids.
///
/// `phi` and `phi_ref` share the primal grid. Entropy terms are skipped
/// (returned as NaN) when `with_entropy` is false, e.g. for piecewise-linear
/// potentials whose measure has atoms.
pub fn functionals_pair(
    phi: &ConvexProfile,
    phi_ref: &ConvexProfile,
    dual: &ConvexProfile,
    gamma: f64,
    v: f64,
    reference: Reference,
    with_entropy: bool,
) -> Result<Functionals> {
    if !(gamma > 0.0) {
        return Err(Error::validation("gamma must be positive"));
    }
    if phi.len() != phi_ref.len() || phi.lo != phi_ref.lo || phi.hi != phi_ref.hi {
        return Err(Error::validation("potential and reference must share a grid"));
    }
    let h = phi.spacing();
    let xs = phi.nodes();
    let f = &phi.values;
    let n = f.len();
    let mut mass = 0.0;
    let mut energy_int = 0.0;
    let mut ent = 0.0;
    let mut psi_int = 0.0;
    let mut negative = 0.0;
    let mass_scale = v * h;
    for k in 1..n - 1 {
        // Node-level noise from the discrete transform shows up as paired
        // positive and negative masses; it cancels in the linear terms.
        let m = (f[k - 1] - 2.0 * f[k] + f[k + 1]) / h;
        mass += m;
        energy_int += phi_ref.values[k] * m;
        if m < 0.0 {
            negative -= m;
        }
        if with_entropy {
            psi_int += reference.psi(v, xs[k]) * m;
            if m > 0.0 {
                ent += m * (m / mass_scale).ln();
            }
        }
    }
    if negative > NEGATIVE_MASS_TOL * v {
        return Err(Error::validation(format!("potential is not convex: negative mass {negative:.3e}")));
    }
    let dv = &dual.values;
    let l = 0.5 * v * (dv[0] + dv[dv.len() - 1]) - dual.integral();
    let e = (-l + energy_int) / v;
    let d = if with_entropy { (ent + psi_int) / v + reference.log_z(v) } else { f64::NAN };
    let expo: Vec<f64> = f
        .iter()
        .zip(&phi_ref.values)
        .map(|(p, p0)| -(gamma * p + (1.0 - gamma) * p0))
        .collect();
    let ding = dual.integral() / v - log_integral_exp(&expo, h)? / gamma;
    Ok(Functionals { l, e, d, f_minus_gamma: -gamma * e + d, ding_gamma: ding, mass })
}

/// Grid used for rays: primal `[-x_max, x_max]`, dual `[-V/2, V/2]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RayGrid {
    pub x_max: f64,
    pub primal_nodes: usize,
    pub dual_nodes: usize,
}

impl Default for RayGrid {
    /// `X_max = 64` with spacing `1/128`, so `x = 0` and every integer `t` are nodes.
    fn default() -> Self {
        RayGrid { x_max: 64.0, primal_nodes: 16_385, dual_nodes: 4_097 }
    }
}

impl RayGrid {
    /// Same spacing as the default, wide enough for `t_max` (`X_max >= 4 t_max`).
    pub fn for_t_max(t_max: f64) -> Self {
        let x_max = (4.0 * t_max).max(64.0).ceil();
        RayGrid { x_max, primal_nodes: (x_max * 256.0) as usize + 1, dual_nodes: 4_097 }
    }
}

/// Functionals of a dual profile, with `φ = legendre(v)` on the primal grid.
pub fn functionals(dual: &ConvexProfile, gamma: f64, v: f64, grid: &RayGrid, reference: Reference) -> Result<Functionals> {
    if dual.side != Side::Dual {
        return Err(Error::validation("functionals take a dual profile"));
    }
    if (dual.hi - 0.5 * v).abs() > 1e-12 || (dual.lo + 0.5 * v).abs() > 1e-12 {
        return Err(Error::validation("dual profile must live on [-V/2, V/2]"));
    }
    let phi = legendre(dual, grid.x_max, grid.primal_nodes)?;
    let phi_ref = reference_potential(v, grid.x_max, grid.primal_nodes)?;
    functionals_pair(&phi, &phi_ref, dual, gamma, v, reference, true)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ray {
    /// `v_t = v_0 + t|y|`.
    AbsVal,
    /// `v_t = v_0 - t y`.
    Translation,
}

impl Ray {
    pub fn dual(self, v: f64, t: f64, nodes: usize) -> ConvexProfile {
        ConvexProfile::from_fn(Side::Dual, -0.5 * v, 0.5 * v, nodes, |y| match self {
            Ray::AbsVal => v0(v, y) + t * y.abs(),
            Ray::Translation => v0(v, y) - t * y,
        })
    }

    /// Closed-form primal potential: `φ_0(max(|x|-t, 0))` and `φ_0(x+t)`.
    pub fn primal_exact(self, v: f64, t: f64, x: f64) -> f64 {
        match self {
            Ray::AbsVal => phi0(v, (x.abs() - t).max(0.0)),
            Ray::Translation => phi0(v, x + t),
        }
    }

    /// Reference measure under which the slopes below hold.
    pub fn reference(self) -> Reference {
        match self {
            Ray::AbsVal => Reference::Weighted,
            Ray::Translation => Reference::Smooth,
        }
    }

    /// Asymptotic slopes of `E`, `D`, `F_{-γ}` and `Ding_γ` in `t`.
    pub fn theory(self, gamma: f64, v: f64) -> Slopes {
        match self {
            Ray::AbsVal => Slopes {
                e: Some(v / 4.0),
                d: Some(v / 2.0),
                f: v * (0.5 - 0.25 * gamma),
                ding: 0.25 * v - (0.5 * (gamma - 1.0) * v).max(0.0) / gamma,
            },
            Ray::Translation => Slopes {
                e: Some(v / 2.0),
                d: Some(1.0),
                f: 1.0 - gamma * v / 2.0,
                ding: 0.5 * v * gamma.min(1.0 - gamma) / gamma,
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Slopes {
    pub e: Option<f64>,
    pub d: Option<f64>,
    pub f: f64,
    pub ding: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RaySample {
    pub t: f64,
    pub e: f64,
    pub d: f64,
    pub f: f64,
    pub ding: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RayReport {
    pub gamma: f64,
    pub v: f64,
    /// `(t, value)` of the headline functional: `F_{-γ}` for rays, `Ding_γ` for the Ding ray.
    pub t_samples: Vec<(f64, f64)>,
    pub fitted_slope: f64,
    pub theory_slope: f64,
    pub samples: Vec<RaySample>,
    pub fitted: Slopes,
    pub theory: Slopes,
}

/// Least-squares slope over the largest-`t` half of the samples.
pub fn fit_slope(ts: &[f64], ys: &[f64]) -> f64 {
    let n = ts.len();
    let start = n / 2;
    let (t, y) = (&ts[start..], &ys[start..]);
    let k = t.len() as f64;
    let mt = t.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxy: f64 = t.iter().zip(y).map(|(a, b)| (a - mt) * (b - my)).sum();
    let sxx: f64 = t.iter().map(|a| (a - mt) * (a - mt)).sum();
    sxy / sxx
}

fn check_ts(ts: &[f64]) -> Result<()> {
    if ts.len() < 4 {
        return Err(Error::validation("need at least four t values"));
    }
    if ts.windows(2).any(|w| !(w[1] > w[0])) || ts[0] < 0.0 {
        return Err(Error::validation("t values must be non-negative and increasing"));
    }
    Ok(())
}

/// Functionals along one of the two rays at every `t`, with fitted slopes.
pub fn ray_slopes(ray: Ray, gamma: f64, v: f64, ts: &[f64], grid: &RayGrid) -> Result<RayReport> {
    check_ts(ts)?;
    if !(v > 0.0 && v <= 2.0) {
        return Err(Error::validation("V must lie in (0, 2]"));
    }
    let t_max = ts[ts.len() - 1];
    if grid.x_max < 4.0 * t_max {
        return Err(Error::validation(format!(
            "grid half-width {} is below 4·t_max = {}",
            grid.x_max,
            4.0 * t_max
        )));
    }
    let phi_ref = reference_potential(v, grid.x_max, grid.primal_nodes)?;
    let mut samples = Vec::with_capacity(ts.len());
    for &t in ts {
        let dual = ray.dual(v, t, grid.dual_nodes);
        let phi = legendre(&dual, grid.x_max, grid.primal_nodes)?;
        let fx = functionals_pair(&phi, &phi_ref, &dual, gamma, v, ray.reference(), true)?;
        samples.push(RaySample { t, e: fx.e, d: fx.d, f: fx.f_minus_gamma, ding: fx.ding_gamma });
    }
    let col = |g: fn(&RaySample) -> f64| samples.iter().map(g).collect::<Vec<_>>();
    let fitted = Slopes {
        e: Some(fit_slope(ts, &col(|s| s.e))),
        d: Some(fit_slope(ts, &col(|s| s.d))),
        f: fit_slope(ts, &col(|s| s.f)),
        ding: fit_slope(ts, &col(|s| s.ding)),
    };
    let theory = ray.theory(gamma, v);
    Ok(RayReport {
        gamma,
        v,
        t_samples: samples.iter().map(|s| (s.t, s.f)).collect(),
        fitted_slope: fitted.f,
        theory_slope: theory.f,
        samples,
        fitted,
        theory,
    })
}

/// Twisted Ding functional along `φ_t = (V/2) max(0, |x| - t)` with
/// `φ_0 = (V/2)|x|`, so that `v_0 = 0` and `v_t = t|y|`.
///
/// For `γ >= 1` the slope is `(V/2)(1/2 - (γ-1)/γ)`, which is `1/2 - (γ-1)/γ`
/// at `V = 2`; for `γ < 1` it is `V/4`.
pub fn ding_ray(gamma: f64, v: f64, ts: &[f64], grid: &RayGrid) -> Result<RayReport> {
    check_ts(ts)?;
    if !(gamma > 0.0) {
        return Err(Error::validation("gamma must be positive"));
    }
    if !(v > 0.0 && v <= 2.0) {
        return Err(Error::validation("V must lie in (0, 2]"));
    }
    let t_max = ts[ts.len() - 1];
    if grid.x_max < 4.0 * t_max {
        return Err(Error::validation("grid too small for the largest t"));
    }
    let half = 0.5 * v;
    let phi_ref = ConvexProfile::from_fn(Side::Primal, -grid.x_max, grid.x_max, grid.primal_nodes, |x| half * x.abs());
    let mut samples = Vec::with_capacity(ts.len());
    for &t in ts {
        let dual = ConvexProfile::from_fn(Side::Dual, -half, half, grid.dual_nodes, |y| t * y.abs());
        let phi = legendre(&dual, grid.x_max, grid.primal_nodes)?;
        let fx = functionals_pair(&phi, &phi_ref, &dual, gamma, v, Reference::Weighted, false)?;
        samples.push(RaySample { t, e: fx.e, d: f64::NAN, f: f64::NAN, ding: fx.ding_gamma });
    }
    let dings: Vec<f64> = samples.iter().map(|s| s.ding).collect();
    let slope = fit_slope(ts, &dings);
    let theory = half * (0.5 - (gamma - 1.0).max(0.0) / gamma);
    Ok(RayReport {
        gamma,
        v,
        t_samples: ts.iter().copied().zip(dings).collect(),
        fitted_slope: slope,
        theory_slope: theory,
        samples,
        fitted: Slopes { e: None, d: None, f: f64::NAN, ding: slope },
        theory: Slopes { e: None, d: None, f: f64::NAN, ding: theory },
    })
}

/// Closed form of the Ding ray at `V = 2`:
/// `t/2 - (1/γ) log(2(e^{(γ-1)t} - 1)/(γ-1) + 2e^{(γ-1)t})`.
pub fn ding_ray_exact(gamma: f64, t: f64) -> f64 {
    let a = gamma - 1.0;
    let inner = if a.abs() < 1e-12 { 2.0 * t } else { 2.0 * (a * t).exp_m1() / a };
    0.5 * t - (inner + 2.0 * (a * t).exp()).ln() / gamma
}

/// Bisection for a sign change of `f` on `[lo, hi]`, to width `tol`.
pub fn bisect_sign_change(mut f: impl FnMut(f64) -> Result<f64>, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut flo = f(lo)?;
    let fhi = f(hi)?;
    if flo.signum() == fhi.signum() {
        return Err(Error::convergence(format!("no sign change on [{lo}, {hi}]")));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
