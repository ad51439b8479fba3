//! Microscopic stability thresholds of log Fano curves.
//!
//! Two independent routes are provided. The closed forms evaluate the known
//! minima directly. The oracle enumerates the two families of
//! Fulton–MacPherson valuations (diagonals, and diagonals pinned to a support
//! point) and minimises log discrepancy over divisor multiplicity. The level
//! is `k = (N-1)/V`, used as an exact rational for every `N >= 2`.
//!
//! On the GIT semistable locus the `PGL_2` case keeps diagonals of codimension
//! at most `⌊N/2⌋-1`. In the `C*` case the fixed points are `0` and `∞`, so a
//! generic diagonal is always semistable and only the pinned family is capped,
//! at codimension `⌊N/2⌋`.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::curve::{classify, AutGroup, LogFanoCurve};
use crate::error::{Error, Result};
use crate::rational::{floor_half, fmt_q, qi, qstr, ExtRational, Q};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    /// `x_{i_1} = ... = x_{i_{c+1}}` away from the support.
    Diagonal,
    /// `c` coordinates equal to the support point `p_l`.
    Marked,
}

/// One valuation: a family, a codimension and, for `Marked`, a support index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ValuationCandidate {
    pub family: Family,
    pub codim: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point_index: Option<usize>,
}

impl ValuationCandidate {
    pub fn diagonal(codim: u64) -> Self {
        ValuationCandidate { family: Family::Diagonal, codim, point_index: None }
    }

    pub fn marked(codim: u64, l: usize) -> Self {
        ValuationCandidate { family: Family::Marked, codim, point_index: Some(l) }
    }

    fn check(&self, curve: &LogFanoCurve, n: u64) -> Result<()> {
        match self.family {
            Family::Diagonal if (1..n).contains(&self.codim) && self.point_index.is_none() => Ok(()),
            Family::Marked
                if (2..=n).contains(&self.codim)
                    && self.point_index.is_some_and(|l| l < curve.m()) =>
            {
                Ok(())
            }
            _ => Err(Error::validation(format!("candidate {self:?} is not valid for N = {n}"))),
        }
    }

    /// Log discrepancy `A(v_W)` of the pair `(X^N, Δ_N)`.
    pub fn log_discrepancy(&self, curve: &LogFanoCurve) -> Q {
        let c = qi(self.codim as i128);
        match self.family {
            Family::Diagonal => c,
            Family::Marked => c * (Q::one() - curve.weights()[self.point_index.unwrap()]),
        }
    }

    /// Multiplicity `v_W(D^(N))` of the incidence divisor at level `k`.
    pub fn multiplicity(&self, k: Q) -> Q {
        let c = self.codim as i128;
        let pairs = match self.family {
            Family::Diagonal => c * (c + 1) / 2,
            Family::Marked => c * (c - 1) / 2,
        };
        qi(pairs) / k
    }

    /// `A(v_W) / v_W(D^(N))`.
    pub fn ratio(&self, curve: &LogFanoCurve, n: u64) -> Result<Q> {
        self.check(curve, n)?;
        Ok(self.log_discrepancy(curve) / self.multiplicity(level(curve, n)))
    }
}

/// Level `k = (N-1)/V`.
pub fn level(curve: &LogFanoCurve, n: u64) -> Q {
    qi(n as i128 - 1) / curve.volume()
}

fn check_n(n: u64) -> Result<()> {
    if n < 2 {
        Err(Error::validation(format!("N must be at least 2, got {n}")))
    } else {
        Ok(())
    }
}

fn check_reductive(curve: &LogFanoCurve) -> Result<AutGroup> {
    let g = curve.aut_group();
    if !g.is_reductive() {
        return Err(Error::validation(
            "a single weighted point has a non-reductive automorphism group; reduced thresholds are undefined",
        ));
    }
    Ok(g)
}

/// `γ^(N) = min{2(1-1/N)/V, min_l 2(1-w_l)/V}`.
pub fn gamma_n(curve: &LogFanoCurve, n: u64) -> Result<Q> {
    check_n(n)?;
    let v = curve.volume();
    let diag = qi(2) * (Q::one() - Q::new(1, n as i128)) / v;
    Ok(curve
        .weights()
        .iter()
        .map(|w| qi(2) * (Q::one() - w) / v)
        .fold(diag, |a, b| a.min(b)))
}

/// Threshold restricted to the GIT semistable locus.
///
/// `Δ = 0`: `∞` for `N <= 3`, else `(N-1)/⌊N/2⌋`.
/// Two points: `min{2(1-1/N)/V, min_l 2(N-1)(1-w_l)/(V(⌊N/2⌋-1))}`, the second
/// term present only for `N >= 4`; for `Δ_w` it equals `(N-1)/(⌊N/2⌋-1)`.
/// Trivial group: equal to [`gamma_n`].
pub fn gamma_n_reduced(curve: &LogFanoCurve, n: u64) -> Result<ExtRational> {
    check_n(n)?;
    let group = check_reductive(curve)?;
    let half = floor_half(n);
    let v = curve.volume();
    Ok(match group {
        AutGroup::Trivial => gamma_n(curve, n)?.into(),
        AutGroup::PGL2 => {
            if n <= 3 {
                ExtRational::Infinity
            } else {
                ExtRational::Finite(Q::new(n as i128 - 1, half))
            }
        }
        AutGroup::CStar => {
            let diag = qi(2) * (Q::one() - Q::new(1, n as i128)) / v;
            let mut best = diag;
            if half >= 2 {
                for w in curve.weights() {
                    let t = qi(2 * (n as i128 - 1)) * (Q::one() - w) / (v * qi(half - 1));
                    best = best.min(t);
                }
            }
            ExtRational::Finite(best)
        }
        AutGroup::Borel => unreachable!(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub n: u64,
    pub restricted: bool,
    /// Minimum over every candidate.
    pub gamma_n: ExtRational,
    /// Minimum over semistable candidates, when requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_n_reduced: Option<ExtRational>,
    /// Candidate attaining [`ThresholdReport::value`].
    pub witness: Option<ValuationCandidate>,
}

impl ThresholdReport {
    /// The threshold that was asked for.
    pub fn value(&self) -> ExtRational {
        self.gamma_n_reduced.unwrap_or(self.gamma_n)
    }
}

/// Candidate caps `(diagonal max codim, marked max codim)`.
fn caps(group: AutGroup, n: u64, restrict: bool) -> (u64, u64) {
    if !restrict {
        return (n - 1, n);
    }
    let half = n / 2;
    match group {
        AutGroup::PGL2 => (half.saturating_sub(1), 0),
        AutGroup::CStar => (n - 1, half),
        _ => (n - 1, n),
    }
}

/// Ratio as an unreduced fraction `num/den` with `den > 0`, for fast comparison.
fn raw_ratio(cand: &ValuationCandidate, curve: &LogFanoCurve, n: u64) -> (i128, i128) {
    // ratio = 2k(1-w)/(c-1) or 2k/(c+1), k = (N-1)/V.
    let v = curve.volume();
    let c = cand.codim as i128;
    let nm1 = n as i128 - 1;
    match cand.family {
        Family::Diagonal => (2 * nm1 * v.denom(), v.numer() * (c + 1)),
        Family::Marked => {
            let w = curve.weights()[cand.point_index.unwrap()];
            let a = w.denom() - w.numer();
            (2 * nm1 * a * v.denom(), v.numer() * w.denom() * (c - 1))
        }
    }
}

fn less(a: (i128, i128), b: (i128, i128)) -> bool {
    a.0 * b.1 < b.0 * a.1
}

fn minimise(curve: &LogFanoCurve, n: u64, diag_cap: u64, marked_cap: u64) -> (ExtRational, Option<ValuationCandidate>) {
    let mut best: Option<((i128, i128), ValuationCandidate)> = None;
    let mut consider = |cand: ValuationCandidate| {
        let r = raw_ratio(&cand, curve, n);
        if best.as_ref().is_none_or(|(b, _)| less(r, *b)) {
            best = Some((r, cand));
        }
    };
    // Diagonals first so that ties keep the diagonal witness.
    for c in 1..=diag_cap {
        consider(ValuationCandidate::diagonal(c));
    }
    for l in 0..curve.m() {
        for c in 2..=marked_cap {
            consider(ValuationCandidate::marked(c, l));
        }
    }
    match best {
        Some(((num, den), cand)) => (ExtRational::Finite(Q::new(num, den)), Some(cand)),
        None => (ExtRational::Infinity, None),
    }
}

/// Threshold by exhaustive enumeration of the valuation families.
pub fn lct_oracle(curve: &LogFanoCurve, n: u64, restrict_semistable: bool) -> Result<ThresholdReport> {
    check_n(n)?;
    let group = curve.aut_group();
    if restrict_semistable {
        check_reductive(curve)?;
    }
    let (dc, mc) = caps(group, n, false);
    let (full, full_w) = minimise(curve, n, dc, mc);
    if !restrict_semistable {
        return Ok(ThresholdReport { n, restricted: false, gamma_n: full, gamma_n_reduced: None, witness: full_w });
    }
    let (dc, mc) = caps(group, n, true);
    let (red, red_w) = minimise(curve, n, dc, mc);
    Ok(ThresholdReport { n, restricted: true, gamma_n: full, gamma_n_reduced: Some(red), witness: red_w })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AsymptoticThresholds {
    /// `lim γ^(N) = min{2/V, min_l 2(1-w_l)/V}`.
    #[serde(with = "qstr")]
    pub gamma_limit: Q,
    pub gamma_limit_reduced: ExtRational,
    /// Reduced analytic threshold, known for `Δ = 0` and `Δ_w`.
    pub delta_a_reduced: Option<ExtRational>,
    /// Alpha invariant restricted to the vanishing-moment locus.
    pub alpha_restricted: Option<ExtRational>,
}

pub fn asymptotic_thresholds(curve: &LogFanoCurve) -> Result<AsymptoticThresholds> {
    let group = check_reductive(curve)?;
    let v = curve.volume();
    let gamma_limit = curve
        .weights()
        .iter()
        .map(|w| qi(2) * (Q::one() - w) / v)
        .fold(qi(2) / v, |a, b| a.min(b));
    let gamma_limit_reduced = match group {
        AutGroup::PGL2 => qi(2),
        AutGroup::CStar => curve
            .weights()
            .iter()
            .map(|w| qi(4) * (Q::one() - w) / v)
            .fold(qi(2) / v, |a, b| a.min(b)),
        _ => gamma_limit,
    };
    let delta = match group {
        AutGroup::PGL2 => Some(qi(2)),
        AutGroup::CStar if curve.is_two_equal() => {
            let w = curve.weights()[0];
            Some((Q::one() / (Q::one() - w)).min(qi(2)))
        }
        _ => None,
    };
    Ok(AsymptoticThresholds {
        gamma_limit,
        gamma_limit_reduced: gamma_limit_reduced.into(),
        delta_a_reduced: delta.map(ExtRational::Finite),
        alpha_restricted: delta.map(|d| ExtRational::Finite(d / qi(2))),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GibbsClass {
    /// `lim γ^(N) >= 1`.
    pub semistable: bool,
    /// `γ^(N) > 1` for all large `N`.
    pub stable: bool,
    /// `lim γ^(N) > 1`.
    pub uniformly_stable: bool,
    /// Semistable and `γ^(N),G > 1` for all large `N`; `None` when the group is not reductive.
    pub polystable: Option<bool>,
    /// Semistable and `lim inf γ^(N),G > 1`; `None` when the group is not reductive.
    pub uniformly_polystable: Option<bool>,
    /// Smallest `N0` with `γ^(N) > 1` for every `N >= N0`.
    pub stable_from_level: Option<u64>,
}

/// Gibbs (poly)stability predicates from the thresholds.
pub fn gibbs_classify(curve: &LogFanoCurve) -> GibbsClass {
    let v = curve.volume();
    let one = Q::one();
    let point_min = curve.weights().iter().map(|w| qi(2) * (one - w) / v).min();
    let gamma_limit = point_min.map_or(qi(2) / v, |p| p.min(qi(2) / v));
    let semistable = gamma_limit >= one;
    let uniformly_stable = gamma_limit > one;

    // γ^(N) is non-decreasing in N: the diagonal term rises to 2/V, the point
    // terms are constant. It exceeds 1 eventually iff both limits do.
    let sum_w: Q = curve.weights().iter().sum();
    let stable_from_level = if point_min.is_none_or(|p| p > one) && sum_w > Q::zero() {
        // 2(1-1/N)/V > 1  <=>  N > 2/Σw.
        let bound = (qi(2) / sum_w).floor().to_integer() + 1;
        Some(bound.max(2) as u64)
    } else {
        None
    };
    let stable = stable_from_level.is_some();

    let (polystable, uniformly_polystable) = match curve.aut_group() {
        AutGroup::Borel => (None, None),
        AutGroup::Trivial => (Some(semistable && stable), Some(semistable && uniformly_stable)),
        AutGroup::PGL2 => (Some(semistable), Some(semistable)),
        AutGroup::CStar => {
            // Diagonal term rises to 2/V; pinned terms exceed their limit
            // 4(1-w_l)/V for every N >= 4, so they are eventually > 1 iff the
            // limit is >= 1.
            let diag_ok = qi(2) / v > one;
            let marked_lim = curve.weights().iter().map(|w| qi(4) * (one - w) / v).min().unwrap();
            let eventually = diag_ok && marked_lim >= one;
            let lim = marked_lim.min(qi(2) / v);
            (Some(semistable && eventually), Some(semistable && lim > one))
        }
    };
    GibbsClass { semistable, stable, uniformly_stable, polystable, uniformly_polystable, stable_from_level }
}

/// Checks the Gibbs/K equivalences on one curve; returns a description of the first mismatch.
pub fn gibbs_k_mismatch(curve: &LogFanoCurve) -> Option<String> {
    let k = classify(curve).k_class;
    let g = gibbs_classify(curve);
    let mut errs = Vec::new();
    if g.semistable != k.is_semistable() {
        errs.push("semistable");
    }
    if g.stable != k.is_stable() {
        errs.push("stable");
    }
    if g.uniformly_stable != k.is_stable() {
        errs.push("uniformly stable");
    }
    if let Some(p) = g.polystable {
        if p != k.is_polystable() {
            errs.push("polystable");
        }
    }
    if let Some(p) = g.uniformly_polystable {
        if p != k.is_polystable() {
            errs.push("uniformly polystable");
        }
    }
    if errs.is_empty() {
        None
    } else {
        let ws: Vec<String> = curve.weights().iter().map(fmt_q).collect();
        Some(format!("w = [{}]: {} disagree with {:?}", ws.join(", "), errs.join(", "), k))
    }
}
