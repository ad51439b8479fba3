//! Log Fano curves `(P^1, Δ)` and their K-stability classification.
//!
//! A curve is a list of distinct points with weights in `(0,1)` and positive
//! volume `V = 2 - Σ w`. Everything here is exact rational arithmetic, so the
//! boundary cases of the classification are decided without rounding.
//!
//! The K-semistability test is `1 - w_l >= V/2` for every support point, which
//! is the same as `w_l <= Σ_{j≠l} w_j`. The symmetry group depends only on the
//! number `m` of support points.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rational::{fmt_q, qi, qvec, Q};

/// Label of a support point on `P^1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PointLabel {
    Zero,
    One,
    Infinity,
    Generic(u32),
}

impl PointLabel {
    /// Default label for the `i`-th point when none is given. The first two
    /// land on the torus-fixed points `0` and `∞`.
    pub fn default_for(i: usize) -> Self {
        match i {
            0 => PointLabel::Zero,
            1 => PointLabel::Infinity,
            2 => PointLabel::One,
            n => PointLabel::Generic(n as u32),
        }
    }
}

impl fmt::Display for PointLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointLabel::Zero => write!(f, "0"),
            PointLabel::One => write!(f, "1"),
            PointLabel::Infinity => write!(f, "inf"),
            PointLabel::Generic(i) => write!(f, "p{i}"),
        }
    }
}

impl FromStr for PointLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "0" | "zero" | "Zero" => Ok(PointLabel::Zero),
            "1" | "one" | "One" => Ok(PointLabel::One),
            "inf" | "infinity" | "Infinity" => Ok(PointLabel::Infinity),
            t => t
                .strip_prefix('p')
                .and_then(|n| n.parse().ok())
                .map(PointLabel::Generic)
                .ok_or_else(|| Error::validation(format!("unknown point label {t:?}"))),
        }
    }
}

impl Serialize for PointLabel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PointLabel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The pair `(P^1, Δ)` with `Δ = Σ w_l p_l`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LogFanoCurve {
    support: Vec<PointLabel>,
    #[serde(with = "qvec")]
    weights: Vec<Q>,
    #[serde(skip)]
    volume: Q,
}

#[derive(Deserialize)]
struct CurveRecord {
    #[serde(default)]
    support: Option<Vec<PointLabel>>,
    #[serde(with = "qvec")]
    weights: Vec<Q>,
}

impl<'de> Deserialize<'de> for LogFanoCurve {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rec = CurveRecord::deserialize(d)?;
        let res = match rec.support {
            Some(s) => LogFanoCurve::new(s, rec.weights),
            None => LogFanoCurve::from_weights(rec.weights),
        };
        res.map_err(serde::de::Error::custom)
    }
}

impl LogFanoCurve {
    pub fn new(support: Vec<PointLabel>, weights: Vec<Q>) -> Result<Self> {
        if support.len() != weights.len() {
            return Err(Error::validation(format!(
                "support has {} points but {} weights were given",
                support.len(),
                weights.len()
            )));
        }
        let mut seen = HashSet::new();
        for p in &support {
            if !seen.insert(*p) {
                return Err(Error::validation(format!("support point {p} repeated")));
            }
        }
        for w in &weights {
            if *w <= Q::zero() || *w >= Q::one() {
                return Err(Error::validation(format!(
                    "weight {} not in the open interval (0,1)",
                    fmt_q(w)
                )));
            }
        }
        let volume = qi(2) - weights.iter().sum::<Q>();
        if volume <= Q::zero() {
            return Err(Error::validation(format!(
                "volume V = {} is not positive",
                fmt_q(&volume)
            )));
        }
        Ok(LogFanoCurve { support, weights, volume })
    }

    /// Curve with default labels `0, ∞, 1, p3, ...`.
    pub fn from_weights(weights: Vec<Q>) -> Result<Self> {
        let support = (0..weights.len()).map(PointLabel::default_for).collect();
        Self::new(support, weights)
    }

    /// `Δ = 0`.
    pub fn trivial() -> Self {
        Self::from_weights(Vec::new()).expect("empty divisor is valid")
    }

    /// `Δ_w = w·0 + w·∞`.
    pub fn two_point(w: Q) -> Result<Self> {
        Self::from_weights(vec![w, w])
    }

    pub fn support(&self) -> &[PointLabel] {
        &self.support
    }

    pub fn weights(&self) -> &[Q] {
        &self.weights
    }

    /// `V = 2 - Σ w`.
    pub fn volume(&self) -> Q {
        self.volume
    }

    /// Number of support points `m`.
    pub fn m(&self) -> usize {
        self.weights.len()
    }

    /// True for `Δ = Δ_w`, two points with equal weights.
    pub fn is_two_equal(&self) -> bool {
        self.m() == 2 && self.weights[0] == self.weights[1]
    }

    pub fn aut_group(&self) -> AutGroup {
        match self.m() {
            0 => AutGroup::PGL2,
            1 => AutGroup::Borel,
            2 => AutGroup::CStar,
            _ => AutGroup::Trivial,
        }
    }

    /// Moment interval of the torus action for `m <= 2`, with the support
    /// placed at `0` and `∞`. Its length is `V`.
    pub fn moment_polytope(&self) -> Option<(Q, Q)> {
        if self.m() > 2 {
            return None;
        }
        let w0 = self.weights.first().copied().unwrap_or_else(Q::zero);
        let w1 = self.weights.get(1).copied().unwrap_or_else(Q::zero);
        Some((-(Q::one() - w0), Q::one() - w1))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AutGroup {
    PGL2,
    Borel,
    CStar,
    Trivial,
}

impl AutGroup {
    pub fn is_reductive(self) -> bool {
        !matches!(self, AutGroup::Borel)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum KClass {
    KUnstable,
    KSemistableOnly,
    KPolystableNontrivialAut,
    KStable,
}

impl KClass {
    pub fn is_semistable(self) -> bool {
        self != KClass::KUnstable
    }

    pub fn is_polystable(self) -> bool {
        matches!(self, KClass::KPolystableNontrivialAut | KClass::KStable)
    }

    pub fn is_stable(self) -> bool {
        self == KClass::KStable
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurveClassification {
    pub aut_group: AutGroup,
    pub reductive: bool,
    pub futaki_vanishes: bool,
    pub k_class: KClass,
}

/// Symmetry group, Futaki vanishing and K-stability class.
///
/// For `m >= 3` the automorphism group is trivial and the Futaki character
/// vanishes vacuously. For `m <= 2` it vanishes iff the moment interval is
/// symmetric, i.e. `Δ = 0` or two equal weights.
pub fn classify(curve: &LogFanoCurve) -> CurveClassification {
    let aut_group = curve.aut_group();
    let half_v = curve.volume() / qi(2);
    let margins: Vec<Q> = curve.weights().iter().map(|w| Q::one() - w - half_v).collect();
    let semistable = margins.iter().all(|d| *d >= Q::zero());
    let strict = margins.iter().all(|d| *d > Q::zero());
    let futaki_vanishes = match curve.moment_polytope() {
        Some((a, b)) => a + b == Q::zero(),
        None => true,
    };
    let k_class = match aut_group {
        AutGroup::PGL2 => KClass::KPolystableNontrivialAut,
        AutGroup::Borel => KClass::KUnstable,
        AutGroup::CStar => {
            if curve.is_two_equal() {
                KClass::KPolystableNontrivialAut
            } else {
                KClass::KUnstable
            }
        }
        AutGroup::Trivial => {
            if strict {
                KClass::KStable
            } else if semistable {
                KClass::KSemistableOnly
            } else {
                KClass::KUnstable
            }
        }
    };
    debug_assert!(aut_group == AutGroup::Trivial || semistable == k_class.is_semistable());
    CurveClassification {
        aut_group,
        reductive: aut_group.is_reductive(),
        futaki_vanishes,
        k_class,
    }
}

/// `(1/(k N_k)) Σ_{p ∈ kP ∩ Z} p` for `P = [a, b]`.
pub fn quantized_barycenter(a: Q, b: Q, k: Q) -> Result<Q> {
    if k <= Q::zero() {
        return Err(Error::validation("level k must be positive"));
    }
    if a > b {
        return Err(Error::validation("interval endpoints out of order"));
    }
    let (ka, kb) = (k * a, k * b);
    if !ka.is_integer() || !kb.is_integer() {
        return Err(Error::validation(format!(
            "k·a = {} and k·b = {} must both be integers",
            fmt_q(&ka),
            fmt_q(&kb)
        )));
    }
    let (lo, hi) = (ka.to_integer(), kb.to_integer());
    let mut sum = 0i128;
    let mut count = 0i128;
    for p in lo..=hi {
        sum += p;
        count += 1;
    }
    Ok(Q::new(sum, count) / k)
}

/// Random valid curve with `m` points and weight denominators at most `max_den`.
///
/// Weights are drawn until the volume is positive; the support uses default labels.
pub fn random_curve<R: Rng + ?Sized>(rng: &mut R, m: usize, max_den: i128) -> LogFanoCurve {
    loop {
        let ws: Vec<Q> = (0..m)
            .map(|_| {
                let d = rng.random_range(2..=max_den);
                Q::new(rng.random_range(1..d), d)
            })
            .collect();
        if let Ok(c) = LogFanoCurve::from_weights(ws) {
            return c;
        }
    }
}
