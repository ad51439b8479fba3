//! GIT semistability of point configurations on `P^1` and hypersimplex vertices.

use std::collections::HashMap;

use num_traits::{One, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rational::{qi, Q};

/// A point of `P^1`: a complex number or `∞`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum P1Point {
    Finite { re: f64, im: f64 },
    Infinity,
}

impl P1Point {
    pub fn real(x: f64) -> Self {
        P1Point::Finite { re: x, im: 0.0 }
    }

    fn key(&self) -> Option<(u64, u64)> {
        match *self {
            // +0.0 normalises -0.0 so both zeros collide.
            P1Point::Finite { re, im } => Some(((re + 0.0).to_bits(), (im + 0.0).to_bits())),
            P1Point::Infinity => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(*self, P1Point::Finite { re, im } if re == 0.0 && im == 0.0)
    }
}

impl Serialize for P1Point {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            P1Point::Infinity => s.serialize_str("inf"),
            P1Point::Finite { re, im: 0.0 } => s.serialize_f64(re),
            P1Point::Finite { re, im } => [re, im].serialize(s),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PointRepr {
    Real(f64),
    Pair([f64; 2]),
    Text(String),
}

impl<'de> Deserialize<'de> for P1Point {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match PointRepr::deserialize(d)? {
            PointRepr::Real(x) => Ok(P1Point::real(x)),
            PointRepr::Pair([re, im]) => Ok(P1Point::Finite { re, im }),
            PointRepr::Text(t) => match t.trim() {
                "inf" | "infinity" | "Infinity" | "∞" => Ok(P1Point::Infinity),
                other => other
                    .parse::<f64>()
                    .map(P1Point::real)
                    .map_err(|_| serde::de::Error::custom(format!("bad point {other:?}"))),
            },
        }
    }
}

/// `N` points of `P^1`, repeats allowed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct P1Config {
    pub points: Vec<P1Point>,
}

impl P1Config {
    pub fn new(points: Vec<P1Point>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::validation("a configuration needs at least two points"));
        }
        for p in &points {
            if let P1Point::Finite { re, im } = p {
                if !re.is_finite() || !im.is_finite() {
                    return Err(Error::validation("point coordinates must be finite"));
                }
            }
        }
        Ok(P1Config { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Multiplicity of each distinct point.
    pub fn multiplicities(&self) -> Vec<usize> {
        let mut finite: HashMap<(u64, u64), usize> = HashMap::new();
        let mut inf = 0;
        for p in &self.points {
            match p.key() {
                Some(k) => *finite.entry(k).or_default() += 1,
                None => inf += 1,
            }
        }
        let mut m: Vec<usize> = finite.into_values().collect();
        if inf > 0 {
            m.push(inf);
        }
        m
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymmetryGroup {
    /// Full Möbius group.
    Pgl2,
    /// Torus with fixed points `0` and `∞`.
    Cstar,
}

/// Semistability: at most `N/2` points may coincide (`PGL_2`), or sit on
/// either fixed point (`C*`). The closed bound `≤ N/2` is used.
pub fn is_semistable(config: &P1Config, group: SymmetryGroup) -> bool {
    let n = config.len();
    let ok = |m: usize| 2 * m <= n;
    match group {
        SymmetryGroup::Pgl2 => config.multiplicities().into_iter().all(ok),
        SymmetryGroup::Cstar => {
            let zeros = config.points.iter().filter(|p| p.is_zero()).count();
            let infs = config.points.iter().filter(|p| **p == P1Point::Infinity).count();
            ok(zeros) && ok(infs)
        }
    }
}

fn check_odd(n: usize, max: usize) -> Result<()> {
    if n < 3 || n.is_multiple_of(2) || n > max {
        return Err(Error::validation(format!("N must be odd with 3 <= N <= {max}, got {n}")));
    }
    Ok(())
}

/// Basic feasible solutions of `{t ∈ [0,1]^N : Σ t = N/2}`: pin `N-1`
/// coordinates to `0` or `1`, solve the equality for the last, keep the
/// feasible ones.
pub fn hypersimplex_vertices(n: usize) -> Result<Vec<Vec<Q>>> {
    check_odd(n, 9)?;
    vertices_unchecked(n)
}

fn vertices_unchecked(n: usize) -> Result<Vec<Vec<Q>>> {
    let target = Q::new(n as i128, 2);
    let mut out = Vec::new();
    for free in 0..n {
        for mask in 0u32..(1 << (n - 1)) {
            let mut t = vec![Q::zero(); n];
            let mut bit = 0;
            for (i, ti) in t.iter_mut().enumerate() {
                if i == free {
                    continue;
                }
                if mask >> bit & 1 == 1 {
                    *ti = Q::one();
                }
                bit += 1;
            }
            let rest = target - t.iter().sum::<Q>();
            if rest >= Q::zero() && rest <= Q::one() {
                t[free] = rest;
                if !out.contains(&t) {
                    out.push(t);
                }
            }
        }
    }
    for v in &out {
        if !has_vertex_structure(v) {
            return Err(Error::domain("enumerated vertex with unexpected coordinates"));
        }
    }
    Ok(out)
}

/// Every coordinate in `{0, 1/2, 1}` with exactly one equal to `1/2`.
pub fn has_vertex_structure(v: &[Q]) -> bool {
    let half = Q::new(1, 2);
    v.iter().all(|x| x.is_zero() || *x == half || x.is_one()) && v.iter().filter(|x| **x == half).count() == 1
}

/// Box constraints and `Σ t = N/2`, exactly.
pub fn is_feasible(t: &[Q]) -> bool {
    t.iter().all(|x| *x >= Q::zero() && *x <= Q::one()) && t.iter().sum::<Q>() == Q::new(t.len() as i128, 2)
}

/// No segment `t ± δ(e_i - e_j)` stays feasible in both directions.
pub fn is_pair_extreme(t: &[Q], delta: Q) -> bool {
    let n = t.len();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let mut plus = t.to_vec();
            let mut minus = t.to_vec();
            plus[i] += delta;
            plus[j] -= delta;
            minus[i] -= delta;
            minus[j] += delta;
            if is_feasible(&plus) && is_feasible(&minus) {
                return false;
            }
        }
    }
    true
}

/// `min (1/N) Σ (1 - p_i^2)` over vertices of `{p ∈ [-1,1]^N : Σ p = 0}`,
/// with `p = 2t - 1` mapping the hypersimplex onto that slice.
pub fn distortion_extremum(n: usize) -> Result<Q> {
    check_odd(n, 15)?;
    let verts = vertices_unchecked(n)?;
    let nn = qi(n as i128);
    verts
        .iter()
        .map(|t| {
            let s: Q = t
                .iter()
                .map(|x| {
                    let p = qi(2) * x - Q::one();
                    Q::one() - p * p
                })
                .sum();
            s / nn
        })
        .min()
        .ok_or_else(|| Error::domain("empty vertex set"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(xs: &[f64]) -> P1Config {
        P1Config::new(xs.iter().map(|x| P1Point::real(*x)).collect()).unwrap()
    }

    #[test]
    fn pgl2_examples() {
        assert!(is_semistable(&cfg(&[2.0, 2.0, 3.0, 4.0]), SymmetryGroup::Pgl2));
        assert!(!is_semistable(&cfg(&[2.0, 2.0, 2.0, 3.0]), SymmetryGroup::Pgl2));
    }

    #[test]
    fn cstar_examples() {
        assert!(is_semistable(&cfg(&[2.0, 2.0, 2.0, 3.0]), SymmetryGroup::Cstar));
        assert!(!is_semistable(&cfg(&[0.0, 0.0, -0.0, 3.0]), SymmetryGroup::Cstar));
        let c = P1Config::new(vec![P1Point::Infinity, P1Point::Infinity, P1Point::real(0.0), P1Point::real(1.0)]).unwrap();
        assert!(is_semistable(&c, SymmetryGroup::Cstar));
        assert!(!is_semistable(&c, SymmetryGroup::Pgl2) || c.multiplicities().iter().all(|m| 2 * m <= 4));
    }

    #[test]
    fn half_is_inside() {
        assert!(is_semistable(&cfg(&[1.0, 1.0, 2.0, 3.0]), SymmetryGroup::Pgl2));
        assert!(!is_semistable(&cfg(&[1.0, 1.0, 2.0]), SymmetryGroup::Pgl2));
    }

    #[test]
    fn three_vertices() {
        let v = hypersimplex_vertices(3).unwrap();
        assert_eq!(v.len(), 6);
        for t in &v {
            assert_eq!(t.iter().sum::<Q>(), Q::new(3, 2));
            let mut s = t.clone();
            s.sort();
            assert_eq!(s, vec![Q::zero(), Q::new(1, 2), Q::one()]);
        }
    }

    #[test]
    fn five_vertices() {
        let v = hypersimplex_vertices(5).unwrap();
        // 5 positions for the half, C(4,2) for the ones.
        assert_eq!(v.len(), 30);
        for t in &v {
            assert_eq!(t.iter().filter(|x| x.is_one()).count(), 2);
            assert_eq!(t.iter().filter(|x| x.is_zero()).count(), 2);
            assert!(is_pair_extreme(t, Q::new(1, 4)));
        }
        let mid = vec![Q::new(1, 2); 5];
        assert!(is_feasible(&mid) && !is_pair_extreme(&mid, Q::new(1, 4)));
    }

    #[test]
    fn even_rejected() {
        assert!(hypersimplex_vertices(4).is_err());
        assert!(hypersimplex_vertices(11).is_err());
        assert!(distortion_extremum(2).is_err());
    }

    #[test]
    fn distortion() {
        for n in [3, 5, 7, 9, 11] {
            assert_eq!(distortion_extremum(n).unwrap(), Q::new(1, n as i128));
        }
    }

    #[test]
    fn json_points() {
        let c: P1Config = serde_json::from_str(r#"[0, "inf", [1.0, 2.0], "3.5"]"#).unwrap();
        assert_eq!(c.points[1], P1Point::Infinity);
        assert_eq!(c.points[2], P1Point::Finite { re: 1.0, im: 2.0 });
        assert_eq!(c.points[3], P1Point::real(3.5));
    }
}
