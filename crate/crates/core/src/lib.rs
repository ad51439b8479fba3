//! Stability thresholds, partition functions and sampling for log Fano curves.
//!
//! The crate is organised by topic:
//!
//! - [`curve`]: log Fano curves, symmetry type and K-stability class.
//! - [`thresholds`]: microscopic thresholds, their closed forms and a valuation oracle.
//! - [`gitcomb`]: GIT semistability of point configurations and hypersimplex vertices.
//! - [`selberg`]: complex Selberg integrals, the Mabuchi infimum and Monte Carlo checks.
//! - [`toric`]: discrete Legendre transforms and functionals along geodesic rays.
//! - [`sampler`]: moment-constrained Metropolis sampling on the two-sphere.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod curve;
pub mod error;
pub mod gitcomb;
pub mod quad;
pub mod rational;
pub mod sampler;
pub mod selberg;
pub mod special;
pub mod thresholds;
pub mod toric;

pub use curve::{AutGroup, CurveClassification, KClass, LogFanoCurve, PointLabel};
pub use error::{Error, Result};
pub use gitcomb::{P1Config, P1Point, SymmetryGroup};
pub use rational::{ExtRational, Q};
pub use sampler::{Observables, SamplerParams, SphereConfig};
pub use selberg::{ConvergenceRow, WeightTriple};
pub use thresholds::{Family, ThresholdReport, ValuationCandidate};
pub use toric::{ConvexProfile, Ray, RayGrid, RayReport, Side};
