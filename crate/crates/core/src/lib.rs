//! Numerical Finsler geometry on a single chart.
//!
//! The crate covers the fundamental tensor and geodesic spray of a Finsler
//! norm, Ricci curvature from spray derivatives, the projective parameter of
//! a geodesic obtained from the Schwarzian equation `{π, s} = 2/(n-1)·F²Ric`,
//! Funk metrics, and an upper estimator for the chain pseudo-distance built
//! from projective maps of the interval `(-1, 1)`.
//!
//! Conventions: the geodesic equation is `x'' + G(x, x') = 0` with
//! `G^i = γ^i_jk y^j y^k`, i.e. twice the spray coefficients of the
//! `x'' + 2G = 0` convention.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::type_complexity)]

pub mod curvature;
pub mod diffengine;
pub mod distance;
pub mod error;
pub mod geodesics;
pub mod metrics;
pub mod ode;
pub mod projective;
pub mod quadrature;
pub mod sampling;
pub mod scalar;
pub mod structure;
pub mod verify;

pub use error::{FinslerError, Result};
pub use structure::{FinslerStructure, Metric};
