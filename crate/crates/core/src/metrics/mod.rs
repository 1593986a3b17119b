//! The shipped metric catalogue.

mod black_box;
mod funk;
mod randers;
mod riemannian;

pub use black_box::FnMetric;
pub use funk::{interval_funk_eval, FunkBall, IntervalFunk, QuadraticDomainSpec, QuadraticFunk};
pub use randers::{Randers, RandersSpec};
pub use riemannian::{ConstantTensor, Euclidean, Klein, KleinTensor, Riemannian, TensorField};

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{FinslerError, Result};
use crate::structure::Metric;

/// Serializable description of a shipped metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MetricSpec {
    Euclidean {
        n: usize,
    },
    Klein {
        n: usize,
    },
    /// Constant Riemannian tensor `g`.
    Riemannian {
        g: Vec<Vec<f64>>,
    },
    FunkBall {
        n: usize,
        #[serde(default = "one")]
        k: f64,
    },
    QuadraticFunk(QuadraticDomainSpec),
    IntervalFunk {
        #[serde(default = "one")]
        k: f64,
    },
    Randers(RandersSpec),
}

fn one() -> f64 {
    1.0
}

impl MetricSpec {
    pub fn build(&self) -> Result<Metric> {
        Ok(match self {
            MetricSpec::Euclidean { n } => {
                if *n == 0 {
                    return Err(FinslerError::Construction("dimension must be positive".into()));
                }
                Arc::new(Euclidean::new(*n))
            }
            MetricSpec::Klein { n } => Arc::new(Klein::new(*n)?),
            MetricSpec::Riemannian { g } => Arc::new(Riemannian::constant(g.clone())?),
            MetricSpec::FunkBall { n, k } => Arc::new(FunkBall::new(*n, *k)?),
            MetricSpec::QuadraticFunk(spec) => Arc::new(QuadraticFunk::new(spec.clone())?),
            MetricSpec::IntervalFunk { k } => Arc::new(IntervalFunk::new(*k)?),
            MetricSpec::Randers(spec) => Arc::new(Randers::new(spec.clone())?),
        })
    }
}
