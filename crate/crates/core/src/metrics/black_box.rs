use std::fmt;
use std::sync::Arc;

use crate::error::{FinslerError, Result};
use crate::structure::FinslerStructure;

type NormFn = dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync;
type DomainFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// A metric given only as a callable; derivatives come from finite differences.
#[derive(Clone)]
pub struct FnMetric {
    n: usize,
    label: String,
    norm: Arc<NormFn>,
    boundary: Option<Arc<DomainFn>>,
}

impl FnMetric {
    pub fn new(n: usize, label: impl Into<String>, norm: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        FnMetric {
            n,
            label: label.into(),
            norm: Arc::new(norm),
            boundary: None,
        }
    }

    /// Restricts the domain to `{x : phi(x) > 0}`.
    pub fn with_boundary(mut self, phi: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.boundary = Some(Arc::new(phi));
        self
    }
}

impl fmt::Debug for FnMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnMetric").field("n", &self.n).field("label", &self.label).finish()
    }
}

impl FinslerStructure for FnMetric {
    fn dim(&self) -> usize {
        self.n
    }
    fn label(&self) -> String {
        self.label.clone()
    }
    fn boundary_defect(&self, x: &[f64]) -> Option<f64> {
        self.boundary.as_ref().map(|b| b(x))
    }
    fn norm(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_line_element(x, y)?;
        let v = (self.norm)(x, y);
        if !v.is_finite() {
            return Err(FinslerError::Domain { point: x.to_vec() });
        }
        Ok(v)
    }
}
