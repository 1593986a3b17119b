use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{FinslerError, Result};
use crate::sampling;
use crate::scalar::{quadratic_form, Scalar};
use crate::structure::ClosedForm;

/// `F = sqrt(a_ij y^i y^j) + b_i(x) y^i` with constant `a` and affine
/// one-form `b(x) = b0 + B x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandersSpec {
    pub a: Vec<Vec<f64>>,
    pub b0: Vec<f64>,
    /// Linear part `B` with `b_i(x) = b0_i + B_ij x^j`.
    #[serde(default)]
    pub b_linear: Option<Vec<Vec<f64>>>,
    /// Restricts the domain to the open ball of this radius.
    #[serde(default)]
    pub domain_radius: Option<f64>,
}

impl RandersSpec {
    pub fn constant(a: Vec<Vec<f64>>, b: Vec<f64>) -> Self {
        RandersSpec {
            a,
            b0: b,
            b_linear: None,
            domain_radius: None,
        }
    }

    pub fn one_form(&self, x: &[f64]) -> Vec<f64> {
        let mut b = self.b0.clone();
        if let Some(m) = &self.b_linear {
            for (bi, row) in b.iter_mut().zip(m) {
                *bi += row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>();
            }
        }
        b
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Randers {
    spec: RandersSpec,
    a_inv: DMatrix<f64>,
}

impl Randers {
    /// Builds the metric after checking `‖b‖_a < 1` on a sample grid of the domain.
    pub fn new(spec: RandersSpec) -> Result<Self> {
        let m = Self::new_unchecked(spec)?;
        let n = m.spec.b0.len();
        let mut points = vec![vec![0.0; n]];
        match (&m.spec.b_linear, m.spec.domain_radius) {
            (None, _) => {}
            (Some(_), None) => {
                return Err(FinslerError::Construction(
                    "a non-constant one-form needs a bounded domain_radius".into(),
                ))
            }
            (Some(_), Some(r)) => {
                let mut rng = sampling::rng(0x5eed);
                for _ in 0..256 {
                    points.push(sampling::unit_vector(n, &mut rng).into_iter().map(|c| c * r).collect());
                    points.push(sampling::ball_point(n, r, &mut rng));
                }
            }
        }
        let worst = points.iter().map(|x| m.b_norm(x)).fold(0.0, f64::max);
        if worst >= 1.0 {
            return Err(FinslerError::Construction(format!("one-form norm {worst} >= 1 somewhere in the domain")));
        }
        Ok(m)
    }

    /// Builds the metric without the one-form norm check.
    pub fn new_unchecked(spec: RandersSpec) -> Result<Self> {
        let n = spec.b0.len();
        if n == 0 || spec.a.len() != n || spec.a.iter().any(|r| r.len() != n) {
            return Err(FinslerError::Construction("a must be n x n and b0 of length n".into()));
        }
        if let Some(b) = &spec.b_linear {
            if b.len() != n || b.iter().any(|r| r.len() != n) {
                return Err(FinslerError::Construction("b_linear must be n x n".into()));
            }
        }
        if let Some(r) = spec.domain_radius {
            if !(r > 0.0) {
                return Err(FinslerError::Construction("domain_radius must be positive".into()));
            }
        }
        let a = DMatrix::from_fn(n, n, |i, j| spec.a[i][j]);
        if (&a - a.transpose()).abs().max() > 1e-12 * a.abs().max() || crate::structure::min_eigenvalue(&a) <= 0.0 {
            return Err(FinslerError::Construction("a must be symmetric positive definite".into()));
        }
        let a_inv = a.try_inverse().ok_or_else(|| FinslerError::Construction("a is singular".into()))?;
        Ok(Randers { spec, a_inv })
    }

    pub fn spec(&self) -> &RandersSpec {
        &self.spec
    }

    /// `‖b(x)‖_a = sqrt(a^{ij} b_i b_j)`.
    pub fn b_norm(&self, x: &[f64]) -> f64 {
        let b = self.spec.one_form(x);
        let n = b.len();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += self.a_inv[(i, j)] * b[i] * b[j];
            }
        }
        acc.sqrt()
    }
}

impl ClosedForm for Randers {
    fn dim(&self) -> usize {
        self.spec.b0.len()
    }
    fn label(&self) -> String {
        format!("randers(n={})", self.spec.b0.len())
    }
    fn boundary_defect(&self, x: &[f64]) -> Option<f64> {
        self.spec.domain_radius.map(|r| 1.0 - x.iter().map(|v| v * v).sum::<f64>() / (r * r))
    }
    fn finsler<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<S> {
        let n = y.len();
        let mut beta = y[0].zero_like();
        for i in 0..n {
            let mut bi = x[0].constant_like(self.spec.b0[i]);
            if let Some(m) = &self.spec.b_linear {
                for j in 0..n {
                    bi = bi + x[j].clone() * m[i][j];
                }
            }
            beta = beta + bi * y[i].clone();
        }
        Ok(quadratic_form(&self.spec.a, y, y).sqrt() + beta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::FinslerStructure;

    fn id2() -> Vec<Vec<f64>> {
        vec![vec![1.0, 0.0], vec![0.0, 1.0]]
    }

    #[test]
    fn asymmetric_values() {
        let m = Randers::new(RandersSpec::constant(id2(), vec![0.5, 0.0])).unwrap();
        assert!((m.norm(&[0.0, 0.0], &[1.0, 0.0]).unwrap() - 1.5).abs() < 1e-15);
        assert!((m.norm(&[0.0, 0.0], &[-1.0, 0.0]).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn oversized_one_form_is_rejected() {
        let r = Randers::new(RandersSpec::constant(id2(), vec![1.5, 0.0]));
        assert!(matches!(r, Err(FinslerError::Construction(_))));
        let rotating = RandersSpec {
            a: id2(),
            b0: vec![0.0, 0.0],
            b_linear: Some(vec![vec![0.0, -0.8], vec![0.8, 0.0]]),
            domain_radius: Some(2.0),
        };
        assert!(Randers::new(rotating.clone()).is_err());
        let ok = RandersSpec {
            domain_radius: Some(1.0),
            ..rotating
        };
        assert!(Randers::new(ok).is_ok());
    }
}
