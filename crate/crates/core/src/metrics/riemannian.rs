use std::fmt::Debug;

use nalgebra::DMatrix;

use crate::error::{FinslerError, Result};
use crate::scalar::Scalar;
use crate::structure::ClosedForm;

/// A Riemannian metric tensor `g_ij(x)` given in closed form.
pub trait TensorField: Send + Sync + Debug {
    fn dim(&self) -> usize;
    fn label(&self) -> String;
    fn boundary_defect(&self, _x: &[f64]) -> Option<f64> {
        None
    }
    fn tensor<S: Scalar>(&self, x: &[S]) -> Vec<Vec<S>>;
    fn spray_analytic(&self, _x: &[f64], _y: &[f64]) -> Option<Vec<f64>> {
        None
    }
}

/// `F = sqrt(g_ij(x) y^i y^j)`.
#[derive(Debug, Clone)]
pub struct Riemannian<T: TensorField> {
    field: T,
}

impl<T: TensorField> Riemannian<T> {
    pub fn from_field(field: T) -> Self {
        Riemannian { field }
    }

    pub fn field(&self) -> &T {
        &self.field
    }
}

impl<T: TensorField> ClosedForm for Riemannian<T> {
    fn dim(&self) -> usize {
        self.field.dim()
    }
    fn label(&self) -> String {
        self.field.label()
    }
    fn boundary_defect(&self, x: &[f64]) -> Option<f64> {
        self.field.boundary_defect(x)
    }
    fn finsler<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<S> {
        let g = self.field.tensor(x);
        let mut acc = y[0].zero_like();
        for (i, row) in g.iter().enumerate() {
            for (j, gij) in row.iter().enumerate() {
                acc = acc + gij.clone() * y[i].clone() * y[j].clone();
            }
        }
        if acc.value() < 0.0 {
            return Err(FinslerError::Convexity("metric tensor is not positive definite".into()));
        }
        Ok(acc.sqrt())
    }
    fn fundamental_tensor_analytic(&self, x: &[f64], _y: &[f64]) -> Option<DMatrix<f64>> {
        let g = self.field.tensor(x);
        let n = g.len();
        Some(DMatrix::from_fn(n, n, |i, j| g[i][j]))
    }
    fn spray_analytic(&self, x: &[f64], y: &[f64]) -> Option<Vec<f64>> {
        self.field.spray_analytic(x, y)
    }
}

/// A constant symmetric positive-definite tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantTensor {
    g: Vec<Vec<f64>>,
}

impl ConstantTensor {
    pub fn new(g: Vec<Vec<f64>>) -> Result<Self> {
        let n = g.len();
        if n == 0 || g.iter().any(|r| r.len() != n) {
            return Err(FinslerError::Construction("tensor must be a non-empty square matrix".into()));
        }
        let m = DMatrix::from_fn(n, n, |i, j| g[i][j]);
        if (&m - m.transpose()).abs().max() > 1e-12 * m.abs().max() {
            return Err(FinslerError::Construction("tensor is not symmetric".into()));
        }
        if crate::structure::min_eigenvalue(&m) <= 0.0 {
            return Err(FinslerError::Construction("tensor is not positive definite".into()));
        }
        Ok(ConstantTensor { g })
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.g
    }
}

impl TensorField for ConstantTensor {
    fn dim(&self) -> usize {
        self.g.len()
    }
    fn label(&self) -> String {
        format!("riemannian-constant(n={})", self.g.len())
    }
    fn tensor<S: Scalar>(&self, x: &[S]) -> Vec<Vec<S>> {
        self.g.iter().map(|r| r.iter().map(|&v| x[0].constant_like(v)).collect()).collect()
    }
    fn spray_analytic(&self, _x: &[f64], y: &[f64]) -> Option<Vec<f64>> {
        Some(vec![0.0; y.len()])
    }
}

impl Riemannian<ConstantTensor> {
    pub fn constant(g: Vec<Vec<f64>>) -> Result<Self> {
        Ok(Riemannian::from_field(ConstantTensor::new(g)?))
    }
}

/// Euclidean norm `|y|` on `R^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Euclidean {
    n: usize,
}

impl Euclidean {
    pub fn new(n: usize) -> Self {
        Euclidean { n }
    }
}

impl ClosedForm for Euclidean {
    fn dim(&self) -> usize {
        self.n
    }
    fn label(&self) -> String {
        format!("euclidean(n={})", self.n)
    }
    fn finsler<S: Scalar>(&self, _x: &[S], y: &[S]) -> Result<S> {
        Ok(crate::scalar::dot(y, y).sqrt())
    }
    fn fundamental_tensor_analytic(&self, _x: &[f64], _y: &[f64]) -> Option<DMatrix<f64>> {
        Some(DMatrix::identity(self.n, self.n))
    }
    fn spray_analytic(&self, _x: &[f64], y: &[f64]) -> Option<Vec<f64>> {
        Some(vec![0.0; y.len()])
    }
}

/// Klein model of hyperbolic space on the unit ball:
/// `g_ij = δ_ij/(1-|x|²) + x_i x_j/(1-|x|²)²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KleinTensor {
    n: usize,
}

impl TensorField for KleinTensor {
    fn dim(&self) -> usize {
        self.n
    }
    fn label(&self) -> String {
        format!("klein(n={})", self.n)
    }
    fn boundary_defect(&self, x: &[f64]) -> Option<f64> {
        Some(1.0 - x.iter().map(|v| v * v).sum::<f64>())
    }
    fn tensor<S: Scalar>(&self, x: &[S]) -> Vec<Vec<S>> {
        let phi = -crate::scalar::dot(x, x) + 1.0;
        let inv = phi.recip();
        let inv2 = inv.square();
        (0..self.n)
            .map(|i| {
                (0..self.n)
                    .map(|j| {
                        let t = x[i].clone() * x[j].clone() * inv2.clone();
                        if i == j {
                            t + inv.clone()
                        } else {
                            t
                        }
                    })
                    .collect()
            })
            .collect()
    }
    fn spray_analytic(&self, x: &[f64], y: &[f64]) -> Option<Vec<f64>> {
        let phi = 1.0 - x.iter().map(|v| v * v).sum::<f64>();
        let xy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
        Some(y.iter().map(|v| 2.0 * xy / phi * v).collect())
    }
}

pub type Klein = Riemannian<KleinTensor>;

impl Riemannian<KleinTensor> {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(FinslerError::Construction("the Klein model needs n >= 2".into()));
        }
        Ok(Riemannian::from_field(KleinTensor { n }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::FinslerStructure;

    #[test]
    fn klein_norm_and_domain() {
        let k = Klein::new(2).unwrap();
        assert!((k.norm(&[0.0, 0.0], &[3.0, 4.0]).unwrap() - 5.0).abs() < 1e-15);
        // radial: F = |y| / (1 - r²)
        let f = k.norm(&[0.5, 0.0], &[1.0, 0.0]).unwrap();
        assert!((f - 1.0 / 0.75).abs() < 1e-14);
        assert!(matches!(k.norm(&[1.0, 0.0], &[1.0, 0.0]), Err(FinslerError::Domain { .. })));
        assert!(Klein::new(1).is_err());
    }

    #[test]
    fn constant_tensor_rejects_indefinite() {
        assert!(Riemannian::constant(vec![vec![1.0, 0.0], vec![0.0, -1.0]]).is_err());
        assert!(Riemannian::constant(vec![vec![1.0, 0.2], vec![0.3, 1.0]]).is_err());
        let r = Riemannian::constant(vec![vec![4.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!((r.norm(&[0.0, 0.0], &[1.0, 0.0]).unwrap() - 2.0).abs() < 1e-15);
    }
}
