//! Funk metrics: quadratic domains, the unit ball, and the interval `(-1, 1)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{FinslerError, Result};
use crate::scalar::{dot, Scalar};
use crate::structure::ClosedForm;

/// Domain `{x : α_ij x^i x^j + 2β_i x^i + γ > 0}` together with the Funk constant `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadraticDomainSpec {
    pub alpha: Vec<Vec<f64>>,
    pub beta: Vec<f64>,
    pub gamma: f64,
    #[serde(default = "super::one")]
    pub k: f64,
}

impl QuadraticDomainSpec {
    /// The unit ball: `α = -I`, `β = 0`, `γ = 1`.
    pub fn unit_ball(n: usize, k: f64) -> Self {
        QuadraticDomainSpec {
            alpha: (0..n).map(|i| (0..n).map(|j| if i == j { -1.0 } else { 0.0 }).collect()).collect(),
            beta: vec![0.0; n],
            gamma: 1.0,
            k,
        }
    }

    pub fn phi(&self, x: &[f64]) -> f64 {
        let p = self.half_gradient(x);
        // φ = x·(αx + β) + β·x + γ
        x.iter().zip(&p).map(|(a, b)| a * b).sum::<f64>() + x.iter().zip(&self.beta).map(|(a, b)| a * b).sum::<f64>() + self.gamma
    }

    /// `αx + β`, i.e. half the gradient of φ.
    pub fn half_gradient(&self, x: &[f64]) -> Vec<f64> {
        self.alpha
            .iter()
            .zip(&self.beta)
            .map(|(row, b)| row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() + b)
            .collect()
    }
}

/// Funk metric of a quadratic domain,
/// `L = (sqrt(a_ij y^i y^j) + b_i y^i) / k` with
/// `a_ij = ((αx+β)_i (αx+β)_j − φ α_ij) / φ²` and `b = −(αx+β)/φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticFunk {
    spec: QuadraticDomainSpec,
}

impl QuadraticFunk {
    pub fn new(spec: QuadraticDomainSpec) -> Result<Self> {
        let n = spec.beta.len();
        if n == 0 || spec.alpha.len() != n || spec.alpha.iter().any(|r| r.len() != n) {
            return Err(FinslerError::Construction("alpha must be n x n and beta of length n".into()));
        }
        if !(spec.gamma > 0.0) {
            return Err(FinslerError::Construction(format!("gamma = {} must be positive", spec.gamma)));
        }
        if !(spec.k > 0.0) {
            return Err(FinslerError::Construction(format!("k = {} must be positive", spec.k)));
        }
        let a = DMatrix::from_fn(n, n, |i, j| spec.alpha[i][j]);
        if (&a - a.transpose()).abs().max() > 1e-12 * a.abs().max().max(1.0) {
            return Err(FinslerError::Construction("alpha is not symmetric".into()));
        }
        if crate::structure::max_eigenvalue(&a) > 0.0 {
            log::warn!("-alpha is not positive semidefinite; the domain may not be convex");
        }
        Ok(QuadraticFunk { spec })
    }

    pub fn spec(&self) -> &QuadraticDomainSpec {
        &self.spec
    }

    /// `(a_ij(x), b_i(x))` of the Funk metric.
    pub fn coefficients(&self, x: &[f64]) -> Result<(DMatrix<f64>, Vec<f64>)> {
        let phi = self.spec.phi(x);
        if !(phi > 0.0) {
            return Err(FinslerError::Domain { point: x.to_vec() });
        }
        let p = self.spec.half_gradient(x);
        let n = p.len();
        let a = DMatrix::from_fn(n, n, |i, j| (p[i] * p[j] - phi * self.spec.alpha[i][j]) / (phi * phi));
        let b = p.iter().map(|v| -v / phi).collect();
        Ok((a, b))
    }
}

impl ClosedForm for QuadraticFunk {
    fn dim(&self) -> usize {
        self.spec.beta.len()
    }
    fn label(&self) -> String {
        format!("quadratic-funk(n={}, k={})", self.spec.beta.len(), self.spec.k)
    }
    fn boundary_defect(&self, x: &[f64]) -> Option<f64> {
        Some(self.spec.phi(x) / self.spec.gamma)
    }
    fn finsler<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<S> {
        let n = y.len();
        let p: Vec<S> = (0..n)
            .map(|i| {
                let mut acc = x[0].constant_like(self.spec.beta[i]);
                for j in 0..n {
                    acc = acc + x[j].clone() * self.spec.alpha[i][j];
                }
                acc
            })
            .collect();
        let bx: S = (0..n).fold(x[0].constant_like(self.spec.gamma), |acc, i| acc + x[i].clone() * self.spec.beta[i]);
        let phi = dot(x, &p) + bx;
        let py = dot(&p, y);
        let yay = crate::scalar::quadratic_form(&self.spec.alpha, y, y);
        let disc = py.square() - phi.clone() * yay.clone();
        if disc.value() < 0.0 {
            let ayy = disc.value() / phi.value().powi(2);
            return Err(FinslerError::Convexity(format!("a_ij y^i y^j = {ayy} < 0")));
        }
        let root = disc.sqrt();
        if py.value() > 0.0 {
            Ok(-yay / ((root + py) * self.spec.k))
        } else {
            Ok((root - py) / (phi * self.spec.k))
        }
    }
    fn spray_analytic(&self, x: &[f64], y: &[f64]) -> Option<Vec<f64>> {
        let f = self.finsler(x, y).ok()? * self.spec.k;
        Some(y.iter().map(|v| f * v).collect())
    }
}

/// Funk metric of the unit ball in closed form,
/// `F = (sqrt((1-|x|²)|y|² + <x,y>²) + <x,y>) / (k(1-|x|²))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunkBall {
    n: usize,
    k: f64,
}

impl FunkBall {
    pub fn new(n: usize, k: f64) -> Result<Self> {
        if n == 0 {
            return Err(FinslerError::Construction("dimension must be positive".into()));
        }
        if !(k > 0.0) {
            return Err(FinslerError::Construction(format!("k = {k} must be positive")));
        }
        Ok(FunkBall { n, k })
    }

    pub fn k(&self) -> f64 {
        self.k
    }
}

impl ClosedForm for FunkBall {
    fn dim(&self) -> usize {
        self.n
    }
    fn label(&self) -> String {
        format!("funk-ball(n={}, k={})", self.n, self.k)
    }
    fn boundary_defect(&self, x: &[f64]) -> Option<f64> {
        Some(1.0 - x.iter().map(|v| v * v).sum::<f64>())
    }
    fn finsler<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<S> {
        let phi = -dot(x, x) + 1.0;
        let xy = dot(x, y);
        let yy = dot(y, y);
        let root = (phi.clone() * yy.clone() + xy.square()).sqrt();
        if xy.value() < 0.0 {
            Ok(yy / ((root - xy) * self.k))
        } else {
            Ok((root + xy) / (phi * self.k))
        }
    }
    fn spray_analytic(&self, x: &[f64], y: &[f64]) -> Option<Vec<f64>> {
        let f = self.finsler(x, y).ok()? * self.k;
        Some(y.iter().map(|v| f * v).collect())
    }
}

/// Funk metric on `I = (-1, 1)`: `L = (|y| + u y) / (k(1 - u²))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalFunk {
    k: f64,
}

impl IntervalFunk {
    pub fn new(k: f64) -> Result<Self> {
        if !(k > 0.0) {
            return Err(FinslerError::Construction(format!("k = {k} must be positive")));
        }
        Ok(IntervalFunk { k })
    }

    pub fn k(&self) -> f64 {
        self.k
    }
}

impl ClosedForm for IntervalFunk {
    fn dim(&self) -> usize {
        1
    }
    fn label(&self) -> String {
        format!("interval-funk(k={})", self.k)
    }
    fn boundary_defect(&self, x: &[f64]) -> Option<f64> {
        Some(1.0 - x[0] * x[0])
    }
    fn finsler<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<S> {
        let u = &x[0];
        let v = &y[0];
        if u.value() * v.value() < 0.0 {
            Ok(v.abs() / ((u.abs() + 1.0) * self.k))
        } else {
            Ok((v.abs() + u.clone() * v.clone()) / ((-u.clone() + 1.0) * (u.clone() + 1.0) * self.k))
        }
    }
    fn spray_analytic(&self, x: &[f64], y: &[f64]) -> Option<Vec<f64>> {
        let f = self.finsler(x, y).ok()? * self.k;
        Some(vec![f * y[0]])
    }
}

/// Evaluates the interval Funk metric at `(u, y)`.
pub fn interval_funk_eval(u: f64, y: f64, k: f64) -> Result<f64> {
    if !(u.abs() < 1.0) {
        return Err(FinslerError::Domain { point: vec![u] });
    }
    if y == 0.0 {
        return Err(FinslerError::InvalidArgument("zero tangent vector".into()));
    }
    IntervalFunk::new(k)?.finsler(&[u], &[y])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::FinslerStructure;

    #[test]
    fn interval_examples() {
        assert!((interval_funk_eval(0.0, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((interval_funk_eval(0.5, 1.0, 1.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((interval_funk_eval(0.5, -1.0, 1.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(matches!(interval_funk_eval(1.0, 1.0, 1.0), Err(FinslerError::Domain { .. })));
    }

    #[test]
    fn quadratic_ball_examples() {
        let q = QuadraticFunk::new(QuadraticDomainSpec::unit_ball(2, 1.0)).unwrap();
        assert!((q.norm(&[0.0, 0.0], &[0.3, 0.4]).unwrap() - 0.5).abs() < 1e-15);
        assert!((q.norm(&[0.5, 0.0], &[1.0, 0.0]).unwrap() - 2.0).abs() < 1e-12);
        let (a, b) = q.coefficients(&[0.5, 0.0]).unwrap();
        assert!((a[(0, 0)] - 16.0 / 9.0).abs() < 1e-14);
        assert!((b[0] - 2.0 / 3.0).abs() < 1e-14);
        let mut bad = QuadraticDomainSpec::unit_ball(2, 1.0);
        bad.gamma = -1.0;
        assert!(matches!(QuadraticFunk::new(bad), Err(FinslerError::Construction(_))));
    }

    #[test]
    fn ball_closed_form_matches_quadratic() {
        let q = QuadraticFunk::new(QuadraticDomainSpec::unit_ball(3, 2.0)).unwrap();
        let b = FunkBall::new(3, 2.0).unwrap();
        let x = [0.1, -0.5, 0.3];
        let y = [-0.7, 0.2, 1.1];
        assert!((q.norm(&x, &y).unwrap() - b.norm(&x, &y).unwrap()).abs() < 1e-14);
    }
}
