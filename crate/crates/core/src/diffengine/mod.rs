//! Partial derivatives of scalar fields on the slit tangent bundle.
//!
//! Two backends: truncated Taylor jets for closed-form fields and central
//! finite differences with Richardson extrapolation for black-box callables.
//! Variables are ordered `(x^1..x^n, y^1..y^n)`.

mod fd;
mod jet;

pub use fd::{central_mixed, FdPlan};
pub use jet::{Jet, Layout};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{FinslerError, Result};
use crate::scalar::Scalar;
use crate::structure::FinslerStructure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Jets when the field supports them, finite differences otherwise.
    AutomaticForward,
    /// Always finite differences.
    FiniteDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub mode: Mode,
    /// Overrides the order-dependent default step (relative to coordinate scale).
    pub base_step: Option<f64>,
    pub richardson_levels: usize,
    /// Largest tolerated disagreement between the last two Richardson levels,
    /// relative to the derivative magnitude.
    pub target_accuracy: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            mode: Mode::AutomaticForward,
            base_step: None,
            richardson_levels: 2,
            target_accuracy: 1e-6,
        }
    }
}

impl EngineConfig {
    pub fn finite_difference() -> Self {
        EngineConfig {
            mode: Mode::FiniteDifference,
            ..EngineConfig::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.target_accuracy > 0.0) {
            return Err(FinslerError::InvalidArgument("target accuracy must be positive".into()));
        }
        if let Some(h) = self.base_step {
            if !(h > 0.0) {
                return Err(FinslerError::InvalidArgument("base step must be positive".into()));
            }
        }
        Ok(())
    }
}

/// A scalar field `f(x, y)` on the tangent bundle.
pub trait Field: Sync {
    fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64>;
    fn eval_jet(&self, _x: &[Jet], _y: &[Jet]) -> Option<Result<Jet>> {
        None
    }
}

/// Black-box field from a closure.
pub struct PlainField<F>(pub F);

impl<F> Field for PlainField<F>
where
    F: Fn(&[f64], &[f64]) -> Result<f64> + Sync,
{
    fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        (self.0)(x, y)
    }
}

/// `F^2` of a metric.
pub struct EnergyField<'a>(pub &'a dyn FinslerStructure);

impl Field for EnergyField<'_> {
    fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let f = self.0.norm(x, y)?;
        Ok(f * f)
    }
    fn eval_jet(&self, x: &[Jet], y: &[Jet]) -> Option<Result<Jet>> {
        self.0.norm_jet(x, y).map(|r| r.map(|f| f.square()))
    }
}

/// Which mixed partial to take, and where.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeRequest {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Differentiation order per x coordinate (total at most 2).
    pub x_orders: Vec<u8>,
    /// Differentiation order per y coordinate (total at most 3).
    pub y_orders: Vec<u8>,
}

impl DerivativeRequest {
    fn total_orders(&self) -> (usize, usize) {
        (
            self.x_orders.iter().map(|&d| d as usize).sum(),
            self.y_orders.iter().map(|&d| d as usize).sum(),
        )
    }
}

/// Builds jets for the base point `(x, y)` in a `2n`-variable layout.
pub fn seed_jets(x: &[f64], y: &[f64], order: usize) -> (Vec<Jet>, Vec<Jet>) {
    let n = x.len();
    let layout = Layout::get(2 * n, order);
    let xj = x.iter().enumerate().map(|(i, &v)| Jet::variable(&layout, v, i)).collect();
    let yj = y.iter().enumerate().map(|(i, &v)| Jet::variable(&layout, v, n + i)).collect();
    (xj, yj)
}

/// Mixed partial derivative of `field` at the requested orders.
pub fn partial(field: &dyn Field, req: &DerivativeRequest, cfg: &EngineConfig) -> Result<f64> {
    cfg.validate()?;
    let n = req.x.len();
    if req.y.len() != n || req.x_orders.len() != n || req.y_orders.len() != n {
        return Err(FinslerError::Dimension {
            expected: n,
            got: req.y.len().min(req.x_orders.len()).min(req.y_orders.len()),
        });
    }
    let (ox, oy) = req.total_orders();
    if ox > 2 || oy > 3 {
        return Err(FinslerError::InvalidArgument(format!(
            "derivative orders (x: {ox}, y: {oy}) exceed the supported (2, 3)"
        )));
    }
    let order = ox + oy;
    if cfg.mode == Mode::AutomaticForward {
        let (xj, yj) = seed_jets(&req.x, &req.y, order);
        if let Some(j) = field.eval_jet(&xj, &yj) {
            let j = j?;
            let alpha: Vec<u8> = req.x_orders.iter().chain(&req.y_orders).copied().collect();
            return Ok(j.derivative(&alpha));
        }
    }
    let mut z = req.x.clone();
    z.extend_from_slice(&req.y);
    let orders: Vec<u8> = req.x_orders.iter().chain(&req.y_orders).copied().collect();
    let plan = FdPlan::new(&z, n, &orders, cfg);
    let out = central_mixed(
        &|zz: &[f64]| -> Result<Vec<f64>> { Ok(vec![field.eval(&zz[..n], &zz[n..])?]) },
        &z,
        &orders,
        &plan,
        cfg,
    )?;
    Ok(out[0])
}

/// `g_ij = ½ ∂²F²/∂y^i∂y^j`, symmetrized.
///
/// Analytic tensors take precedence, then jets, then finite differences.
pub fn fundamental_tensor(metric: &dyn FinslerStructure, x: &[f64], y: &[f64], cfg: &EngineConfig) -> Result<DMatrix<f64>> {
    metric.check_line_element(x, y)?;
    if y.iter().all(|&v| v == 0.0) {
        return Err(FinslerError::InvalidArgument("fundamental tensor needs y != 0".into()));
    }
    let n = metric.dim();
    if let Some(g) = metric.fundamental_tensor_analytic(x, y) {
        return Ok(symmetrize(g));
    }
    if cfg.mode == Mode::AutomaticForward {
        let (xj, yj) = seed_jets(x, y, 2);
        if let Some(f) = metric.norm_jet(&xj, &yj) {
            let e = f?.square();
            let mut g = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    let mut alpha = vec![0u8; 2 * n];
                    alpha[n + i] += 1;
                    alpha[n + j] += 1;
                    g[(i, j)] = 0.5 * e.derivative(&alpha);
                }
            }
            return Ok(symmetrize(g));
        }
    }
    let field = EnergyField(metric);
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut y_orders = vec![0u8; n];
            y_orders[i] += 1;
            y_orders[j] += 1;
            let req = DerivativeRequest {
                x: x.to_vec(),
                y: y.to_vec(),
                x_orders: vec![0; n],
                y_orders,
            };
            g[(i, j)] = 0.5 * partial(&field, &req, cfg)?;
        }
    }
    let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let asym = (&g - g.transpose()).iter().fold(0.0f64, |m, v| m.max(v.abs())) / scale;
    if asym > cfg.target_accuracy.max(1e-8) {
        return Err(FinslerError::Accuracy {
            what: "finite-difference Hessian symmetry".into(),
            achieved: asym,
        });
    }
    Ok(symmetrize(g))
}

fn symmetrize(g: DMatrix<f64>) -> DMatrix<f64> {
    (&g + g.transpose()) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{Euclidean, FunkBall, IntervalFunk, Klein};

    #[test]
    fn polynomial_partial_both_backends() {
        // f = x1 * (y2)^3 ; ∂x1 ∂y2^3 f = 6
        let field = PlainField(|x: &[f64], y: &[f64]| Ok(x[0] * y[1].powi(3)));
        let req = DerivativeRequest {
            x: vec![0.8, -0.4],
            y: vec![0.3, 1.7],
            x_orders: vec![1, 0],
            y_orders: vec![0, 3],
        };
        let fd = partial(&field, &req, &EngineConfig::finite_difference()).unwrap();
        assert!((fd - 6.0).abs() / 6.0 < 1e-7, "fd = {fd}");
    }

    #[test]
    fn euclidean_energy_hessian_is_twice_identity() {
        let m = Euclidean::new(2);
        let field = EnergyField(&m);
        for cfg in [EngineConfig::default(), EngineConfig::finite_difference()] {
            for i in 0..2 {
                for j in 0..2 {
                    let mut y_orders = vec![0u8; 2];
                    y_orders[i] += 1;
                    y_orders[j] += 1;
                    let req = DerivativeRequest {
                        x: vec![0.2, 0.1],
                        y: vec![0.6, -0.8],
                        x_orders: vec![0, 0],
                        y_orders,
                    };
                    let v = partial(&field, &req, &cfg).unwrap();
                    let expected = if i == j { 2.0 } else { 0.0 };
                    assert!((v - expected).abs() < 1e-7, "{i}{j}: {v}");
                }
            }
        }
    }

    #[test]
    fn funk_ball_energy_x_derivative_matches_golden() {
        // Golden value from symbolic differentiation of the closed form
        // F = (sqrt((1-|x|^2)|y|^2 + <x,y>^2) + <x,y>) / (1-|x|^2)
        // at x = (0.5, 0), y = (1, 0): ∂F²/∂x¹ = 16.
        let m = FunkBall::new(2, 1.0).unwrap();
        let field = EnergyField(&m);
        let req = DerivativeRequest {
            x: vec![0.5, 0.0],
            y: vec![1.0, 0.0],
            x_orders: vec![1, 0],
            y_orders: vec![0, 0],
        };
        let jet = partial(&field, &req, &EngineConfig::default()).unwrap();
        let fd = partial(&field, &req, &EngineConfig::finite_difference()).unwrap();
        assert!((jet - 16.0).abs() < 1e-12, "jet = {jet}");
        assert!((fd - 16.0).abs() < 1e-7, "fd = {fd}");
    }

    #[test]
    fn fundamental_tensor_examples() {
        let cfg = EngineConfig::default();
        let e = Euclidean::new(3);
        let g = fundamental_tensor(&e, &[0.1, 0.2, 0.3], &[1.0, 0.0, 2.0], &cfg).unwrap();
        assert!((g - DMatrix::identity(3, 3)).abs().max() < 1e-14);

        let k = Klein::new(2).unwrap();
        let g = fundamental_tensor(&k, &[0.0, 0.0], &[0.3, -1.0], &cfg).unwrap();
        assert!((g - DMatrix::identity(2, 2)).abs().max() < 1e-14);

        let f = IntervalFunk::new(1.0).unwrap();
        let g = fundamental_tensor(&f, &[0.0], &[1.0], &cfg).unwrap();
        assert!((g[(0, 0)] - 1.0).abs() < 1e-14);
        let g_fd = fundamental_tensor(&f, &[0.0], &[1.0], &EngineConfig::finite_difference()).unwrap();
        assert!((g_fd[(0, 0)] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn fundamental_tensor_is_zero_homogeneous() {
        let m = FunkBall::new(2, 1.0).unwrap();
        let cfg = EngineConfig::default();
        let x = [0.3, -0.2];
        let g1 = fundamental_tensor(&m, &x, &[0.4, 0.9], &cfg).unwrap();
        let g2 = fundamental_tensor(&m, &x, &[1.6, 3.6], &cfg).unwrap();
        assert!((g1 - g2).abs().max() < 1e-8);
    }

    #[test]
    fn stencil_leaving_domain_is_domain_error() {
        let f = IntervalFunk::new(1.0).unwrap();
        let field = EnergyField(&f);
        let req = DerivativeRequest {
            x: vec![0.9999],
            y: vec![1.0],
            x_orders: vec![2],
            y_orders: vec![0],
        };
        let err = partial(&field, &req, &EngineConfig::finite_difference()).unwrap_err();
        assert!(matches!(err, FinslerError::Domain { .. }));
    }

    #[test]
    fn zero_vector_is_rejected() {
        let e = Euclidean::new(2);
        assert!(fundamental_tensor(&e, &[0.0, 0.0], &[0.0, 0.0], &EngineConfig::default()).is_err());
    }
}
