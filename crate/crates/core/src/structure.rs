//! The Finsler-structure interface, axiom validators and arc length.
//!
//! Points and tangent vectors are plain coordinate slices in a single global
//! chart. Every metric checks domain membership eagerly and reports violations
//! as [`FinslerError::Domain`] instead of producing NaNs.

use std::fmt::Debug;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::diffengine::{self, EngineConfig, Jet};
use crate::error::{FinslerError, Result};
use crate::quadrature;
use crate::scalar::Scalar;

/// Shared handle to a metric.
pub type Metric = Arc<dyn FinslerStructure>;

/// A Finsler norm `F(x, y)` on the slit tangent bundle of a chart domain.
pub trait FinslerStructure: Send + Sync + Debug {
    fn dim(&self) -> usize;

    fn label(&self) -> String;

    /// Normalized boundary function, positive inside the domain and zero on
    /// its boundary. `None` when the domain is all of `R^n`.
    fn boundary_defect(&self, _x: &[f64]) -> Option<f64> {
        None
    }

    /// `F(x, y)`.
    fn norm(&self, x: &[f64], y: &[f64]) -> Result<f64>;

    /// `F` evaluated on jets; `None` for black-box metrics.
    fn norm_jet(&self, _x: &[Jet], _y: &[Jet]) -> Option<Result<Jet>> {
        None
    }

    fn fundamental_tensor_analytic(&self, _x: &[f64], _y: &[f64]) -> Option<DMatrix<f64>> {
        None
    }

    /// Spray coefficients `G^i` of the arc-length geodesic equation
    /// `x'' + G(x, x') = 0`, when known in closed form.
    fn spray_analytic(&self, _x: &[f64], _y: &[f64]) -> Option<Vec<f64>> {
        None
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(FinslerError::Dimension {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(FinslerError::Domain { point: x.to_vec() });
        }
        match self.boundary_defect(x) {
            Some(phi) if !(phi > 0.0) => Err(FinslerError::Domain { point: x.to_vec() }),
            _ => Ok(()),
        }
    }

    fn check_line_element(&self, x: &[f64], y: &[f64]) -> Result<()> {
        self.check_point(x)?;
        if y.len() != self.dim() {
            return Err(FinslerError::Dimension {
                expected: self.dim(),
                got: y.len(),
            });
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(FinslerError::InvalidArgument(format!("non-finite tangent vector {y:?}")));
        }
        Ok(())
    }
}

/// Metrics whose norm has a closed form usable with any [`Scalar`].
///
/// Implementors get [`FinslerStructure`] for free, including jet evaluation.
pub trait ClosedForm: Send + Sync + Debug {
    fn dim(&self) -> usize;
    fn label(&self) -> String;
    fn boundary_defect(&self, _x: &[f64]) -> Option<f64> {
        None
    }
    fn finsler<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<S>;
    fn fundamental_tensor_analytic(&self, _x: &[f64], _y: &[f64]) -> Option<DMatrix<f64>> {
        None
    }
    fn spray_analytic(&self, _x: &[f64], _y: &[f64]) -> Option<Vec<f64>> {
        None
    }
}

impl<T: ClosedForm> FinslerStructure for T {
    fn dim(&self) -> usize {
        ClosedForm::dim(self)
    }
    fn label(&self) -> String {
        ClosedForm::label(self)
    }
    fn boundary_defect(&self, x: &[f64]) -> Option<f64> {
        ClosedForm::boundary_defect(self, x)
    }
    fn norm(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_line_element(x, y)?;
        self.finsler(x, y)
    }
    fn norm_jet(&self, x: &[Jet], y: &[Jet]) -> Option<Result<Jet>> {
        let base: Vec<f64> = x.iter().map(|j| j.value()).collect();
        if let Err(e) = self.check_point(&base) {
            return Some(Err(e));
        }
        Some(self.finsler(x, y))
    }
    fn fundamental_tensor_analytic(&self, x: &[f64], y: &[f64]) -> Option<DMatrix<f64>> {
        ClosedForm::fundamental_tensor_analytic(self, x, y)
    }
    fn spray_analytic(&self, x: &[f64], y: &[f64]) -> Option<Vec<f64>> {
        ClosedForm::spray_analytic(self, x, y)
    }
}

/// One line of a [`ValidationReport`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationCheck {
    pub name: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl ValidationCheck {
    pub fn new(name: impl Into<String>, max_residual: f64, tolerance: f64) -> Self {
        ValidationCheck {
            name: name.into(),
            max_residual,
            tolerance,
            pass: max_residual <= tolerance,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<ValidationCheck>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Residual of positive homogeneity `max |F(x, λy) − λF(x, y)| / F(x, y)`.
pub fn validate_homogeneity(
    metric: &dyn FinslerStructure,
    samples: &[(Vec<f64>, Vec<f64>, f64)],
    tolerance: f64,
) -> Result<ValidationReport> {
    let residuals: Vec<f64> = samples
        .par_iter()
        .map(|(x, y, lambda)| -> Result<f64> {
            if !(*lambda > 0.0) {
                return Err(FinslerError::InvalidArgument(format!("scale factor {lambda} must be positive")));
            }
            if y.iter().all(|&v| v == 0.0) {
                return Err(FinslerError::InvalidArgument("zero tangent vector".into()));
            }
            let f = metric.norm(x, y)?;
            let scaled: Vec<f64> = y.iter().map(|v| v * lambda).collect();
            let fl = metric.norm(x, &scaled)?;
            Ok((fl - lambda * f).abs() / f.abs().max(f64::MIN_POSITIVE))
        })
        .collect::<Result<_>>()?;
    let worst = residuals.into_iter().fold(0.0, f64::max);
    Ok(ValidationReport {
        checks: vec![ValidationCheck::new("positive homogeneity", worst, tolerance)],
    })
}

/// Records the smallest eigenvalue of `g_ij(x, y)` at every sample; passes
/// when all of them are positive. The residual is the negated minimum.
pub fn validate_strong_convexity(
    metric: &dyn FinslerStructure,
    samples: &[(Vec<f64>, Vec<f64>)],
    cfg: &EngineConfig,
) -> Result<ValidationReport> {
    let mins: Vec<f64> = samples
        .par_iter()
        .map(|(x, y)| -> Result<f64> {
            let g = diffengine::fundamental_tensor(metric, x, y, cfg)?;
            Ok(min_eigenvalue(&g))
        })
        .collect::<Result<_>>()?;
    let worst = mins.into_iter().fold(f64::INFINITY, f64::min);
    Ok(ValidationReport {
        checks: vec![ValidationCheck::new(
            "strong convexity (negated minimum eigenvalue of g)",
            -worst,
            -1e-14,
        )],
    })
}

pub(crate) fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

pub(crate) fn max_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// A parametrized curve in the chart, piecewise smooth between breakpoints.
pub trait Path: Sync {
    fn position(&self, t: f64) -> Vec<f64>;
    fn velocity(&self, t: f64) -> Vec<f64>;
    /// Parameter values where the velocity may jump.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// Piecewise-linear path through sampled points at the given parameter values.
#[derive(Debug, Clone)]
pub struct SampledPath {
    times: Vec<f64>,
    points: Vec<Vec<f64>>,
}

impl SampledPath {
    pub fn new(times: Vec<f64>, points: Vec<Vec<f64>>) -> Result<Self> {
        if times.len() != points.len() || times.len() < 2 {
            return Err(FinslerError::InvalidArgument("a sampled path needs at least two samples".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(FinslerError::InvalidArgument("sample times must increase".into()));
        }
        Ok(SampledPath { times, points })
    }

    /// Straight segment from `a` to `b` traversed on `[0, 1]`.
    pub fn segment(a: &[f64], b: &[f64]) -> Self {
        SampledPath {
            times: vec![0.0, 1.0],
            points: vec![a.to_vec(), b.to_vec()],
        }
    }

    fn piece(&self, t: f64) -> usize {
        match self.times.iter().position(|&s| s > t) {
            Some(0) => 0,
            Some(i) => i - 1,
            None => self.times.len() - 2,
        }
        .min(self.times.len() - 2)
    }
}

impl Path for SampledPath {
    fn position(&self, t: f64) -> Vec<f64> {
        let i = self.piece(t);
        let w = (t - self.times[i]) / (self.times[i + 1] - self.times[i]);
        self.points[i].iter().zip(&self.points[i + 1]).map(|(a, b)| a + w * (b - a)).collect()
    }

    fn velocity(&self, t: f64) -> Vec<f64> {
        let i = self.piece(t);
        let dt = self.times[i + 1] - self.times[i];
        self.points[i].iter().zip(&self.points[i + 1]).map(|(a, b)| (b - a) / dt).collect()
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.times.clone()
    }
}

/// `∫ F(γ, γ') dt` over `[t0, t1]` by adaptive quadrature on each smooth piece.
pub fn arc_length(metric: &dyn FinslerStructure, path: &dyn Path, t0: f64, t1: f64, tol: f64) -> Result<f64> {
    if t1 < t0 {
        return Err(FinslerError::InvalidArgument(format!("reversed parameter range [{t0}, {t1}]")));
    }
    let mut cuts = vec![t0];
    cuts.extend(path.breakpoints().into_iter().filter(|&b| b > t0 && b < t1));
    cuts.push(t1);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        // Evaluate slightly inside each piece so the velocity is the piece's own.
        let (lo, hi) = (w[0], w[1]);
        let piece = quadrature::integrate(
            |t| {
                let tt = t.clamp(lo + 1e-15 * (hi - lo), hi - 1e-15 * (hi - lo));
                let v = path.velocity(tt);
                if v.iter().all(|&c| c == 0.0) {
                    return Ok(0.0);
                }
                metric.norm(&path.position(t), &v)
            },
            lo,
            hi,
            tol,
        )?;
        total += piece;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{Euclidean, FnMetric, IntervalFunk, Randers, RandersSpec};

    #[test]
    fn euclidean_homogeneity_is_exact() {
        let m = Euclidean::new(2);
        let samples = vec![(vec![0.1, 0.2], vec![1.0, -2.0], 3.5), (vec![0.0, 0.0], vec![0.3, 0.4], 0.1)];
        let r = validate_homogeneity(&m, &samples, 1e-12).unwrap();
        assert!(r.passed());
        assert_eq!(r.checks[0].max_residual, 0.0);
    }

    #[test]
    fn squared_norm_fails_homogeneity() {
        let m = FnMetric::new(2, "squared", |_x, y| y.iter().map(|v| v * v).sum());
        let samples = vec![(vec![0.0, 0.0], vec![1.0, 1.0], 2.0)];
        let r = validate_homogeneity(&m, &samples, 1e-10).unwrap();
        assert!(!r.passed());
    }

    #[test]
    fn euclidean_convexity_min_eigenvalue_one() {
        let m = Euclidean::new(3);
        let samples = vec![(vec![0.0; 3], vec![1.0, 2.0, 3.0])];
        let r = validate_strong_convexity(&m, &samples, &EngineConfig::default()).unwrap();
        assert!(r.passed());
        assert!((r.checks[0].max_residual + 1.0).abs() < 1e-12);
    }

    #[test]
    fn oversized_randers_one_form_fails_convexity_scan() {
        let spec = RandersSpec::constant(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![1.5, 0.0]);
        let m = Randers::new_unchecked(spec).unwrap();
        // Scan directions around the circle.
        let samples: Vec<_> = (0..16)
            .map(|k| {
                let th = k as f64 * std::f64::consts::TAU / 16.0;
                (vec![0.0, 0.0], vec![th.cos(), th.sin()])
            })
            .collect();
        let r = validate_strong_convexity(&m, &samples, &EngineConfig::default()).unwrap();
        assert!(!r.passed());
    }

    #[test]
    fn sample_outside_domain_is_a_domain_error() {
        let m = IntervalFunk::new(1.0).unwrap();
        let samples = vec![(vec![1.5], vec![1.0], 2.0)];
        let err = validate_homogeneity(&m, &samples, 1e-10).unwrap_err();
        assert_eq!(err, FinslerError::Domain { point: vec![1.5] });
    }

    #[test]
    fn arc_length_examples() {
        let e = Euclidean::new(2);
        let seg = SampledPath::segment(&[0.0, 0.0], &[1.0, 0.0]);
        assert!((arc_length(&e, &seg, 0.0, 1.0, 1e-13).unwrap() - 1.0).abs() < 1e-13);

        let f = IntervalFunk::new(1.0).unwrap();
        let fwd = SampledPath::segment(&[0.0], &[0.5]);
        let l = arc_length(&f, &fwd, 0.0, 1.0, 1e-13).unwrap();
        assert!((l - 2f64.ln()).abs() < 1e-12);
        let back = SampledPath::segment(&[0.5], &[0.0]);
        let l = arc_length(&f, &back, 0.0, 1.0, 1e-13).unwrap();
        assert!((l - 1.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn arc_length_is_additive_over_pieces() {
        let f = IntervalFunk::new(2.0).unwrap();
        let path = SampledPath::new(vec![0.0, 1.0, 2.5], vec![vec![-0.6], vec![0.2], vec![-0.1]]).unwrap();
        let whole = arc_length(&f, &path, 0.0, 2.5, 1e-13).unwrap();
        let a = arc_length(&f, &path, 0.0, 0.7, 1e-13).unwrap();
        let b = arc_length(&f, &path, 0.7, 2.5, 1e-13).unwrap();
        assert!((whole - a - b).abs() < 1e-11);
    }
}
