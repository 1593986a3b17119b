//! Ricci curvature from spray derivatives, the negative Ricci bound checker,
//! and projective factors between metrics.
//!
//! With `G` the spray of `x'' + G = 0`,
//! `2F²Ric = 2 ∂_{x^i}G^i − ½ ∂_{y^j}G^i ∂_{y^i}G^j − y^j ∂_{y^i}∂_{x^j}G^i + G^j ∂_{y^i}∂_{y^j}G^i`
//! and `Ric_ik = ½ ∂_{y^i}∂_{y^k}(F²Ric)`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::diffengine::{self, central_mixed, EngineConfig, FdPlan, Jet, Mode};
use crate::error::{FinslerError, Result};
use crate::geodesics::{spray_jets, spray_vector};
use crate::scalar::Scalar;
use crate::structure::{max_eigenvalue, FinslerStructure};

/// Curvature at a line element.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureData {
    pub ric: f64,
    pub ric_tensor: Vec<Vec<f64>>,
    /// `ℓ = y / F(x, y)`.
    pub ell: Vec<f64>,
    /// `R^i_k`, when computed from jets.
    pub r_matrix: Option<Vec<Vec<f64>>>,
    /// `|Ric_ik ℓ^i ℓ^k − Ric|`.
    pub contraction_residual: f64,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// Right-hand side of the Ricci identity, `2F²Ric`, from spray jets.
fn twice_energy_ricci(g: &[Jet], y: &[Jet]) -> Jet {
    let n = g.len();
    let gy: Vec<Vec<Jet>> = g.iter().map(|gi| (0..n).map(|j| gi.diff(n + j)).collect()).collect();
    let mut acc = g[0].zero_like();
    for i in 0..n {
        acc = acc + g[i].diff(i) * 2.0;
        for j in 0..n {
            acc = acc - gy[i][j].clone() * gy[j][i].clone() * 0.5;
            acc = acc - y[j].clone() * gy[i][i].diff(j);
            acc = acc + g[j].clone() * gy[i][i].diff(n + j);
        }
    }
    acc
}

fn seeded_y(x: &[f64], y: &[f64], order: usize) -> Vec<Jet> {
    diffengine::seed_jets(x, y, order).1
}

/// Derivatives of the spray by finite differences on a black-box metric:
/// returns `(G, G_x, G_y, G_yx, G_yy)` with `G_x[i][k] = ∂_{x^k}G^i` etc.
#[allow(clippy::type_complexity)]
fn spray_derivatives_fd(
    metric: &dyn FinslerStructure,
    x: &[f64],
    y: &[f64],
    cfg: &EngineConfig,
) -> Result<(Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<Vec<Vec<f64>>>, Vec<Vec<Vec<f64>>>)> {
    let n = x.len();
    let inner = EngineConfig {
        mode: Mode::FiniteDifference,
        ..*cfg
    };
    let outer = EngineConfig {
        mode: Mode::FiniteDifference,
        target_accuracy: cfg.target_accuracy.max(1e-3),
        richardson_levels: 1,
        ..*cfg
    };
    let f = |z: &[f64]| spray_vector(metric, &z[..n], &z[n..], &inner);
    let mut z = x.to_vec();
    z.extend_from_slice(y);
    let d = |orders: Vec<u8>| -> Result<Vec<f64>> {
        let plan = FdPlan::new(&z, n, &orders, &outer);
        central_mixed(&f, &z, &orders, &plan, &outer)
    };
    let unit = |vars: &[usize]| {
        let mut o = vec![0u8; 2 * n];
        for &v in vars {
            o[v] += 1;
        }
        o
    };
    let g0 = f(&z)?;
    let mut gx = vec![vec![0.0; n]; n];
    let mut gy = vec![vec![0.0; n]; n];
    let mut gyx = vec![vec![vec![0.0; n]; n]; n];
    let mut gyy = vec![vec![vec![0.0; n]; n]; n];
    for k in 0..n {
        let dx = d(unit(&[k]))?;
        let dy = d(unit(&[n + k]))?;
        for i in 0..n {
            gx[i][k] = dx[i];
            gy[i][k] = dy[i];
        }
        for j in 0..n {
            let dyx = d(unit(&[n + k, j]))?;
            let dyy = d(unit(&[n + k, n + j]))?;
            for i in 0..n {
                gyx[i][k][j] = dyx[i];
                gyy[i][k][j] = dyy[i];
            }
        }
    }
    Ok((g0, gx, gy, gyx, gyy))
}

/// `F²Ric` at `(x, y)`.
pub fn ricci_energy(metric: &dyn FinslerStructure, x: &[f64], y: &[f64], cfg: &EngineConfig) -> Result<f64> {
    metric.check_line_element(x, y)?;
    if y.iter().all(|&v| v == 0.0) {
        return Err(FinslerError::InvalidArgument("curvature needs y != 0".into()));
    }
    if cfg.mode == Mode::AutomaticForward {
        if let Some(g) = spray_jets(metric, x, y, 2) {
            return Ok(0.5 * twice_energy_ricci(&g?, &seeded_y(x, y, 4)).value());
        }
    }
    let (g, gx, gy, gyx, gyy) = spray_derivatives_fd(metric, x, y, cfg)?;
    let n = x.len();
    let mut acc = 0.0;
    for i in 0..n {
        acc += 2.0 * gx[i][i];
        for j in 0..n {
            acc -= 0.5 * gy[i][j] * gy[j][i];
            acc -= y[j] * gyx[i][i][j];
            acc += g[j] * gyy[i][i][j];
        }
    }
    Ok(0.5 * acc)
}

/// Ricci scalar `Ric(x, y)`, 0-homogeneous in `y`.
pub fn ricci_scalar(metric: &dyn FinslerStructure, x: &[f64], y: &[f64], cfg: &EngineConfig) -> Result<f64> {
    let e = ricci_energy(metric, x, y, cfg)?;
    let f = metric.norm(x, y)?;
    Ok(e / (f * f))
}

/// Ricci scalar, Akbar-Zadeh Ricci tensor and (from jets) `R^i_k`.
pub fn ricci_tensor(metric: &dyn FinslerStructure, x: &[f64], y: &[f64], cfg: &EngineConfig) -> Result<CurvatureData> {
    metric.check_line_element(x, y)?;
    if y.iter().all(|&v| v == 0.0) {
        return Err(FinslerError::InvalidArgument("curvature needs y != 0".into()));
    }
    let n = x.len();
    let f = metric.norm(x, y)?;
    let (ric_energy, tensor, r_matrix) = match (cfg.mode, spray_jets(metric, x, y, 4)) {
        (Mode::AutomaticForward, Some(g)) => {
            let g = g?;
            let yj = seeded_y(x, y, 6);
            let e = twice_energy_ricci(&g, &yj) * 0.5;
            let t = DMatrix::from_fn(n, n, |i, k| 0.5 * e.diff(n + i).diff(n + k).value());
            let r = DMatrix::from_fn(n, n, |i, k| {
                let mut acc = g[i].diff(k).value();
                for j in 0..n {
                    acc -= 0.5 * y[j] * g[i].diff(j).diff(n + k).value();
                    acc += 0.5 * g[j].value() * g[i].diff(n + j).diff(n + k).value();
                    acc -= 0.25 * g[i].diff(n + j).value() * g[j].diff(n + k).value();
                }
                acc
            });
            (e.value(), t, Some(r))
        }
        _ => {
            let e0 = ricci_energy(metric, x, y, cfg)?;
            let coarse = EngineConfig {
                mode: Mode::FiniteDifference,
                base_step: Some(cfg.base_step.unwrap_or(0.05)),
                richardson_levels: 1,
                target_accuracy: cfg.target_accuracy.max(1e-3),
            };
            let h = |z: &[f64]| Ok(vec![ricci_energy(metric, &z[..n], &z[n..], cfg)?]);
            let mut z = x.to_vec();
            z.extend_from_slice(y);
            let mut t = DMatrix::zeros(n, n);
            for i in 0..n {
                for k in 0..n {
                    let mut o = vec![0u8; 2 * n];
                    o[n + i] += 1;
                    o[n + k] += 1;
                    let plan = FdPlan::new(&z, n, &o, &coarse);
                    t[(i, k)] = 0.5 * central_mixed(&h, &z, &o, &plan, &coarse)?[0];
                }
            }
            (e0, t, None)
        }
    };
    let tensor = (&tensor + tensor.transpose()) * 0.5;
    let ell: Vec<f64> = y.iter().map(|v| v / f).collect();
    let ric = ric_energy / (f * f);
    let mut contracted = 0.0;
    for i in 0..n {
        for k in 0..n {
            contracted += tensor[(i, k)] * ell[i] * ell[k];
        }
    }
    let contraction_residual = (contracted - ric).abs();
    if contraction_residual > 1e-3 {
        return Err(FinslerError::Accuracy {
            what: "Ricci tensor contraction identity".into(),
            achieved: contraction_residual,
        });
    }
    Ok(CurvatureData {
        ric,
        ric_tensor: rows(&tensor),
        ell,
        r_matrix: r_matrix.map(|r| rows(&r)),
        contraction_residual,
    })
}

/// Outcome of testing `Ric_ij ⪯ −c² g_ij` on a sample set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RicciBoundReport {
    pub c: f64,
    pub tolerance: f64,
    /// Largest eigenvalue of `Ric_ij + c² g_ij` per sample.
    pub max_eigenvalues: Vec<f64>,
    pub worst: f64,
    pub pass: bool,
}

pub fn check_ricci_bound(
    metric: &dyn FinslerStructure,
    samples: &[(Vec<f64>, Vec<f64>)],
    c: f64,
    tolerance: f64,
    cfg: &EngineConfig,
) -> Result<RicciBoundReport> {
    if !(c > 0.0) {
        return Err(FinslerError::InvalidArgument(format!("c = {c} must be positive")));
    }
    let max_eigenvalues: Vec<f64> = samples
        .par_iter()
        .map(|(x, y)| -> Result<f64> {
            let data = ricci_tensor(metric, x, y, cfg)?;
            let g = diffengine::fundamental_tensor(metric, x, y, cfg)?;
            let n = x.len();
            let m = DMatrix::from_fn(n, n, |i, j| data.ric_tensor[i][j] + c * c * g[(i, j)]);
            Ok(max_eigenvalue(&m))
        })
        .collect::<Result<_>>()?;
    let worst = max_eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(RicciBoundReport {
        c,
        tolerance,
        pass: max_eigenvalues.iter().all(|&v| v <= tolerance),
        max_eigenvalues,
        worst,
    })
}

/// Least-squares factor `P` in `Ḡ = G + P y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProjectiveFactor {
    pub p: f64,
    /// `max_i |Ḡ^i − G^i − P y^i|`, relative to `max(|G|, |Ḡ|)` when that is nonzero.
    pub residual: f64,
}

fn fit_factor(g: &[f64], gbar: &[f64], y: &[f64]) -> ProjectiveFactor {
    let yy: f64 = y.iter().map(|v| v * v).sum();
    let p = g.iter().zip(gbar).zip(y).map(|((a, b), v)| (b - a) * v).sum::<f64>() / yy;
    let abs = g
        .iter()
        .zip(gbar)
        .zip(y)
        .map(|((a, b), v)| (b - a - p * v).abs())
        .fold(0.0, f64::max);
    let scale = g.iter().chain(gbar).map(|v| v * v).sum::<f64>().sqrt();
    ProjectiveFactor {
        p,
        residual: if scale > 0.0 { abs / scale } else { abs },
    }
}

/// Fits `P` and fails with [`FinslerError::NotProjective`] when the fit
/// residual exceeds `tolerance`.
pub fn projective_factor(
    f: &dyn FinslerStructure,
    fbar: &dyn FinslerStructure,
    x: &[f64],
    y: &[f64],
    tolerance: f64,
    cfg: &EngineConfig,
) -> Result<ProjectiveFactor> {
    if f.dim() != fbar.dim() {
        return Err(FinslerError::Dimension {
            expected: f.dim(),
            got: fbar.dim(),
        });
    }
    if y.iter().all(|&v| v == 0.0) {
        return Err(FinslerError::InvalidArgument("projective factor needs y != 0".into()));
    }
    let g = spray_vector(f, x, y, cfg)?;
    let gbar = spray_vector(fbar, x, y, cfg)?;
    let fit = fit_factor(&g, &gbar, y);
    if fit.residual > tolerance {
        return Err(FinslerError::NotProjective { residual: fit.residual });
    }
    Ok(fit)
}

/// Both sides of the transformation law of `F²Ric` under `Ḡ = G + P y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RicTransformation {
    pub p: f64,
    /// `F̄²R̄ic − F²Ric`.
    pub lhs: f64,
    /// `((n−1)/2)(P_{x^i} y^i − P_{y^i} G^i + P²/2)`.
    pub stated_rhs: f64,
    /// `((n−1)/4) P² − ((n−1)/2)(P_{x^i} y^i − P_{y^i} G^i)`.
    pub corrected_rhs: f64,
    pub stated_residual: f64,
    pub corrected_residual: f64,
}

/// `(P, ∂_x P, ∂_y P)` at `(x, y)`.
fn factor_with_derivatives(
    f: &dyn FinslerStructure,
    fbar: &dyn FinslerStructure,
    x: &[f64],
    y: &[f64],
    cfg: &EngineConfig,
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let n = x.len();
    if cfg.mode == Mode::AutomaticForward {
        if let (Some(g), Some(gb)) = (spray_jets(f, x, y, 1), spray_jets(fbar, x, y, 1)) {
            let (g, gb) = (g?, gb?);
            let yj = seeded_y(x, y, 3);
            let mut num = g[0].zero_like();
            let mut den = g[0].zero_like();
            for i in 0..n {
                num = num + (gb[i].clone() - g[i].clone()) * yj[i].clone();
                den = den + yj[i].square();
            }
            let p = num / den;
            let px = (0..n).map(|i| p.diff(i).value()).collect();
            let py = (0..n).map(|i| p.diff(n + i).value()).collect();
            return Ok((p.value(), px, py));
        }
    }
    let fd = EngineConfig {
        mode: Mode::FiniteDifference,
        target_accuracy: cfg.target_accuracy.max(1e-5),
        ..*cfg
    };
    let pf = |z: &[f64]| -> Result<Vec<f64>> {
        let (xx, yy) = z.split_at(n);
        let g = spray_vector(f, xx, yy, &fd)?;
        let gb = spray_vector(fbar, xx, yy, &fd)?;
        Ok(vec![fit_factor(&g, &gb, yy).p])
    };
    let mut z = x.to_vec();
    z.extend_from_slice(y);
    let p = pf(&z)?[0];
    let mut grads = Vec::with_capacity(2 * n);
    for v in 0..2 * n {
        let mut o = vec![0u8; 2 * n];
        o[v] = 1;
        let plan = FdPlan::new(&z, n, &o, &fd);
        grads.push(central_mixed(&pf, &z, &o, &plan, &fd)?[0]);
    }
    let py = grads.split_off(n);
    Ok((p, grads, py))
}

pub fn verify_ric_transformation(
    f: &dyn FinslerStructure,
    fbar: &dyn FinslerStructure,
    x: &[f64],
    y: &[f64],
    cfg: &EngineConfig,
) -> Result<RicTransformation> {
    projective_factor(f, fbar, x, y, 1e-6, cfg)?;
    let n = x.len();
    if n < 2 {
        return Err(FinslerError::InvalidArgument("the transformation law needs n >= 2".into()));
    }
    let (p, px, py) = factor_with_derivatives(f, fbar, x, y, cfg)?;
    let g = spray_vector(f, x, y, cfg)?;
    let lhs = ricci_energy(fbar, x, y, cfg)? - ricci_energy(f, x, y, cfg)?;
    let pxy: f64 = px.iter().zip(y).map(|(a, b)| a * b).sum();
    let pyg: f64 = py.iter().zip(&g).map(|(a, b)| a * b).sum();
    let m = (n - 1) as f64;
    let stated_rhs = 0.5 * m * (pxy - pyg + 0.5 * p * p);
    let corrected_rhs = 0.25 * m * p * p - 0.5 * m * (pxy - pyg);
    Ok(RicTransformation {
        p,
        lhs,
        stated_rhs,
        corrected_rhs,
        stated_residual: (lhs - stated_rhs).abs(),
        corrected_residual: (lhs - corrected_rhs).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{Euclidean, FnMetric, FunkBall, Klein, Randers, RandersSpec};

    #[test]
    fn euclidean_is_flat() {
        let e = Euclidean::new(3);
        let d = ricci_tensor(&e, &[0.1, 0.2, 0.3], &[1.0, 0.5, -0.2], &EngineConfig::default()).unwrap();
        assert_eq!(d.ric, 0.0);
        assert!(d.ric_tensor.iter().flatten().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn klein_and_funk_constants() {
        let cfg = EngineConfig::default();
        let k = Klein::new(2).unwrap();
        let r = ricci_scalar(&k, &[0.3, -0.1], &[0.2, 1.0], &cfg).unwrap();
        assert!((r + 1.0).abs() < 1e-10, "{r}");
        let f = FunkBall::new(3, 2.0).unwrap();
        let r = ricci_scalar(&f, &[0.3, -0.1, 0.2], &[0.2, 1.0, -0.4], &cfg).unwrap();
        assert!((r + 2.0).abs() < 1e-9, "{r}");
    }

    #[test]
    fn klein_tensor_is_einstein_and_trace_matches() {
        let k = Klein::new(3).unwrap();
        let x = [0.2, 0.4, -0.3];
        let y = [0.5, -1.0, 0.25];
        let cfg = EngineConfig::default();
        let d = ricci_tensor(&k, &x, &y, &cfg).unwrap();
        let g = diffengine::fundamental_tensor(&k, &x, &y, &cfg).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((d.ric_tensor[i][j] + 2.0 * g[(i, j)]).abs() < 1e-9);
            }
        }
        let r = d.r_matrix.unwrap();
        let trace: f64 = (0..3).map(|i| r[i][i]).sum();
        let f2 = k.norm(&x, &y).unwrap().powi(2);
        assert!((trace - d.ric * f2).abs() < 1e-9);
    }

    #[test]
    fn black_box_klein_curvature_is_rough_but_close() {
        let bb = FnMetric::new(2, "klein-bb", |x, y| {
            let phi = 1.0 - x[0] * x[0] - x[1] * x[1];
            let xy = x[0] * y[0] + x[1] * y[1];
            ((y[0] * y[0] + y[1] * y[1]) / phi + xy * xy / (phi * phi)).sqrt()
        })
        .with_boundary(|x| 1.0 - x[0] * x[0] - x[1] * x[1]);
        let r = ricci_scalar(&bb, &[0.2, 0.1], &[1.0, 0.3], &EngineConfig::default()).unwrap();
        assert!((r + 1.0).abs() < 1e-2, "{r}");
    }

    #[test]
    fn bound_checks() {
        let cfg = EngineConfig::default();
        let samples = vec![(vec![0.1, 0.2], vec![1.0, 0.0]), (vec![-0.5, 0.3], vec![0.3, 0.7])];
        let k = Klein::new(2).unwrap();
        let rep = check_ricci_bound(&k, &samples, 1.0, 1e-4, &cfg).unwrap();
        assert!(rep.pass && rep.worst.abs() < 1e-8);
        let e = Euclidean::new(2);
        let rep = check_ricci_bound(&e, &samples, 0.5, 1e-4, &cfg).unwrap();
        assert!(!rep.pass && (rep.worst - 0.25).abs() < 1e-12);
    }

    #[test]
    fn projective_factor_examples() {
        let cfg = EngineConfig::default();
        let e = Euclidean::new(2);
        let k = Klein::new(2).unwrap();
        let same = projective_factor(&k, &k, &[0.1, 0.1], &[1.0, 0.0], 1e-6, &cfg).unwrap();
        assert_eq!(same.p, 0.0);
        let pf = projective_factor(&e, &k, &[0.5, 0.0], &[1.0, 0.0], 1e-6, &cfg).unwrap();
        assert!((pf.p - 2.0 * 0.5 / 0.75).abs() < 1e-12 && pf.residual < 1e-12);
        let curl = Randers::new(RandersSpec {
            a: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            b0: vec![0.0, 0.0],
            b_linear: Some(vec![vec![0.0, -0.3], vec![0.3, 0.0]]),
            domain_radius: Some(1.0),
        })
        .unwrap();
        let err = projective_factor(&e, &curl, &[0.2, 0.1], &[1.0, 0.4], 1e-6, &cfg).unwrap_err();
        assert!(matches!(err, FinslerError::NotProjective { .. }));
    }

    #[test]
    fn corrected_transformation_law_holds() {
        let cfg = EngineConfig::default();
        let e = Euclidean::new(2);
        let k = Klein::new(2).unwrap();
        let f = FunkBall::new(2, 1.0).unwrap();
        let x = [0.3, -0.2];
        let y = [0.4, 0.9];
        let t = verify_ric_transformation(&e, &k, &x, &y, &cfg).unwrap();
        assert!(t.corrected_residual < 1e-9, "{t:?}");
        let t = verify_ric_transformation(&k, &f, &x, &y, &cfg).unwrap();
        assert!(t.corrected_residual < 1e-9, "{t:?}");
        let t = verify_ric_transformation(&k, &k, &x, &y, &cfg).unwrap();
        assert_eq!(t.stated_residual, 0.0);
    }
}
