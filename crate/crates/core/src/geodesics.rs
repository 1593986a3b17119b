//! Spray coefficients, geodesic initial- and boundary-value problems, and the
//! induced distance.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::diffengine::{self, DerivativeRequest, EnergyField, EngineConfig, Jet, Mode};
use crate::error::{FinslerError, Result};
use crate::ode::{self, OdeOptions, Termination, Track};
use crate::scalar::{solve, Scalar};
use crate::structure::{FinslerStructure, Metric};

/// Spray coefficients at a line element.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SprayData {
    pub g: Vec<f64>,
    /// `∂G^i/∂y^j`, available when the spray came from jets.
    pub jacobian: Option<Vec<Vec<f64>>>,
}

/// `G^i = ½ g^{il} (F²_{x^k y^l} y^k − F²_{x^l})` as jets of valid order
/// `order`, or `None` for metrics without jet support.
pub(crate) fn spray_jets(metric: &dyn FinslerStructure, x: &[f64], y: &[f64], order: usize) -> Option<Result<Vec<Jet>>> {
    let n = x.len();
    let (xj, yj) = diffengine::seed_jets(x, y, order + 2);
    let f = metric.norm_jet(&xj, &yj)?;
    Some(f.and_then(|f| {
        let e = f.square();
        let ey: Vec<Jet> = (0..n).map(|l| e.diff(n + l)).collect();
        let g: Vec<Vec<Jet>> = (0..n).map(|l| (0..n).map(|m| ey[l].diff(n + m) * 0.5).collect()).collect();
        let rhs: Vec<Jet> = (0..n)
            .map(|l| {
                let mut acc = -e.diff(l);
                for k in 0..n {
                    acc = acc + ey[l].diff(k) * yj[k].clone();
                }
                acc * 0.5
            })
            .collect();
        solve(g, rhs).ok_or_else(|| FinslerError::Convexity(format!("singular fundamental tensor at x = {x:?}, y = {y:?}")))
    }))
}

fn spray_fd(metric: &dyn FinslerStructure, x: &[f64], y: &[f64], cfg: &EngineConfig) -> Result<Vec<f64>> {
    let n = x.len();
    let field = EnergyField(metric);
    let req = |xo: Vec<u8>, yo: Vec<u8>| DerivativeRequest {
        x: x.to_vec(),
        y: y.to_vec(),
        x_orders: xo,
        y_orders: yo,
    };
    let unit = |i: usize| {
        let mut v = vec![0u8; n];
        v[i] = 1;
        v
    };
    let g = diffengine::fundamental_tensor(metric, x, y, cfg)?;
    let mut rhs = DVector::zeros(n);
    for l in 0..n {
        let mut acc = -diffengine::partial(&field, &req(unit(l), vec![0; n]), cfg)?;
        for k in 0..n {
            acc += diffengine::partial(&field, &req(unit(k), unit(l)), cfg)? * y[k];
        }
        rhs[l] = 0.5 * acc;
    }
    let sol = g
        .lu()
        .solve(&rhs)
        .ok_or_else(|| FinslerError::Convexity(format!("singular fundamental tensor at x = {x:?}, y = {y:?}")))?;
    Ok(sol.iter().copied().collect())
}

/// Spray vector `G(x, y)`: analytic provider, then jets, then finite differences.
pub fn spray_vector(metric: &dyn FinslerStructure, x: &[f64], y: &[f64], cfg: &EngineConfig) -> Result<Vec<f64>> {
    metric.check_line_element(x, y)?;
    if let Some(g) = metric.spray_analytic(x, y) {
        return Ok(g);
    }
    if cfg.mode == Mode::AutomaticForward {
        if let Some(g) = spray_jets(metric, x, y, 0) {
            return Ok(g?.iter().map(|j| j.value()).collect());
        }
    }
    spray_fd(metric, x, y, cfg)
}

/// Spray coefficients with the `y`-Jacobian when it is cheaply available.
pub fn spray(metric: &dyn FinslerStructure, x: &[f64], y: &[f64], cfg: &EngineConfig) -> Result<SprayData> {
    metric.check_line_element(x, y)?;
    if y.iter().all(|&v| v == 0.0) {
        return Err(FinslerError::InvalidArgument("spray needs y != 0".into()));
    }
    if cfg.mode == Mode::AutomaticForward {
        if let Some(g) = spray_jets(metric, x, y, 1) {
            let g = g?;
            let n = x.len();
            let jac = g.iter().map(|gi| (0..n).map(|j| gi.diff(n + j).value()).collect()).collect();
            let values = metric.spray_analytic(x, y).unwrap_or_else(|| g.iter().map(|j| j.value()).collect());
            return Ok(SprayData {
                g: values,
                jacobian: Some(jac),
            });
        }
    }
    Ok(SprayData {
        g: spray_vector(metric, x, y, cfg)?,
        jacobian: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicOptions {
    pub ode: OdeOptions,
    /// Integration stops once the normalized boundary defect drops below this.
    pub boundary_margin: f64,
    pub engine: EngineConfig,
    /// Fixed substeps used when re-integrating for dense output.
    pub dense_substeps: usize,
}

impl Default for GeodesicOptions {
    fn default() -> Self {
        GeodesicOptions {
            ode: OdeOptions::default(),
            boundary_margin: 1e-6,
            engine: EngineConfig::default(),
            dense_substeps: 8,
        }
    }
}

/// Right-hand side of `x' = v, v' = −G(x, v)` on states `[x, v]`.
pub(crate) fn geodesic_rhs<'a>(metric: &'a dyn FinslerStructure, margin: f64, cfg: EngineConfig) -> impl Fn(f64, &[f64]) -> Result<Vec<f64>> + 'a {
    move |_s, state| {
        let n = state.len() / 2;
        let (x, v) = state.split_at(n);
        if metric.boundary_defect(x).is_some_and(|phi| !(phi >= margin)) || x.iter().any(|c| !c.is_finite()) {
            return Err(FinslerError::Domain { point: x.to_vec() });
        }
        let g = spray_vector(metric, x, v, &cfg)?;
        let mut out = v.to_vec();
        out.extend(g.into_iter().map(|c| -c));
        Ok(out)
    }
}

/// Arc-length parametrized geodesic sampled at the integrator's nodes, with
/// dense evaluation in between.
#[derive(Debug, Clone)]
pub struct GeodesicSegment {
    metric: Metric,
    opts: GeodesicOptions,
    track: Track,
    pub truncated_lo: bool,
    pub truncated_hi: bool,
}

impl GeodesicSegment {
    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn options(&self) -> &GeodesicOptions {
        &self.opts
    }

    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    /// Parameter interval `[s_lo, s_hi]`; the initial point sits at `s = 0`.
    pub fn s_range(&self) -> (f64, f64) {
        self.track.range()
    }

    pub fn length(&self) -> f64 {
        let (a, b) = self.s_range();
        b - a
    }

    pub fn nodes(&self) -> &[f64] {
        &self.track.t
    }

    /// `(s, x, x')` at the integrator nodes.
    pub fn samples(&self) -> impl Iterator<Item = (f64, &[f64], &[f64])> {
        let n = self.dim();
        self.track.t.iter().zip(&self.track.y).map(move |(s, st)| (*s, &st[..n], &st[n..]))
    }

    /// State `[x, x']` at arc length `s`.
    pub fn state(&self, s: f64) -> Result<Vec<f64>> {
        let rhs = geodesic_rhs(self.metric.as_ref(), 0.0, self.opts.engine);
        self.track.eval(&rhs, s, self.opts.dense_substeps)
    }

    pub fn position(&self, s: f64) -> Result<Vec<f64>> {
        let mut st = self.state(s)?;
        st.truncate(self.dim());
        Ok(st)
    }

    pub fn velocity(&self, s: f64) -> Result<Vec<f64>> {
        Ok(self.state(s)?.split_off(self.dim()))
    }

    /// `max |F(x, x') − 1|` over the nodes.
    pub fn speed_drift(&self) -> Result<f64> {
        let mut worst = 0.0f64;
        for (_, x, v) in self.samples() {
            worst = worst.max((self.metric.norm(x, v)? - 1.0).abs());
        }
        Ok(worst)
    }
}

fn unit_check(metric: &dyn FinslerStructure, x0: &[f64], y0: &[f64]) -> Result<()> {
    let f = metric.norm(x0, y0)?;
    if (f - 1.0).abs() > 1e-9 {
        return Err(FinslerError::InvalidArgument(format!("initial vector has norm {f}, expected 1")));
    }
    Ok(())
}

/// Integrates the unit-speed geodesic through `x0` with velocity `y0` over
/// `s ∈ [-back, forward]`, stopping early near the domain boundary.
pub fn extend_geodesic(metric: &Metric, x0: &[f64], y0: &[f64], back: f64, forward: f64, opts: &GeodesicOptions) -> Result<GeodesicSegment> {
    unit_check(metric.as_ref(), x0, y0)?;
    if !(back >= 0.0 && forward >= 0.0) {
        return Err(FinslerError::InvalidArgument("extension lengths must be nonnegative".into()));
    }
    let rhs = geodesic_rhs(metric.as_ref(), opts.boundary_margin, opts.engine);
    let mut start = x0.to_vec();
    start.extend_from_slice(y0);
    if let Err(FinslerError::Domain { .. }) = rhs(0.0, &start) {
        return Err(FinslerError::Domain { point: x0.to_vec() });
    }
    let fwd = ode::integrate(&rhs, 0.0, &start, forward, &opts.ode)?;
    let bwd = ode::integrate(&rhs, 0.0, &start, -back, &opts.ode)?;
    let truncated_lo = bwd.status == Termination::Boundary;
    let truncated_hi = fwd.status == Termination::Boundary;
    Ok(GeodesicSegment {
        metric: metric.clone(),
        opts: *opts,
        track: Track::two_sided(bwd, fwd),
        truncated_lo,
        truncated_hi,
    })
}

/// Unit-speed geodesic from `x0` in direction `y0` (with `F(x0, y0) = 1`)
/// over arc length `length`.
pub fn integrate_geodesic(metric: &Metric, x0: &[f64], y0: &[f64], length: f64, opts: &GeodesicOptions) -> Result<GeodesicSegment> {
    extend_geodesic(metric, x0, y0, 0.0, length, opts)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnectOptions {
    /// Required terminal miss distance (coordinate norm).
    pub tol: f64,
    pub max_iterations: usize,
    pub geodesic: GeodesicOptions,
}

impl Default for ConnectOptions {
    fn default() -> Self {
        ConnectOptions {
            tol: 1e-10,
            max_iterations: 60,
            geodesic: GeodesicOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BVPResult {
    pub segment: GeodesicSegment,
    pub miss: f64,
    pub iterations: usize,
}

impl BVPResult {
    pub fn length(&self) -> f64 {
        self.segment.length()
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Endpoint of the geodesic leaving `x` with initial coordinate velocity `w`
/// after arc length `F(x, w)`.
fn shoot(metric: &Metric, x: &[f64], w: &[f64], opts: &GeodesicOptions) -> Result<(Vec<f64>, GeodesicSegment)> {
    let len = metric.norm(x, w)?;
    if !(len > 0.0) {
        return Err(FinslerError::InvalidArgument("zero shooting vector".into()));
    }
    let dir: Vec<f64> = w.iter().map(|c| c / len).collect();
    let seg = integrate_geodesic(metric, x, &dir, len, opts)?;
    if seg.truncated_hi {
        return Err(FinslerError::Domain { point: seg.position(seg.s_range().1)? });
    }
    let end = seg.track.y[seg.track.y.len() - 1][..x.len()].to_vec();
    Ok((end, seg))
}

/// Finds a geodesic from `x` to `y` by Newton shooting over the initial
/// velocity, starting from the chord `y − x`.
pub fn connect(metric: &Metric, x: &[f64], y: &[f64], opts: &ConnectOptions) -> Result<BVPResult> {
    metric.check_point(x)?;
    metric.check_point(y)?;
    let n = x.len();
    let chord: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
    if norm(&chord) == 0.0 {
        return Err(FinslerError::InvalidArgument("connect needs distinct endpoints".into()));
    }
    let mut best_miss = f64::INFINITY;
    let mut total_iter = 0;
    for scale in [1.0, 2.0, 0.5, 4.0, 0.25] {
        let mut w: Vec<f64> = chord.iter().map(|c| c * scale).collect();
        let Ok((mut end, mut seg)) = shoot(metric, x, &w, &opts.geodesic) else {
            continue;
        };
        let mut res: Vec<f64> = end.iter().zip(y).map(|(a, b)| a - b).collect();
        let mut miss = norm(&res);
        for _ in 0..opts.max_iterations {
            best_miss = best_miss.min(miss);
            if miss <= opts.tol {
                return Ok(BVPResult {
                    segment: seg,
                    miss,
                    iterations: total_iter,
                });
            }
            total_iter += 1;
            let mut jac = DMatrix::zeros(n, n);
            let h = 1e-6 * norm(&w).max(1e-3);
            let mut ok = true;
            for j in 0..n {
                let mut wp = w.clone();
                let mut wm = w.clone();
                wp[j] += h;
                wm[j] -= h;
                match (shoot(metric, x, &wp, &opts.geodesic), shoot(metric, x, &wm, &opts.geodesic)) {
                    (Ok((ep, _)), Ok((em, _))) => {
                        for i in 0..n {
                            jac[(i, j)] = (ep[i] - em[i]) / (2.0 * h);
                        }
                    }
                    _ => {
                        ok = false;
                        break;
                    }
                }
            }
            let delta = if ok { jac.lu().solve(&DVector::from_column_slice(&res)) } else { None };
            let Some(delta) = delta else { break };
            let mut lambda = 1.0;
            let mut improved = false;
            while lambda > 1e-4 {
                let cand: Vec<f64> = w.iter().zip(delta.iter()).map(|(a, d)| a - lambda * d).collect();
                if let Ok((e, s)) = shoot(metric, x, &cand, &opts.geodesic) {
                    let r: Vec<f64> = e.iter().zip(y).map(|(a, b)| a - b).collect();
                    let m = norm(&r);
                    if m < miss {
                        w = cand;
                        end = e;
                        seg = s;
                        res = r;
                        miss = m;
                        improved = true;
                        break;
                    }
                }
                lambda *= 0.5;
            }
            if !improved {
                break;
            }
        }
        best_miss = best_miss.min(miss);
        if miss <= opts.tol {
            return Ok(BVPResult {
                segment: seg,
                miss,
                iterations: total_iter,
            });
        }
        log::debug!("shooting from scale {scale} stalled at miss {miss:e} (endpoint {end:?})");
    }
    Err(FinslerError::Connectivity { miss: best_miss })
}

/// Length of the connecting geodesic from `x` to `y`.
pub fn finsler_distance(metric: &Metric, x: &[f64], y: &[f64], opts: &ConnectOptions) -> Result<f64> {
    metric.check_point(x)?;
    metric.check_point(y)?;
    if x == y {
        return Ok(0.0);
    }
    Ok(connect(metric, x, y, opts)?.length())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{Euclidean, FunkBall, Klein};
    use std::sync::Arc;

    #[test]
    fn spray_examples() {
        let cfg = EngineConfig::default();
        let e = Euclidean::new(2);
        assert_eq!(spray(&e, &[0.3, 0.1], &[1.0, 2.0], &cfg).unwrap().g, vec![0.0, 0.0]);
        let k = Klein::new(2).unwrap();
        let g = spray(&k, &[0.0, 0.0], &[0.3, -0.7], &cfg).unwrap().g;
        assert!(g.iter().all(|c| c.abs() < 1e-15));
        let f = FunkBall::new(2, 1.0).unwrap();
        let g = spray(&f, &[0.5, 0.0], &[1.0, 0.0], &cfg).unwrap().g;
        assert!((g[0] - 2.0).abs() < 1e-12 && g[1].abs() < 1e-12, "{g:?}");
    }

    #[test]
    fn analytic_and_jet_sprays_agree() {
        let x = [0.2, -0.4];
        let y = [0.7, 0.3];
        for m in [Arc::new(Klein::new(2).unwrap()) as Metric, Arc::new(FunkBall::new(2, 1.5).unwrap())] {
            let analytic = m.spray_analytic(&x, &y).unwrap();
            let jet: Vec<f64> = spray_jets(m.as_ref(), &x, &y, 0).unwrap().unwrap().iter().map(|j| j.value()).collect();
            let fd = spray_fd(m.as_ref(), &x, &y, &EngineConfig::finite_difference()).unwrap();
            for i in 0..2 {
                assert!((analytic[i] - jet[i]).abs() < 1e-12, "{} {analytic:?} {jet:?}", m.label());
                assert!((analytic[i] - fd[i]).abs() < 1e-6, "{} {analytic:?} {fd:?}", m.label());
            }
        }
    }

    #[test]
    fn klein_radial_geodesic_endpoint() {
        let k: Metric = Arc::new(Klein::new(2).unwrap());
        let seg = integrate_geodesic(&k, &[0.0, 0.0], &[1.0, 0.0], 0.5f64.atanh(), &GeodesicOptions::default()).unwrap();
        let end = seg.position(seg.s_range().1).unwrap();
        assert!((end[0] - 0.5).abs() < 1e-9 && end[1].abs() < 1e-12);
        assert!(seg.speed_drift().unwrap() < 1e-9);
    }

    #[test]
    fn connect_examples() {
        let opts = ConnectOptions::default();
        let e: Metric = Arc::new(Euclidean::new(2));
        let d = finsler_distance(&e, &[0.0, 0.0], &[1.0, 1.0], &opts).unwrap();
        assert!((d - 2f64.sqrt()).abs() < 1e-9);
        let f: Metric = Arc::new(FunkBall::new(2, 1.0).unwrap());
        let fwd = finsler_distance(&f, &[0.0, 0.0], &[0.5, 0.0], &opts).unwrap();
        let bwd = finsler_distance(&f, &[0.5, 0.0], &[0.0, 0.0], &opts).unwrap();
        assert!((fwd - 2f64.ln()).abs() < 1e-8, "{fwd}");
        assert!((bwd - 1.5f64.ln()).abs() < 1e-8, "{bwd}");
        assert_eq!(finsler_distance(&f, &[0.1, 0.1], &[0.1, 0.1], &opts).unwrap(), 0.0);
    }

    #[test]
    fn boundary_truncation_is_flagged() {
        let k: Metric = Arc::new(Klein::new(2).unwrap());
        let seg = integrate_geodesic(&k, &[0.0, 0.0], &[1.0, 0.0], 50.0, &GeodesicOptions::default()).unwrap();
        assert!(seg.truncated_hi);
        let (_, hi) = seg.s_range();
        let x = seg.position(hi).unwrap();
        let phi = 1.0 - x[0] * x[0] - x[1] * x[1];
        assert!((1e-6..1e-5).contains(&phi), "phi = {phi}");
    }
}
