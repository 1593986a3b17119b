//! Schwarzian derivative, Möbius maps, and the projective parameter of a
//! geodesic obtained from `w'' + ½ q w = 0` with `π = w₁ / w₂`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::curvature::ricci_energy;
use crate::diffengine::{central_mixed, EngineConfig, FdPlan, Jet, Layout, Mode};
use crate::error::{FinslerError, Result};
use crate::geodesics::{geodesic_rhs, GeodesicSegment};
use crate::ode::{self, OdeOptions, Termination, Track};
use crate::scalar::Scalar;

/// Derivatives `|f'|` at or below this are treated as critical points.
pub const CRITICAL_THRESHOLD: f64 = 1e-12;

/// Boundary defect below which a stalled integration counts as truncated.
const NEAR_BOUNDARY: f64 = 1e-4;

fn schwarzian_from(d1: f64, d2: f64, d3: f64, t: f64) -> Result<f64> {
    if !(d1.abs() > CRITICAL_THRESHOLD) {
        return Err(FinslerError::CriticalPoint { at: t });
    }
    let r = d2 / d1;
    Ok(d3 / d1 - 1.5 * r * r)
}

/// `{f, t} = f'''/f' − (3/2)(f''/f')²` for a function written against jets.
pub fn schwarzian<F>(f: F, t: f64) -> Result<f64>
where
    F: Fn(&Jet) -> Result<Jet>,
{
    let layout = Layout::get(1, 3);
    let v = f(&Jet::variable(&layout, t, 0))?;
    schwarzian_from(v.derivative(&[1]), v.derivative(&[2]), v.derivative(&[3]), t)
}

/// Schwarzian of a plain callable by central differences with step `h`.
pub fn schwarzian_fd<F>(f: F, t: f64, h: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let cfg = EngineConfig {
        mode: Mode::FiniteDifference,
        base_step: Some(h),
        richardson_levels: 2,
        target_accuracy: 1e-3,
    };
    let g = |z: &[f64]| Ok(vec![f(z[0])?]);
    let mut d = [0.0; 3];
    for (k, slot) in d.iter_mut().enumerate() {
        let orders = [k as u8 + 1];
        let plan = FdPlan::new(&[t], 1, &orders, &cfg);
        *slot = central_mixed(&g, &[t], &orders, &plan, &cfg)?[0];
    }
    schwarzian_from(d[0], d[1], d[2], t)
}

/// `|{f∘g, t} − ({f, g(t)} g'(t)² + {g, t})|`.
pub fn check_composition<F, G>(f: F, g: G, t: f64) -> Result<f64>
where
    F: Fn(&Jet) -> Result<Jet>,
    G: Fn(&Jet) -> Result<Jet>,
{
    let lhs = schwarzian(|u| f(&g(u)?), t)?;
    let layout = Layout::get(1, 1);
    let gt = g(&Jet::variable(&layout, t, 0))?;
    let rhs = schwarzian(&f, gt.value())? * gt.derivative(&[1]).powi(2) + schwarzian(&g, t)?;
    Ok((lhs - rhs).abs())
}

/// `t ↦ (a t + b) / (c t + d)`, normalized to `|ad − bc| = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobiusTransform {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl MobiusTransform {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let det = a * d - b * c;
        if !(det.abs() > 0.0) || !det.is_finite() {
            return Err(FinslerError::InvalidArgument(format!("degenerate Mobius coefficients ({a}, {b}, {c}, {d})")));
        }
        let s = det.abs().sqrt();
        Ok(MobiusTransform {
            a: a / s,
            b: b / s,
            c: c / s,
            d: d / s,
        })
    }

    pub fn identity() -> Self {
        MobiusTransform { a: 1.0, b: 0.0, c: 0.0, d: 1.0 }
    }

    /// Hyperbolic translation of `(-1, 1)`: `u ↦ (u cosh τ + sinh τ)/(u sinh τ + cosh τ)`.
    pub fn translation(tau: f64) -> Self {
        MobiusTransform {
            a: tau.cosh(),
            b: tau.sinh(),
            c: tau.sinh(),
            d: tau.cosh(),
        }
    }

    /// The orientation swap `u ↦ −u`.
    pub fn swap() -> Self {
        MobiusTransform { a: -1.0, b: 0.0, c: 0.0, d: 1.0 }
    }

    /// Increasing map of `(-1, 1)` onto `(lo, hi)`; either end may be infinite.
    pub fn onto_interval(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(FinslerError::InvalidArgument(format!("empty interval ({lo}, {hi})")));
        }
        match (lo.is_finite(), hi.is_finite()) {
            (true, true) => Self::new(0.5 * (hi - lo), 0.5 * (hi + lo), 0.0, 1.0),
            (true, false) => Self::new(1.0 - lo, 1.0 + lo, -1.0, 1.0),
            (false, true) => Self::new(hi + 1.0, hi - 1.0, 1.0, 1.0),
            (false, false) => Err(FinslerError::InvalidArgument(
                "no Mobius map sends (-1, 1) onto the whole line".into(),
            )),
        }
    }

    pub fn determinant(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn apply(&self, t: f64) -> Result<f64> {
        let den = self.c * t + self.d;
        if den.abs() <= 1e-15 * (self.c * t).abs().max(self.d.abs()) || den == 0.0 {
            return Err(FinslerError::Pole { at: t });
        }
        Ok((self.a * t + self.b) / den)
    }

    pub fn apply_scalar<S: Scalar>(&self, t: &S) -> Result<S> {
        let den = t.clone() * self.c + self.d;
        if den.value() == 0.0 {
            return Err(FinslerError::Pole { at: t.value() });
        }
        Ok((t.clone() * self.a + self.b) / den)
    }

    pub fn derivative(&self, t: f64) -> Result<f64> {
        let den = self.c * t + self.d;
        if den == 0.0 {
            return Err(FinslerError::Pole { at: t });
        }
        Ok(self.determinant() / (den * den))
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &MobiusTransform) -> MobiusTransform {
        MobiusTransform {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        }
    }

    pub fn invert(&self) -> MobiusTransform {
        let det = self.determinant();
        MobiusTransform {
            a: self.d / det,
            b: -self.b / det,
            c: -self.c / det,
            d: self.a / det,
        }
    }

    /// Equality as maps (coefficients up to a common sign).
    pub fn approx_eq(&self, other: &MobiusTransform, tol: f64) -> bool {
        let p = [self.a, self.b, self.c, self.d];
        let q = [other.a, other.b, other.c, other.d];
        [1.0, -1.0].iter().any(|s| p.iter().zip(&q).all(|(x, y)| (x - s * y).abs() <= tol))
    }
}

/// Cross-ratio `(p1 − p3)(p2 − p4) / ((p2 − p3)(p1 − p4))`.
pub fn cross_ratio(p1: f64, p2: f64, p3: f64, p4: f64) -> f64 {
    (p1 - p3) * (p2 - p4) / ((p2 - p3) * (p1 - p4))
}

type QFn = Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>;

#[derive(Clone)]
enum Source {
    Geodesic(GeodesicSegment),
    Synthetic(QFn),
}

impl std::fmt::Debug for Source {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Source::Geodesic(seg) => f.debug_tuple("Geodesic").field(&seg.metric().label()).finish(),
            Source::Synthetic(_) => f.write_str("Synthetic"),
        }
    }
}

/// Range of a projective parameter on the chart containing its base point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParameterRange {
    pub lo: f64,
    pub hi: f64,
    /// Values at the last integrated nodes, before boundary extrapolation.
    pub raw_lo: f64,
    pub raw_hi: f64,
    pub extrapolated_lo: bool,
    pub extrapolated_hi: bool,
}

/// Solution `π = w₁/w₂` of `{π, s} = q(s)` normalized by `π(s₀) = 0`, `π'(s₀) = 1`.
#[derive(Debug, Clone)]
pub struct ProjectiveParameter {
    source: Source,
    track: Track,
    geo_dim: usize,
    substeps: usize,
    poles: Vec<f64>,
    truncated_lo: bool,
    truncated_hi: bool,
}

fn linear_rhs(q: &dyn Fn(f64) -> Result<f64>) -> impl Fn(f64, &[f64]) -> Result<Vec<f64>> + '_ {
    move |s, w| {
        let h = 0.5 * q(s)?;
        Ok(vec![w[1], -h * w[0], w[3], -h * w[2]])
    }
}

impl ProjectiveParameter {
    /// Parameter along a geodesic with `q = (2/(n−1)) F²Ric(x, x')`.
    pub fn along(segment: &GeodesicSegment, s0: f64) -> Result<Self> {
        let n = segment.dim();
        if n < 2 {
            return Err(FinslerError::InvalidArgument("projective parameters need n >= 2".into()));
        }
        let (lo, hi) = segment.s_range();
        let mut start = segment.state(s0)?;
        start.extend_from_slice(&[0.0, 1.0, 1.0, 0.0]);
        let mut p = ProjectiveParameter {
            source: Source::Geodesic(segment.clone()),
            track: Track {
                t: vec![s0],
                y: vec![start.clone()],
                origin: 0,
            },
            geo_dim: 2 * n,
            substeps: segment.options().dense_substeps,
            poles: Vec::new(),
            truncated_lo: segment.truncated_lo,
            truncated_hi: segment.truncated_hi,
        };
        let opts = segment.options().ode;
        let metric = segment.metric().clone();
        // Near a boundary the curvature loses precision before the margin is
        // reached; a breakdown there counts as reaching the boundary.
        let side = |target: f64, truncated: bool, rhs: &dyn Fn(f64, &[f64]) -> Result<Vec<f64>>| -> Result<ode::OdeSolution> {
            match ode::integrate_partial(&rhs, s0, &start, target, &opts) {
                (sol, None) => Ok(sol),
                (mut sol, Some(FinslerError::Stiffness { at })) if truncated => {
                    let defect = metric.boundary_defect(&sol.last().1[..n]);
                    if defect.is_some_and(|d| d < NEAR_BOUNDARY) && sol.t.len() > 2 {
                        log::debug!("augmented system stalled at s = {at} near the boundary");
                        sol.status = Termination::Boundary;
                        Ok(sol)
                    } else {
                        Err(FinslerError::Stiffness { at })
                    }
                }
                (_, Some(e)) => Err(e),
            }
        };
        let (fwd, bwd) = {
            let rhs = p.rhs();
            (side(hi, segment.truncated_hi, &rhs)?, side(lo, segment.truncated_lo, &rhs)?)
        };
        p.truncated_lo |= bwd.status == Termination::Boundary;
        p.truncated_hi |= fwd.status == Termination::Boundary;
        p.track = Track::two_sided(bwd, fwd);
        p.poles = p.find_poles()?;
        Ok(p)
    }

    /// Parameter for a prescribed `q(s)` on `[s_lo, s_hi]`.
    pub fn synthetic(q: impl Fn(f64) -> Result<f64> + Send + Sync + 'static, s_lo: f64, s0: f64, s_hi: f64, opts: &OdeOptions) -> Result<Self> {
        if !(s_lo <= s0 && s0 <= s_hi) {
            return Err(FinslerError::InvalidArgument(format!("s0 = {s0} outside [{s_lo}, {s_hi}]")));
        }
        let q: QFn = Arc::new(q);
        let start = [0.0, 1.0, 1.0, 0.0];
        let rhs = linear_rhs(q.as_ref());
        let fwd = ode::integrate(&rhs, s0, &start, s_hi, opts)?;
        let bwd = ode::integrate(&rhs, s0, &start, s_lo, opts)?;
        let mut p = ProjectiveParameter {
            source: Source::Synthetic(q.clone()),
            track: Track::two_sided(bwd, fwd),
            geo_dim: 0,
            substeps: 8,
            poles: Vec::new(),
            truncated_lo: false,
            truncated_hi: false,
        };
        p.poles = p.find_poles()?;
        Ok(p)
    }

    fn rhs(&self) -> Box<dyn Fn(f64, &[f64]) -> Result<Vec<f64>> + '_> {
        match &self.source {
            Source::Synthetic(q) => Box::new(linear_rhs(q.as_ref())),
            Source::Geodesic(seg) => {
                let metric = seg.metric().as_ref();
                let cfg = seg.options().engine;
                let n = self.geo_dim / 2;
                let scale = 2.0 / (n as f64 - 1.0);
                let geo = geodesic_rhs(metric, seg.options().boundary_margin, cfg);
                Box::new(move |s, st: &[f64]| {
                    let mut out = geo(s, &st[..2 * n])?;
                    let q = scale * ricci_energy(metric, &st[..n], &st[n..2 * n], &cfg)?;
                    let w = &st[2 * n..];
                    out.extend_from_slice(&[w[1], -0.5 * q * w[0], w[3], -0.5 * q * w[2]]);
                    Ok(out)
                })
            }
        }
    }

    fn find_poles(&self) -> Result<Vec<f64>> {
        let k = self.geo_dim + 2;
        let mut poles = Vec::new();
        for i in 0..self.track.t.len() - 1 {
            let (a, b) = (self.track.y[i][k], self.track.y[i + 1][k]);
            if a == 0.0 {
                poles.push(self.track.t[i]);
            } else if a * b < 0.0 {
                let (mut lo, mut hi) = (self.track.t[i], self.track.t[i + 1]);
                let sign_lo = a.signum();
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if self.w(mid)?[2].signum() == sign_lo {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                poles.push(0.5 * (lo + hi));
            }
        }
        Ok(poles)
    }

    pub fn s0(&self) -> f64 {
        self.track.t0()
    }

    pub fn s_range(&self) -> (f64, f64) {
        self.track.range()
    }

    pub fn poles(&self) -> &[f64] {
        &self.poles
    }

    pub fn nodes(&self) -> &[f64] {
        &self.track.t
    }

    pub fn segment(&self) -> Option<&GeodesicSegment> {
        match &self.source {
            Source::Geodesic(seg) => Some(seg),
            Source::Synthetic(_) => None,
        }
    }

    fn state_from(&self, anchor: usize, s: f64) -> Result<Vec<f64>> {
        let rhs = self.rhs();
        self.track.eval_from(&rhs, anchor, s, self.substeps)
    }

    fn state(&self, s: f64) -> Result<Vec<f64>> {
        let rhs = self.rhs();
        self.track.eval(&rhs, s, self.substeps)
    }

    /// `[w₁, w₁', w₂, w₂']` at `s`.
    pub fn w(&self, s: f64) -> Result<Vec<f64>> {
        Ok(self.state(s)?.split_off(self.geo_dim))
    }

    pub fn position(&self, s: f64) -> Result<Vec<f64>> {
        if self.geo_dim == 0 {
            return Err(FinslerError::InvalidArgument("synthetic parameters have no geodesic".into()));
        }
        let mut st = self.state(s)?;
        st.truncate(self.geo_dim / 2);
        Ok(st)
    }

    /// `q(s)`.
    pub fn q(&self, s: f64) -> Result<f64> {
        match &self.source {
            Source::Synthetic(q) => q(s),
            Source::Geodesic(seg) => {
                let n = self.geo_dim / 2;
                let st = self.state(s)?;
                Ok(2.0 / (n as f64 - 1.0) * ricci_energy(seg.metric().as_ref(), &st[..n], &st[n..2 * n], &seg.options().engine)?)
            }
        }
    }

    fn nearest_pole(&self, s: f64) -> f64 {
        self.poles.iter().copied().min_by(|a, b| (a - s).abs().total_cmp(&(b - s).abs())).unwrap_or(s)
    }

    fn ratio(&self, w: &[f64], s: f64) -> Result<f64> {
        if w[2].abs() <= 1e-12 * w[0].abs().max(1.0) {
            return Err(FinslerError::Chart(format!("s = {s} is at the pole s = {} of the parameter", self.nearest_pole(s))));
        }
        Ok(w[0] / w[2])
    }

    pub fn pi(&self, s: f64) -> Result<f64> {
        let w = self.w(s)?;
        self.ratio(&w, s)
    }

    /// `π'(s) = W / w₂²`.
    pub fn pi_derivative(&self, s: f64) -> Result<f64> {
        let w = self.w(s)?;
        self.ratio(&w, s)?;
        Ok((w[1] * w[2] - w[0] * w[3]) / (w[2] * w[2]))
    }

    /// `W = w₁' w₂ − w₁ w₂'`, identically 1 for exact solutions.
    pub fn wronskian(&self, s: f64) -> Result<f64> {
        let w = self.w(s)?;
        Ok(w[1] * w[2] - w[0] * w[3])
    }

    /// `max |W − 1|` over the integrator nodes.
    pub fn wronskian_drift(&self) -> f64 {
        let k = self.geo_dim;
        self.track
            .y
            .iter()
            .map(|st| (st[k + 1] * st[k + 2] - st[k] * st[k + 3] - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `|{π, s} − q(s)|` with the Schwarzian from finite differences of the
    /// dense parameter using step `h`.
    pub fn schwarzian_residual(&self, s: f64, h: f64) -> Result<f64> {
        let anchor = self.track.anchor(s);
        let k = self.geo_dim;
        let f = |t: f64| -> Result<f64> {
            let st = self.state_from(anchor, t)?;
            self.ratio(&st[k..], t)
        };
        Ok((schwarzian_fd(f, s, h)? - self.q(s)?).abs())
    }

    /// Pole-free `s`-interval containing `s0`.
    pub fn chart_interval(&self) -> (f64, f64) {
        let s0 = self.s0();
        let (lo, hi) = self.s_range();
        let below = self.poles.iter().copied().filter(|&p| p < s0).fold(lo, f64::max);
        let above = self.poles.iter().copied().filter(|&p| p > s0).fold(hi, f64::min);
        (below, above)
    }

    fn boundary_defect_at(&self, idx: usize) -> Option<f64> {
        let Source::Geodesic(seg) = &self.source else { return None };
        let n = self.geo_dim / 2;
        seg.metric().boundary_defect(&self.track.y[idx][..n])
    }

    /// End value at a truncated end, extrapolated linearly in the boundary
    /// defect to where it vanishes.
    fn extrapolate(&self, end: usize, prev: usize) -> Option<f64> {
        let (pe, p1) = (self.boundary_defect_at(end)?, self.boundary_defect_at(prev)?);
        let k = self.geo_dim;
        let ye = &self.track.y[end][k..];
        let y1 = &self.track.y[prev][k..];
        let (qe, q1) = (ye[0] / ye[2], y1[0] / y1[2]);
        if !(pe < p1) {
            return None;
        }
        Some(qe - pe * (qe - q1) / (pe - p1))
    }

    /// Range of `π` on the chart containing `s0`. Ends at poles are infinite;
    /// ends where the geodesic reached the domain boundary are extrapolated.
    pub fn range(&self) -> ParameterRange {
        let s0 = self.s0();
        let k = self.geo_dim;
        let last = self.track.t.len() - 1;
        let pole_below = self.poles.iter().any(|&p| p < s0);
        let pole_above = self.poles.iter().any(|&p| p > s0);
        let at = |i: usize| self.track.y[i][k] / self.track.y[i][k + 2];
        let raw_lo = if pole_below { f64::NEG_INFINITY } else { at(0) };
        let raw_hi = if pole_above { f64::INFINITY } else { at(last) };
        let ext_lo = if !pole_below && self.truncated_lo && last > 0 { self.extrapolate(0, 1) } else { None };
        let ext_hi = if !pole_above && self.truncated_hi && last > 0 { self.extrapolate(last, last - 1) } else { None };
        ParameterRange {
            lo: ext_lo.unwrap_or(raw_lo),
            hi: ext_hi.unwrap_or(raw_hi),
            raw_lo,
            raw_hi,
            extrapolated_lo: ext_lo.is_some(),
            extrapolated_hi: ext_hi.is_some(),
        }
    }

    /// Arc length in the chart around `s0` at which `π` takes `value`.
    pub fn s_at(&self, value: f64) -> Result<f64> {
        let (clo, chi) = self.chart_interval();
        let k = self.geo_dim;
        let nodes: Vec<(f64, f64)> = self
            .track
            .t
            .iter()
            .zip(&self.track.y)
            .filter(|(t, _)| **t > clo && **t < chi)
            .map(|(t, st)| (*t, st[k] / st[k + 2]))
            .collect();
        let below = nodes.iter().rev().find(|(_, p)| *p <= value);
        let above = nodes.iter().find(|(_, p)| *p >= value);
        let (Some(&(mut lo, _)), Some(&(mut hi, _))) = (below, above) else {
            let r = self.range();
            return Err(FinslerError::Chart(format!("value {value} outside the integrated range ({}, {})", r.raw_lo, r.raw_hi)));
        };
        if lo == hi {
            return Ok(lo);
        }
        let mut s = 0.5 * (lo + hi);
        for _ in 0..100 {
            let w = self.w(s)?;
            let f = w[0] / w[2] - value;
            if f.abs() <= 1e-15 * value.abs().max(1.0) {
                break;
            }
            if f < 0.0 {
                lo = s;
            } else {
                hi = s;
            }
            let d = (w[1] * w[2] - w[0] * w[3]) / (w[2] * w[2]);
            let newton = s - f / d;
            s = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if hi - lo <= 1e-15 * s.abs().max(1.0) {
                break;
            }
        }
        Ok(s)
    }

    /// Arc length at which the geodesic passes through `point`.
    pub fn locate(&self, point: &[f64]) -> Result<f64> {
        if self.geo_dim == 0 {
            return Err(FinslerError::InvalidArgument("synthetic parameters have no geodesic".into()));
        }
        let n = self.geo_dim / 2;
        let dist = |st: &[f64]| st[..n].iter().zip(point).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let best = (0..self.track.t.len())
            .min_by(|&i, &j| dist(&self.track.y[i]).total_cmp(&dist(&self.track.y[j])))
            .expect("non-empty track");
        // g(s) = <x(s) − p, x'(s)> changes sign across the closest approach
        let g = |s: f64| -> Result<f64> {
            let st = self.state(s)?;
            Ok((0..n).map(|i| (st[i] - point[i]) * st[n + i]).sum())
        };
        let last = self.track.t.len() - 1;
        let (mut lo, mut hi) = (self.track.t[best.saturating_sub(1)], self.track.t[(best + 1).min(last)]);
        let (mut glo, ghi) = (g(lo)?, g(hi)?);
        if glo * ghi > 0.0 {
            return Err(FinslerError::Chart(format!("point {point:?} is not on the geodesic")));
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            let gm = g(mid)?;
            if gm * glo > 0.0 {
                lo = mid;
                glo = gm;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 * mid.abs().max(1.0) {
                break;
            }
        }
        let s = 0.5 * (lo + hi);
        let miss = dist(&self.state(s)?);
        if miss > 1e-7 {
            return Err(FinslerError::Chart(format!("point {point:?} misses the geodesic by {miss:e}")));
        }
        Ok(s)
    }
}

/// `|cr(π_A(s_i)) − cr(π_B(s'_i))|` where `s'_i` are the arc lengths on B's
/// geodesic of the points at `probes` on A's geodesic.
pub fn invariance_cross_check(a: &ProjectiveParameter, b: &ProjectiveParameter, probes: &[f64; 4]) -> Result<f64> {
    let mut pa = [0.0; 4];
    let mut pb = [0.0; 4];
    for (i, &s) in probes.iter().enumerate() {
        pa[i] = a.pi(s)?;
        let sb = b.locate(&a.position(s)?)?;
        pb[i] = b.pi(sb)?;
    }
    Ok((cross_ratio(pa[0], pa[1], pa[2], pa[3]) - cross_ratio(pb[0], pb[1], pb[2], pb[3])).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesics::{extend_geodesic, GeodesicOptions};
    use crate::metrics::{Euclidean, FunkBall, Klein};
    use crate::structure::Metric;

    #[test]
    fn closed_form_schwarzians() {
        for t in [-1.3, 0.0, 0.4, 2.0] {
            assert!((schwarzian(|u| Ok(u.tanh()), t).unwrap() + 2.0).abs() < 1e-10);
        }
        for t in [-1.3, 0.0, 0.4, 1.5] {
            assert!((schwarzian(|u| Ok(u.tan()), t).unwrap() - 2.0).abs() < 1e-10);
        }
        let m = MobiusTransform::new(2.0, -1.0, 0.5, 3.0).unwrap();
        assert!(schwarzian(|u| m.apply_scalar(u), 0.7).unwrap().abs() < 1e-12);
        assert!(matches!(schwarzian(|u| Ok(u.square()), 0.0), Err(FinslerError::CriticalPoint { .. })));
        let fd = schwarzian_fd(|t| Ok(t.tanh()), 0.3, 1e-2).unwrap();
        assert!((fd + 2.0).abs() < 1e-7, "{fd}");
    }

    #[test]
    fn composition_rule() {
        let r = check_composition(|u| Ok(u.tanh()), |u| Ok(u.tan()), 0.3).unwrap();
        assert!(r < 1e-10);
    }

    #[test]
    fn mobius_group_laws() {
        let m = MobiusTransform::new(1.0, 1.0, 0.0, 1.0).unwrap();
        let n = MobiusTransform::new(1.0, -1.0, 0.0, 1.0).unwrap();
        assert!(m.compose(&n).approx_eq(&MobiusTransform::identity(), 1e-15));
        let r = MobiusTransform::new(0.3, 2.0, -1.2, 0.7).unwrap();
        assert!(r.compose(&r.invert()).approx_eq(&MobiusTransform::identity(), 1e-14));
        assert!((r.determinant().abs() - 1.0).abs() < 1e-14);
        let pts = [0.1, 0.5, -0.7, 2.0];
        let img: Vec<f64> = pts.iter().map(|&p| r.apply(p).unwrap()).collect();
        let (c0, c1) = (cross_ratio(pts[0], pts[1], pts[2], pts[3]), cross_ratio(img[0], img[1], img[2], img[3]));
        assert!((c0 - c1).abs() < 1e-12);
        let pole = MobiusTransform::new(1.0, 0.0, 1.0, 1.0).unwrap();
        assert!(matches!(pole.apply(-1.0), Err(FinslerError::Pole { .. })));
        assert!(MobiusTransform::new(1.0, 2.0, 2.0, 4.0).is_err());
    }

    #[test]
    fn onto_interval_maps_endpoints() {
        let m = MobiusTransform::onto_interval(-0.5, 3.0).unwrap();
        assert!((m.apply(-1.0).unwrap() + 0.5).abs() < 1e-15 && (m.apply(1.0).unwrap() - 3.0).abs() < 1e-15);
        let m = MobiusTransform::onto_interval(2.0, f64::INFINITY).unwrap();
        assert!((m.apply(-1.0).unwrap() - 2.0).abs() < 1e-15);
        assert!(matches!(m.apply(1.0), Err(FinslerError::Pole { .. })));
        let m = MobiusTransform::onto_interval(f64::NEG_INFINITY, 0.5).unwrap();
        assert!((m.apply(1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(m.derivative(0.0).unwrap() > 0.0);
    }

    #[test]
    fn synthetic_tan_and_poles() {
        let p = ProjectiveParameter::synthetic(|_| Ok(2.0), -1.0, 0.0, 2.0, &OdeOptions::default()).unwrap();
        assert!((p.pi(1.0).unwrap() - 1f64.tan()).abs() < 1e-9);
        assert_eq!(p.poles().len(), 1);
        assert!((p.poles()[0] - std::f64::consts::FRAC_PI_2).abs() < 1e-9);
        let r = p.range();
        assert!(r.hi.is_infinite() && (r.lo - (-1f64).tan()).abs() < 1e-9);
        assert!(matches!(p.pi(p.poles()[0]), Err(FinslerError::Chart(_))));
    }

    #[test]
    fn klein_parameter_is_tanh() {
        let k: Metric = Arc::new(Klein::new(2).unwrap());
        let seg = extend_geodesic(&k, &[0.0, 0.0], &[1.0, 0.0], 3.0, 3.0, &GeodesicOptions::default()).unwrap();
        let p = ProjectiveParameter::along(&seg, 0.0).unwrap();
        for s in [-2.5, -0.3, 0.0, 1.0, 2.9] {
            assert!((p.pi(s).unwrap() - s.tanh()).abs() < 1e-9, "{s}");
            assert!((p.q(s).unwrap() + 2.0).abs() < 1e-9);
        }
        assert!(p.wronskian_drift() < 1e-9);
        assert!(p.schwarzian_residual(0.7, 1e-2).unwrap() < 1e-6);
        assert!((p.s_at(0.5).unwrap() - 0.5f64.atanh()).abs() < 1e-9);
    }

    #[test]
    fn funk_range_is_extrapolated_to_boundary() {
        let f: Metric = Arc::new(FunkBall::new(2, 1.0).unwrap());
        let seg = extend_geodesic(&f, &[0.0, 0.0], &[1.0, 0.0], 50.0, 50.0, &GeodesicOptions::default()).unwrap();
        assert!(seg.truncated_lo);
        let p = ProjectiveParameter::along(&seg, 0.0).unwrap();
        let r = p.range();
        // π = 2 tanh(s/2); backward boundary at s = −ln 2
        assert!(r.extrapolated_lo);
        assert!((r.lo + 2.0 / 3.0).abs() < 1e-6, "{r:?}");
        assert!((r.hi - 2.0).abs() < 1e-6, "{r:?}");
    }

    #[test]
    fn cross_ratio_invariance_klein_euclid() {
        let opts = GeodesicOptions::default();
        let k: Metric = Arc::new(Klein::new(2).unwrap());
        let e: Metric = Arc::new(Euclidean::new(2));
        let x0 = [-0.2, 0.1];
        let d = [0.6, 0.8];
        let fk = k.norm(&x0, &d).unwrap();
        let sk = extend_geodesic(&k, &x0, &[d[0] / fk, d[1] / fk], 0.5, 2.0, &opts).unwrap();
        let se = extend_geodesic(&e, &x0, &d, 0.5, 1.2, &opts).unwrap();
        let pk = ProjectiveParameter::along(&sk, 0.0).unwrap();
        let pe = ProjectiveParameter::along(&se, 0.0).unwrap();
        let r = invariance_cross_check(&pk, &pe, &[-0.3, 0.2, 0.5, 1.1]).unwrap();
        assert!(r < 1e-8, "{r}");
    }
}
