//! Interval Funk distance, chains of projective maps, the chain-infimum
//! pseudo-distance estimator and the Schwarz-lemma checkers.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curvature::{check_ricci_bound, RicciBoundReport};
use crate::error::{FinslerError, Result};
use crate::geodesics::{connect, extend_geodesic, finsler_distance, ConnectOptions, GeodesicSegment};
use crate::projective::{MobiusTransform, ParameterRange, ProjectiveParameter};
use crate::structure::Metric;

/// Hyperbolic coordinates `ξ = artanh u` of chart points are kept within
/// this bound so that `u` stays distinguishable from `±1`.
pub const XI_LIMIT: f64 = 17.0;

/// Smallest search budget; budgets are halved down to this level.
pub const MIN_BUDGET: usize = 8;

/// Boundary defect below which geodesic samples are skipped in hypothesis checks.
const SAMPLE_MIN_DEFECT: f64 = 1e-3;

/// Oriented pair of points of `I = (−1, 1)` with Funk constant `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalPair {
    pub a: f64,
    pub b: f64,
    pub k: f64,
}

impl IntervalPair {
    pub fn new(a: f64, b: f64, k: f64) -> Result<Self> {
        let p = IntervalPair { a, b, k };
        p.check()?;
        Ok(p)
    }

    fn check(&self) -> Result<()> {
        for u in [self.a, self.b] {
            if !(u.abs() < 1.0) {
                return Err(FinslerError::Domain { point: vec![u] });
            }
        }
        if !(self.k > 0.0) {
            return Err(FinslerError::InvalidArgument(format!("k = {} must be positive", self.k)));
        }
        Ok(())
    }
}

/// `D_f(a, b)`: `ln((1 − a)/(1 − b))/k` for `a ≤ b`, `ln((1 + a)/(1 + b))/k` otherwise.
pub fn funk_distance_interval(p: &IntervalPair) -> Result<f64> {
    p.check()?;
    let (a, b) = (p.a, p.b);
    let d = if a <= b { (-a).ln_1p() - (-b).ln_1p() } else { a.ln_1p() - b.ln_1p() };
    Ok(d / p.k)
}

/// The textbook form `(|ln((1−a)(1+b)/((1−b)(1+a)))| + ln((1−a²)/(1−b²)))/(2k)`.
pub fn funk_distance_interval_literal(p: &IntervalPair) -> Result<f64> {
    p.check()?;
    let (a, b) = (p.a, p.b);
    let cross = ((1.0 - a) * (1.0 + b) / ((1.0 - b) * (1.0 + a))).ln().abs();
    Ok((cross + ((1.0 - a * a) / (1.0 - b * b)).ln()) / (2.0 * p.k))
}

/// Forward Funk distance of the ball `|x| < 1` with constant `k`:
/// `ln(t/(t − 1))/k`, where `x + t(z − x)` is the exit point of the ray.
pub fn funk_distance_ball(x: &[f64], z: &[f64], k: f64) -> Result<f64> {
    if x.len() != z.len() {
        return Err(FinslerError::Dimension { expected: x.len(), got: z.len() });
    }
    if !(k > 0.0) {
        return Err(FinslerError::InvalidArgument(format!("k = {k} must be positive")));
    }
    for p in [x, z] {
        if !(p.iter().map(|c| c * c).sum::<f64>() < 1.0) {
            return Err(FinslerError::Domain { point: p.to_vec() });
        }
    }
    let d: Vec<f64> = z.iter().zip(x).map(|(a, b)| a - b).collect();
    let dd: f64 = d.iter().map(|c| c * c).sum();
    if dd == 0.0 {
        return Ok(0.0);
    }
    let xd: f64 = x.iter().zip(&d).map(|(a, b)| a * b).sum();
    let phi: f64 = 1.0 - x.iter().map(|c| c * c).sum::<f64>();
    // larger root of dd t² + 2 xd t − phi = 0, in the cancellation-free form
    let disc = (xd * xd + dd * phi).sqrt();
    let t = if xd <= 0.0 { (disc - xd) / dd } else { phi / (disc + xd) };
    let zd: f64 = z.iter().zip(&d).map(|(a, b)| a * b).sum();
    let phi_z: f64 = 1.0 - z.iter().map(|c| c * c).sum::<f64>();
    // t − 1 is the exit parameter seen from z
    let disc_z = (zd * zd + dd * phi_z).sqrt();
    let t1 = if zd <= 0.0 { (disc_z - zd) / dd } else { phi_z / (disc_z + zd) };
    Ok((t / t1).ln() / k)
}

/// `D_f(tanh ξ, tanh η)` without forming the interval points.
pub fn funk_distance_hyperbolic(xi: f64, eta: f64, k: f64) -> f64 {
    let tail = |t: f64| (-2.0 * t.abs()).exp().ln_1p();
    // |η − ξ| + |η| − |ξ| collapses to a piecewise-linear term
    let linear = if xi <= eta { 2.0 * (eta.max(0.0) - xi.max(0.0)) } else { 2.0 * (xi.min(0.0) - eta.min(0.0)) };
    ((linear + tail(eta) - tail(xi)) / k).max(0.0)
}

/// Chart `base ∘ swap^σ ∘ T_τ` of a link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChartChoice {
    pub tau: f64,
    pub swapped: bool,
}

impl ChartChoice {
    pub const BASE: ChartChoice = ChartChoice { tau: 0.0, swapped: false };

    fn sign(&self) -> f64 {
        if self.swapped {
            -1.0
        } else {
            1.0
        }
    }
}

/// One projective map `f: I → M` of a chain together with its endpoint pair.
#[derive(Clone, Serialize)]
pub struct ChainLink {
    #[serde(skip)]
    pub segment: GeodesicSegment,
    #[serde(skip)]
    pub parameter: ProjectiveParameter,
    pub start: Vec<f64>,
    pub end: Vec<f64>,
    /// Arc length from `start` to `end`.
    pub length: f64,
    pub pi_start: f64,
    pub pi_end: f64,
    pub range: ParameterRange,
    pub base_chart: MobiusTransform,
    pub choice: ChartChoice,
    pub chart: MobiusTransform,
    /// `artanh` of the base-chart preimages of `pi_start`, `pi_end`.
    pub xi0: (f64, f64),
    pub k: f64,
}

impl fmt::Debug for ChainLink {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChainLink")
            .field("start", &self.start)
            .field("end", &self.end)
            .field("range", &self.range)
            .field("choice", &self.choice)
            .field("d_f", &self.funk_length())
            .finish()
    }
}

fn base_chart(range: &ParameterRange, spread: f64) -> Result<MobiusTransform> {
    if range.lo.is_finite() || range.hi.is_finite() {
        MobiusTransform::onto_interval(range.lo, range.hi)
    } else {
        // the whole line: any interval is attainable, take a wide one
        let m = 1e8 * (1.0 + spread);
        MobiusTransform::onto_interval(-m, m)
    }
}

impl ChainLink {
    /// Link along the connecting geodesic from `x` to `y` with the base chart.
    pub fn build(metric: &Metric, x: &[f64], y: &[f64], k: f64, opts: &ConnectOptions, length_cap: f64) -> Result<Self> {
        if !(k > 0.0) {
            return Err(FinslerError::InvalidArgument(format!("k = {k} must be positive")));
        }
        let bvp = connect(metric, x, y, opts)?;
        let length = bvp.length();
        let v0 = bvp.segment.velocity(0.0)?;
        let segment = extend_geodesic(metric, x, &v0, length_cap, length_cap.max(2.0 * length), &opts.geodesic)?;
        let parameter = ProjectiveParameter::along(&segment, 0.0)?;
        let (clo, chi) = parameter.chart_interval();
        let range = parameter.range();
        let inadmissible = || FinslerError::InadmissibleChart { lo: range.lo, hi: range.hi };
        if !(clo < 0.0 && length < chi) {
            return Err(inadmissible());
        }
        let pi_start = parameter.pi(0.0)?;
        let pi_end = parameter.pi(length)?;
        let inside = |p: f64| p > range.lo && p < range.hi;
        if !(range.lo < range.hi) || !inside(pi_start) || !inside(pi_end) {
            return Err(inadmissible());
        }
        let base = base_chart(&range, (pi_end - pi_start).abs())?;
        let inv = base.invert();
        let xi = |p: f64| -> Result<f64> {
            let u = inv.apply(p)?;
            if !(u.abs() < 1.0) {
                return Err(inadmissible());
            }
            Ok(u.atanh())
        };
        let xi0 = (xi(pi_start)?, xi(pi_end)?);
        let end = segment.position(length)?;
        Ok(ChainLink {
            start: x.to_vec(),
            end,
            segment,
            parameter,
            length,
            pi_start,
            pi_end,
            range,
            base_chart: base,
            choice: ChartChoice::BASE,
            chart: base,
            xi0,
            k,
        })
    }

    /// Hyperbolic coordinates of `(a, b)` under a chart choice.
    pub fn hyperbolic(&self, choice: ChartChoice) -> (f64, f64) {
        let s = choice.sign();
        (s * self.xi0.0 - choice.tau, s * self.xi0.1 - choice.tau)
    }

    pub fn length_with(&self, choice: ChartChoice) -> f64 {
        let (xi, eta) = self.hyperbolic(choice);
        funk_distance_hyperbolic(xi, eta, self.k)
    }

    /// `D_f(a, b)` for the current chart.
    pub fn funk_length(&self) -> f64 {
        self.length_with(self.choice)
    }

    pub fn base_length(&self) -> f64 {
        self.length_with(ChartChoice::BASE)
    }

    pub fn with_choice(&self, choice: ChartChoice) -> Self {
        let mut link = self.clone();
        let mut chart = self.base_chart;
        if choice.swapped {
            chart = chart.compose(&MobiusTransform::swap());
        }
        link.chart = chart.compose(&MobiusTransform::translation(choice.tau));
        link.choice = choice;
        link
    }

    pub fn pair(&self) -> IntervalPair {
        let (xi, eta) = self.hyperbolic(self.choice);
        IntervalPair {
            a: xi.tanh(),
            b: eta.tanh(),
            k: self.k,
        }
    }

    /// Traversal direction in `I`: `a ≤ b`.
    pub fn forward(&self) -> bool {
        let (xi, eta) = self.hyperbolic(self.choice);
        xi <= eta
    }

    /// `max |chart(a) − π(start)|, |chart(b) − π(end)|`, relative to the parameter scale.
    pub fn endpoint_residual(&self) -> Result<f64> {
        let (xi, eta) = self.hyperbolic(self.choice);
        let s = self.choice.sign();
        // T_τ acts on ξ = artanh u by translation
        let image = |t: f64| self.base_chart.apply(s * (t + self.choice.tau).tanh());
        let scale = self.pi_start.abs().max(self.pi_end.abs()).max(1.0);
        let ra = (image(xi)? - self.pi_start).abs();
        let rb = (image(eta)? - self.pi_end).abs();
        Ok(ra.max(rb) / scale)
    }

    /// Line elements sampled along the link's geodesic window.
    pub fn line_elements(&self, count: usize) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
        let (lo, hi) = self.parameter.chart_interval();
        let metric = self.segment.metric();
        let n = self.segment.dim();
        let mut out = Vec::new();
        for i in 0..count {
            let s = lo + (hi - lo) * (i as f64 + 0.5) / count as f64;
            let st = self.segment.state(s)?;
            let (x, v) = (st[..n].to_vec(), st[n..].to_vec());
            if metric.boundary_defect(&x).is_some_and(|d| d < SAMPLE_MIN_DEFECT) {
                continue;
            }
            out.push((x, v));
        }
        Ok(out)
    }
}

/// Outcome of a chart search on one link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChartSearch {
    pub value: f64,
    pub choice: ChartChoice,
    pub evaluations: usize,
}

fn golden<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, evals: usize) -> (f64, f64, usize) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut used = 2;
    while used < evals {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
        used += 1;
    }
    if fc <= fd {
        (c, fc, used)
    } else {
        (d, fd, used)
    }
}

fn search_level(link: &ChainLink, budget: usize) -> ChartSearch {
    let window = (1.5 * (budget as f64).log2()).min(16.0);
    let mut best = ChartSearch {
        value: link.base_length(),
        choice: ChartChoice::BASE,
        evaluations: 1,
    };
    for swapped in [false, true] {
        let probe = ChartChoice { tau: 0.0, swapped };
        let (xi, eta) = link.hyperbolic(probe);
        let lo = (-window).max(xi.max(eta) - XI_LIMIT);
        let hi = window.min(xi.min(eta) + XI_LIMIT);
        if !(lo <= hi) {
            continue;
        }
        let f = |tau: f64| link.length_with(ChartChoice { tau, swapped });
        let mut consider = |tau: f64, value: f64| {
            if value < best.value {
                best.value = value;
                best.choice = ChartChoice { tau, swapped };
            }
        };
        consider(lo, f(lo));
        consider(hi, f(hi));
        best.evaluations += 2;
        let per_start = ((budget / 2).saturating_sub(2) / 3).max(4);
        for j in 0..3 {
            let a = lo + (hi - lo) * j as f64 / 3.0;
            let b = lo + (hi - lo) * (j + 1) as f64 / 3.0;
            let (tau, value, used) = golden(&f, a, b, per_start);
            consider(tau, value);
            best.evaluations += used;
        }
    }
    best
}

/// Minimizes `D_f(a, b)` over the chart family of a link. The result at
/// budget `b` never exceeds the result at `b/2`.
pub fn optimize_chart(link: &ChainLink, budget: usize) -> ChartSearch {
    let mut level = budget.max(MIN_BUDGET);
    let mut best: Option<ChartSearch> = None;
    let mut evaluations = 0;
    loop {
        let s = search_level(link, level);
        evaluations += s.evaluations;
        if best.is_none_or(|b| s.value < b.value) {
            best = Some(s);
        }
        if level <= MIN_BUDGET {
            break;
        }
        level /= 2;
    }
    let mut best = best.expect("at least one level");
    best.evaluations = evaluations;
    best
}

/// Ordered links from `x₀` to `x_k`.
#[derive(Debug, Clone, Serialize)]
pub struct Chain {
    pub waypoints: Vec<Vec<f64>>,
    pub links: Vec<ChainLink>,
}

/// `L(α) = Σ D_f(a_i, b_i)`.
pub fn chain_length(chain: &Chain) -> Result<f64> {
    if chain.links.is_empty() {
        return Ok(0.0);
    }
    if chain.waypoints.len() != chain.links.len() + 1 {
        return Err(FinslerError::InvalidArgument(format!(
            "{} links need {} waypoints, got {}",
            chain.links.len(),
            chain.links.len() + 1,
            chain.waypoints.len()
        )));
    }
    let close = |p: &[f64], q: &[f64]| p.iter().zip(q).all(|(a, b)| (a - b).abs() <= 1e-6);
    for (i, link) in chain.links.iter().enumerate() {
        if !close(&link.start, &chain.waypoints[i]) || !close(&link.end, &chain.waypoints[i + 1]) {
            return Err(FinslerError::InvalidArgument(format!("link {i} does not join its waypoints")));
        }
    }
    Ok(chain.links.iter().map(ChainLink::funk_length).sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PseudoDistanceOptions {
    /// Number of chain links, 1 to 4.
    pub segments: usize,
    /// Chart-search budget per link.
    pub budget: usize,
    /// Funk constant of the model interval.
    pub k: f64,
    /// Ricci bound constant for the optional lower bound.
    pub c: Option<f64>,
    pub connect: ConnectOptions,
    /// Geodesics are extended at most this far in each direction.
    pub length_cap: f64,
}

impl Default for PseudoDistanceOptions {
    fn default() -> Self {
        PseudoDistanceOptions {
            segments: 1,
            budget: 256,
            k: 1.0,
            c: None,
            connect: ConnectOptions::default(),
            length_cap: 50.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PseudoDistanceReport {
    /// Upper estimate of `d_M(x, y)` from the best chain found.
    pub upper_estimate: f64,
    /// Single-link value with the base chart (no chart search).
    pub base_chart_value: f64,
    pub chain: Chain,
    pub evaluations: usize,
    pub budget: usize,
    pub segments: usize,
    /// `d_F(x, y)`.
    pub finsler_distance: f64,
    pub hypothesis: Option<RicciBoundReport>,
    /// `(2c/(√(n−1)k)) d_F`, present when the Ricci bound holds.
    pub lower_bound: Option<f64>,
    /// `(c/(√(n−1)k)) d_F`.
    pub alternate_lower_bound: Option<f64>,
    pub lower_bound_consistent: Option<bool>,
}

fn optimized(link: ChainLink, budget: usize) -> (ChainLink, usize) {
    let s = optimize_chart(&link, budget);
    (link.with_choice(s.choice), s.evaluations)
}

fn chain_through(metric: &Metric, points: &[Vec<f64>], opts: &PseudoDistanceOptions) -> Result<(Chain, usize)> {
    let built: Vec<(ChainLink, usize)> = points
        .par_windows(2)
        .map(|w| Ok(optimized(ChainLink::build(metric, &w[0], &w[1], opts.k, &opts.connect, opts.length_cap)?, opts.budget)))
        .collect::<Result<_>>()?;
    let evaluations = built.iter().map(|(_, e)| e).sum();
    Ok((
        Chain {
            waypoints: points.to_vec(),
            links: built.into_iter().map(|(l, _)| l).collect(),
        },
        evaluations,
    ))
}

fn subdivided(metric: &Metric, direct: &ChainLink, opts: &PseudoDistanceOptions) -> Result<Option<(Chain, f64, usize)>> {
    let m = opts.segments;
    let mut points = vec![direct.start.clone()];
    for i in 1..m {
        points.push(direct.segment.position(direct.length * i as f64 / m as f64)?);
    }
    points.push(direct.end.clone());
    let total = |pts: &[Vec<f64>]| -> Option<(Chain, f64, usize)> {
        let (chain, e) = chain_through(metric, pts, opts).ok()?;
        let len = chain_length(&chain).ok()?;
        Some((chain, len, e))
    };
    let Some(mut best) = total(&points) else { return Ok(None) };
    let chord = direct.start.iter().zip(&direct.end).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let mut step = 0.1 * chord / m as f64;
    let rounds = ((opts.budget as f64).log2() as usize).saturating_sub(5).clamp(1, 4);
    let mut evaluations = best.2;
    for _ in 0..rounds {
        let mut improved = false;
        for w in 1..m {
            for coord in 0..points[w].len() {
                for sign in [1.0, -1.0] {
                    let mut trial = points.clone();
                    trial[w][coord] += sign * step;
                    if let Some(candidate) = total(&trial) {
                        evaluations += candidate.2;
                        if candidate.1 < best.1 {
                            points = trial;
                            best = candidate;
                            improved = true;
                            break;
                        }
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok(Some((best.0, best.1, evaluations)))
}

fn ricci_samples_constant(metric: &Metric, c: f64, k: f64) -> Result<(f64, f64)> {
    let n = metric.dim();
    if n < 2 {
        return Err(FinslerError::InvalidArgument("the Ricci bound needs n >= 2".into()));
    }
    let root = ((n - 1) as f64).sqrt();
    Ok((2.0 * c / (root * k), c / (root * k)))
}

/// Hypothesis `Ric_ij ⪯ −c² g_ij` on the given line elements; Euclidean-like
/// failures become [`FinslerError::HypothesisNotSatisfied`].
pub fn require_ricci_bound(metric: &Metric, samples: &[(Vec<f64>, Vec<f64>)], c: f64, cfg: &crate::diffengine::EngineConfig) -> Result<RicciBoundReport> {
    if samples.is_empty() {
        return Err(FinslerError::HypothesisNotSatisfied("no admissible line elements to test".into()));
    }
    let report = check_ricci_bound(metric.as_ref(), samples, c, 1e-6, cfg)?;
    if !report.pass {
        return Err(FinslerError::HypothesisNotSatisfied(format!(
            "Ric + c^2 g has eigenvalue {:e} > 0 for c = {c}",
            report.worst
        )));
    }
    Ok(report)
}

/// Upper estimate of the pseudo-distance `d_M(x, y)` by chain search.
pub fn pseudo_distance_upper(metric: &Metric, x: &[f64], y: &[f64], opts: &PseudoDistanceOptions) -> Result<PseudoDistanceReport> {
    if !(1..=4).contains(&opts.segments) {
        return Err(FinslerError::InvalidArgument(format!("segments = {} must be in 1..=4", opts.segments)));
    }
    if opts.budget == 0 {
        return Err(FinslerError::InvalidArgument("search budget must be positive".into()));
    }
    metric.check_point(x)?;
    metric.check_point(y)?;
    if x == y {
        return Ok(PseudoDistanceReport {
            upper_estimate: 0.0,
            base_chart_value: 0.0,
            chain: Chain {
                waypoints: vec![x.to_vec(), y.to_vec()],
                links: Vec::new(),
            },
            evaluations: 0,
            budget: opts.budget,
            segments: opts.segments,
            finsler_distance: 0.0,
            hypothesis: None,
            lower_bound: opts.c.map(|_| 0.0),
            alternate_lower_bound: opts.c.map(|_| 0.0),
            lower_bound_consistent: opts.c.map(|_| true),
        });
    }
    let base = ChainLink::build(metric, x, y, opts.k, &opts.connect, opts.length_cap)?;
    let base_chart_value = base.base_length();
    let d_f = base.length;
    let (direct, mut evaluations) = optimized(base, opts.budget);
    let mut best_len = direct.funk_length();
    let mut chain = Chain {
        waypoints: vec![x.to_vec(), y.to_vec()],
        links: vec![direct.clone()],
    };
    if opts.segments > 1 {
        if let Some((sub, len, e)) = subdivided(metric, &direct, opts)? {
            evaluations += e;
            if len < best_len {
                best_len = len;
                chain = sub;
            }
        }
    }
    let (mut hypothesis, mut lower_bound, mut alternate_lower_bound, mut consistent) = (None, None, None, None);
    if let Some(c) = opts.c {
        let (stated, alternate) = ricci_samples_constant(metric, c, opts.k)?;
        let mut samples = Vec::new();
        for link in &chain.links {
            samples.extend(link.line_elements(16)?);
        }
        match require_ricci_bound(metric, &samples, c, &opts.connect.geodesic.engine) {
            Ok(report) => {
                hypothesis = Some(report);
                lower_bound = Some(stated * d_f);
                alternate_lower_bound = Some(alternate * d_f);
                consistent = Some(best_len >= stated * d_f);
            }
            Err(FinslerError::HypothesisNotSatisfied(msg)) => log::info!("no lower bound: {msg}"),
            Err(e) => return Err(e),
        }
    }
    Ok(PseudoDistanceReport {
        upper_estimate: best_len,
        base_chart_value,
        chain,
        evaluations,
        budget: opts.budget,
        segments: opts.segments,
        finsler_distance: d_f,
        hypothesis,
        lower_bound,
        alternate_lower_bound,
        lower_bound_consistent: consistent,
    })
}

/// Samples of `h = ds_M/ds_I` along a link and the comparison with
/// `k√(n−1)/(2c)`.
#[derive(Debug, Clone, Serialize)]
pub struct SchwarzReport {
    pub grid: Vec<f64>,
    pub h: Vec<f64>,
    pub sup: f64,
    pub sup_at: f64,
    pub bound: f64,
    pub pass: bool,
    pub forward: bool,
    pub diagnosis: String,
    pub hypothesis: RicciBoundReport,
}

fn diagnose(grid: &[f64], h: &[f64]) -> String {
    let (imax, _) = h.iter().enumerate().fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    let increasing = h.windows(2).all(|w| w[1] >= w[0]);
    let decreasing = h.windows(2).all(|w| w[1] <= w[0]);
    let shape = if decreasing {
        "h is monotone decreasing"
    } else if increasing {
        "h is monotone increasing"
    } else {
        "h is not monotone"
    };
    if h.len() > 2 && imax > 0 && imax + 1 < h.len() {
        format!("interior maximum at u = {}; {shape}", grid[imax])
    } else {
        format!("no interior maximum; {shape}; sup at grid end u = {}", grid[imax])
    }
}

/// Evaluates `h(u)` on `grid` for the link's current chart.
pub fn schwarz_ratio(link: &ChainLink, grid: &[f64], c: f64) -> Result<SchwarzReport> {
    if grid.is_empty() {
        return Err(FinslerError::InvalidArgument("empty grid".into()));
    }
    let metric = link.segment.metric();
    let n = metric.dim();
    let bound = link.k * ((n - 1) as f64).sqrt() / (2.0 * c);
    let hypothesis = require_ricci_bound(metric, &link.line_elements(16)?, c, &link.segment.options().engine)?;
    let forward = link.forward();
    let h = grid
        .par_iter()
        .map(|&u| -> Result<f64> {
            if !(u.abs() < 1.0) {
                return Err(FinslerError::InvalidArgument(format!("grid point {u} outside (-1, 1)")));
            }
            let value = link.chart.apply(u).map_err(|_| FinslerError::Chart(format!("grid point u = {u} is a chart pole")))?;
            let s = link.parameter.s_at(value)?;
            let ds_du = link.chart.derivative(u)? / link.parameter.pi_derivative(s)?;
            // unit speed, so ds_M = |ds|
            let side = if forward { 1.0 - u } else { 1.0 + u };
            Ok(link.k * ds_du.abs() * side)
        })
        .collect::<Result<Vec<f64>>>()?;
    let (imax, sup) = h.iter().enumerate().fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    Ok(SchwarzReport {
        diagnosis: diagnose(grid, &h),
        grid: grid.to_vec(),
        sup_at: grid[imax],
        pass: sup <= bound,
        sup,
        h,
        bound,
        forward,
        hypothesis,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorollaryReport {
    /// `D_f(a, b)`.
    pub lhs: f64,
    /// `d_F(f(a), f(b))`.
    pub finsler_distance: f64,
    /// `(2c/(√(n−1)k)) d_F`.
    pub rhs: f64,
    pub pass: bool,
    /// `(c/(√(n−1)k)) d_F`.
    pub rhs_alternate: f64,
    pub pass_alternate: bool,
    /// `D_f / d_F`, when `d_F > 0`.
    pub ratio: Option<f64>,
}

/// Compares `D_f(a, b)` with `(2c/(√(n−1)k)) d_F(f(a), f(b))` and the
/// half-size alternate constant.
pub fn corollary_check(link: &ChainLink, c: f64, opts: &ConnectOptions) -> Result<CorollaryReport> {
    let metric = link.segment.metric();
    let (stated, alternate) = ricci_samples_constant(metric, c, link.k)?;
    let lhs = link.funk_length();
    let d_f = finsler_distance(metric, &link.start, &link.end, opts)?;
    let slack = 1e-12 * lhs.max(1.0);
    Ok(CorollaryReport {
        lhs,
        finsler_distance: d_f,
        rhs: stated * d_f,
        pass: lhs + slack >= stated * d_f,
        rhs_alternate: alternate * d_f,
        pass_alternate: lhs + slack >= alternate * d_f,
        ratio: (d_f > 0.0).then(|| lhs / d_f),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PositivityEntry {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub upper_estimate: f64,
    pub base_chart_value: f64,
    pub finsler_distance: f64,
    pub lower_bound: f64,
    pub alternate_lower_bound: f64,
    pub consistent: bool,
    pub alternate_consistent: bool,
    pub base_consistent: bool,
    pub base_alternate_consistent: bool,
    pub positive: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PositivityReport {
    pub c: f64,
    pub k: f64,
    pub hypothesis: RicciBoundReport,
    pub entries: Vec<PositivityEntry>,
    /// Upper estimate positive for every pair with `x ≠ y`.
    pub all_positive: bool,
}

/// Upper estimates against both candidate lower bounds on sample pairs.
pub fn positivity_probe(metric: &Metric, pairs: &[(Vec<f64>, Vec<f64>)], c: f64, opts: &PseudoDistanceOptions) -> Result<PositivityReport> {
    let (stated, alternate) = ricci_samples_constant(metric, c, opts.k)?;
    let reports: Vec<PseudoDistanceReport> = pairs
        .par_iter()
        .map(|(x, y)| pseudo_distance_upper(metric, x, y, &PseudoDistanceOptions { c: None, ..*opts }))
        .collect::<Result<_>>()?;
    let mut samples = Vec::new();
    for r in &reports {
        for link in &r.chain.links {
            samples.extend(link.line_elements(8)?);
        }
    }
    if samples.is_empty() {
        samples = crate::sampling::line_elements(metric.as_ref(), 16, 0.5, SAMPLE_MIN_DEFECT, 0);
    }
    let hypothesis = require_ricci_bound(metric, &samples, c, &opts.connect.geodesic.engine)?;
    let entries: Vec<PositivityEntry> = pairs
        .iter()
        .zip(&reports)
        .map(|((x, y), r)| {
            let d = r.finsler_distance;
            let (lo, alt) = (stated * d, alternate * d);
            PositivityEntry {
                x: x.clone(),
                y: y.clone(),
                upper_estimate: r.upper_estimate,
                base_chart_value: r.base_chart_value,
                finsler_distance: d,
                lower_bound: lo,
                alternate_lower_bound: alt,
                consistent: r.upper_estimate >= lo,
                alternate_consistent: r.upper_estimate >= alt,
                base_consistent: r.base_chart_value >= lo,
                base_alternate_consistent: r.base_chart_value >= alt,
                positive: x == y || r.upper_estimate > 0.0,
            }
        })
        .collect();
    Ok(PositivityReport {
        c,
        k: opts.k,
        hypothesis,
        all_positive: entries.iter().all(|e| e.positive),
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{Euclidean, Klein};
    use std::sync::Arc;

    #[test]
    fn interval_examples() {
        let d = |a, b| funk_distance_interval(&IntervalPair::new(a, b, 1.0).unwrap()).unwrap();
        assert_eq!(d(0.3, 0.3), 0.0);
        assert!((d(0.0, 0.5) - 2f64.ln()).abs() < 1e-15);
        assert!((d(0.5, 0.0) - 1.5f64.ln()).abs() < 1e-15);
        assert!(IntervalPair::new(1.0, 0.0, 1.0).is_err());
        let p = IntervalPair::new(-0.3, 0.8, 2.0).unwrap();
        assert!((funk_distance_interval(&p).unwrap() - funk_distance_interval_literal(&p).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn hyperbolic_form_matches() {
        for (xi, eta) in [(0.0, 0.549), (-1.2, 0.3), (0.8, -2.0), (-5.0, -4.5), (3.0, 3.5)] {
            let p = IntervalPair::new(f64::tanh(xi), f64::tanh(eta), 0.5).unwrap();
            let a = funk_distance_interval(&p).unwrap();
            assert!((funk_distance_hyperbolic(xi, eta, 0.5) - a).abs() < 1e-12 * a.max(1.0), "{xi} {eta}");
        }
        // deep in the negative end the value decays like e^{2η} − e^{2ξ}
        let v = funk_distance_hyperbolic(-16.0, -15.5, 1.0);
        let expected = (-31f64).exp() - (-32f64).exp();
        assert!((v - expected).abs() < 1e-3 * expected);
    }

    #[test]
    fn klein_base_chart_is_identity() {
        let k: Metric = Arc::new(Klein::new(2).unwrap());
        let link = ChainLink::build(&k, &[0.0, 0.0], &[0.5, 0.0], 1.0, &ConnectOptions::default(), 50.0).unwrap();
        assert!(link.base_chart.approx_eq(&MobiusTransform::identity(), 1e-8), "{:?}", link.base_chart);
        assert!((link.base_length() - 2f64.ln()).abs() < 1e-6);
        assert!(link.endpoint_residual().unwrap() < 1e-9);
        let s = optimize_chart(&link, 256);
        assert!(s.value < 1e-9 && s.value > 0.0);
        let moved = link.with_choice(s.choice);
        assert!(moved.endpoint_residual().unwrap() < 1e-9);
        let p = moved.pair();
        assert!((moved.chart.apply(p.a).unwrap() - moved.pi_start).abs() < 1e-4);
        assert!(optimize_chart(&link, 512).value <= s.value);
    }

    #[test]
    fn klein_schwarz_and_corollary() {
        let k: Metric = Arc::new(Klein::new(2).unwrap());
        let link = ChainLink::build(&k, &[0.0, 0.0], &[0.5, 0.0], 1.0, &ConnectOptions::default(), 50.0).unwrap();
        let r = schwarz_ratio(&link, &[-0.9, 0.0, 0.5, 0.9], 1.0).unwrap();
        for (u, h) in r.grid.iter().zip(&r.h) {
            assert!((h - 1.0 / (1.0 + u)).abs() < 1e-6, "{u} {h}");
        }
        assert!(!r.pass && (r.bound - 0.5).abs() < 1e-15);
        assert!(r.diagnosis.starts_with("no interior maximum"));
        let c = corollary_check(&link, 1.0, &ConnectOptions::default()).unwrap();
        assert!((c.lhs - 2f64.ln()).abs() < 1e-6);
        assert!((c.rhs - 2.0 * 0.5f64.atanh()).abs() < 1e-8);
        assert!(!c.pass && c.pass_alternate);
    }

    #[test]
    fn euclidean_estimates() {
        let e: Metric = Arc::new(Euclidean::new(2));
        let r = pseudo_distance_upper(&e, &[0.0, 0.0], &[1.0, 0.5], &PseudoDistanceOptions::default()).unwrap();
        assert!(r.upper_estimate <= 1e-9);
        let link = &r.chain.links[0];
        assert!(matches!(schwarz_ratio(link, &[0.0], 1.0), Err(FinslerError::HypothesisNotSatisfied(_))));
        let z = pseudo_distance_upper(&e, &[0.2, 0.1], &[0.2, 0.1], &PseudoDistanceOptions::default()).unwrap();
        assert_eq!(z.upper_estimate, 0.0);
    }

    #[test]
    fn ball_funk_distance_matches_interval_values() {
        let d = funk_distance_ball(&[0.0, 0.0], &[0.5, 0.0], 1.0).unwrap();
        assert!((d - 2f64.ln()).abs() < 1e-15);
        let back = funk_distance_ball(&[0.5, 0.0], &[0.0, 0.0], 1.0).unwrap();
        assert!((back - 1.5f64.ln()).abs() < 1e-15);
        let scaled = funk_distance_ball(&[0.0, 0.0], &[0.0, 0.5], 2.0).unwrap();
        assert!((scaled - 2f64.ln() / 2.0).abs() < 1e-15);
    }

}
