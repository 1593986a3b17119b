use std::path::Path;

use projfinsler::curvature::{check_ricci_bound, ricci_tensor};
use projfinsler::diffengine::EngineConfig;
use projfinsler::distance::{
    corollary_check, funk_distance_ball, funk_distance_interval, pseudo_distance_upper, schwarz_ratio, ChainLink, IntervalPair,
    PseudoDistanceOptions,
};
use projfinsler::geodesics::{connect, extend_geodesic, ConnectOptions, GeodesicOptions, GeodesicSegment};
use projfinsler::metrics::{interval_funk_eval, FunkBall, MetricSpec};
use projfinsler::projective::ProjectiveParameter;
use projfinsler::sampling;
use projfinsler::structure::{validate_homogeneity, validate_strong_convexity, ValidationReport};
use projfinsler::verify;
use projfinsler::{FinslerError, FinslerStructure, Metric, Result};
use rand::Rng;
use serde_json::{json, Value};

use crate::config::{BallArgs, Command, IntervalArgs, RunConfig};

/// What a command produced.
pub enum Output {
    Json(Value),
    Csv(Vec<u8>),
    Text(String),
}

pub struct Outcome {
    pub output: Output,
    /// A report-only checker flagged a violation.
    pub flagged: bool,
    /// A requested verification did not pass.
    pub failed: bool,
}

impl Outcome {
    fn json(value: Value) -> Self {
        Outcome { output: Output::Json(value), flagged: false, failed: false }
    }
}

const MIN_DEFECT: f64 = 1e-3;

fn metric(cfg: &RunConfig) -> Result<Metric> {
    cfg.metric
        .as_ref()
        .ok_or_else(|| FinslerError::InvalidArgument("this command needs a metric".into()))?
        .build()
}

fn unit(metric: &Metric, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    check_dim(metric, x)?;
    check_dim(metric, y)?;
    let f = metric.norm(x, y)?;
    if f.is_nan() || f <= 0.0 {
        return Err(FinslerError::InvalidArgument("zero tangent vector".into()));
    }
    Ok(y.iter().map(|c| c / f).collect())
}

fn check_dim(metric: &Metric, v: &[f64]) -> Result<()> {
    if v.len() != metric.dim() {
        return Err(FinslerError::Dimension { expected: metric.dim(), got: v.len() });
    }
    Ok(())
}

fn grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect(),
    }
}

fn write_csv(header: &[String], rows: &[Vec<f64>], path: Option<&Path>) -> Result<Option<Vec<u8>>> {
    let io = |e: std::io::Error| FinslerError::InvalidArgument(format!("cannot write csv: {e}"));
    let mut w = csv::Writer::from_writer(Vec::new());
    let fmt = |e: csv::Error| FinslerError::InvalidArgument(format!("csv: {e}"));
    w.write_record(header).map_err(fmt)?;
    for r in rows {
        w.write_record(r.iter().map(|v| v.to_string())).map_err(fmt)?;
    }
    let bytes = w.into_inner().map_err(|e| FinslerError::InvalidArgument(format!("csv: {e}")))?;
    match path {
        Some(p) => {
            std::fs::write(p, &bytes).map_err(io)?;
            Ok(None)
        }
        None => Ok(Some(bytes)),
    }
}

fn coords(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (0..n).map(move |i| format!("{prefix}{i}"))
}

pub fn execute(cfg: &RunConfig) -> Result<Outcome> {
    match &cfg.command {
        Command::Validate { samples, radius, tolerance } => validate(&metric(cfg)?, *samples, *radius, *tolerance, cfg.seed),
        Command::Geodesic { x, y, to, length, points, csv } => {
            geodesic(&metric(cfg)?, x, y.as_deref(), to.as_deref(), *length, *points, csv.as_deref())
        }
        Command::Curvature { x, y, check_bound, c, samples, radius, tolerance } => {
            let m = metric(cfg)?;
            let sample_set = match (x, y) {
                (Some(x), Some(y)) => {
                    check_dim(&m, x)?;
                    check_dim(&m, y)?;
                    vec![(x.clone(), y.clone())]
                }
                (None, None) => sampling::line_elements(m.as_ref(), *samples, *radius, MIN_DEFECT, cfg.seed),
                _ => return Err(FinslerError::InvalidArgument("give both x and y, or neither".into())),
            };
            curvature(&m, &sample_set, *check_bound, *c, *tolerance)
        }
        Command::Projparam { x, y, length, points, csv } => projparam(&metric(cfg)?, x, y, *length, *points, csv.as_deref()),
        Command::Funk { interval, ball } => funk(interval.as_ref(), ball.as_ref()),
        Command::Pseudodist { x, y, segments, budget, k, c, schwarz_grid } => {
            let opts = PseudoDistanceOptions {
                segments: *segments,
                budget: *budget,
                k: *k,
                c: *c,
                ..PseudoDistanceOptions::default()
            };
            pseudodist(&metric(cfg)?, x, y, &opts, schwarz_grid.as_deref())
        }
        Command::VerifyAll { criteria } => verify_all(criteria.as_deref()),
    }
}

fn validate(metric: &Metric, samples: usize, radius: f64, tolerance: f64, seed: u64) -> Result<Outcome> {
    let elements = sampling::line_elements(metric.as_ref(), samples, radius, MIN_DEFECT, seed);
    let mut rng = sampling::rng(seed ^ 0x5eed);
    let scaled: Vec<_> = elements.iter().map(|(x, y)| (x.clone(), y.clone(), rng.gen_range(0.1..10.0))).collect();
    let mut report = validate_homogeneity(metric.as_ref(), &scaled, tolerance)?;
    report.checks.extend(validate_strong_convexity(metric.as_ref(), &elements, &EngineConfig::default())?.checks);
    let failed = !report.passed();
    Ok(Outcome {
        failed,
        ..Outcome::json(json!({ "samples": samples, "seed": seed, "pass": !failed, "report": report_value(&report) }))
    })
}

fn report_value(r: &ValidationReport) -> Value {
    serde_json::to_value(r).unwrap_or(Value::Null)
}

fn geodesic(metric: &Metric, x: &[f64], y: Option<&[f64]>, to: Option<&[f64]>, length: Option<f64>, points: usize, csv: Option<&Path>) -> Result<Outcome> {
    let (segment, summary) = match (y, to) {
        (Some(y), None) => {
            let dir = unit(metric, x, y)?;
            let len = length.unwrap_or(1.0);
            let seg = extend_geodesic(metric, x, &dir, 0.0, len, &GeodesicOptions::default())?;
            let summary = json!({
                "problem": "initial-value",
                "x": x,
                "direction": dir,
                "requested_length": len,
                "length": seg.length(),
                "truncated": seg.truncated_hi,
                "speed_drift": seg.speed_drift()?,
            });
            (seg, summary)
        }
        (None, Some(to)) => {
            check_dim(metric, x)?;
            check_dim(metric, to)?;
            let bvp = connect(metric, x, to, &ConnectOptions::default())?;
            let summary = json!({
                "problem": "boundary-value",
                "x": x,
                "to": to,
                "length": bvp.length(),
                "miss": bvp.miss,
                "iterations": bvp.iterations,
                "speed_drift": bvp.segment.speed_drift()?,
            });
            (bvp.segment, summary)
        }
        _ => return Err(FinslerError::InvalidArgument("give exactly one of y (initial value) or to (boundary value)".into())),
    };
    let n = metric.dim();
    let header: Vec<String> = std::iter::once("s".to_string()).chain(coords("x", n)).chain(coords("v", n)).collect();
    let rows = trace(&segment, points)?;
    csv_outcome(&header, &rows, csv, summary)
}

fn trace(segment: &GeodesicSegment, points: usize) -> Result<Vec<Vec<f64>>> {
    let (lo, hi) = segment.s_range();
    grid(lo, hi, points)
        .into_iter()
        .map(|s| {
            let mut row = vec![s];
            row.extend(segment.state(s)?);
            Ok(row)
        })
        .collect()
}

fn csv_outcome(header: &[String], rows: &[Vec<f64>], csv: Option<&Path>, mut summary: Value) -> Result<Outcome> {
    match write_csv(header, rows, csv)? {
        Some(bytes) => Ok(Outcome { output: Output::Csv(bytes), flagged: false, failed: false }),
        None => {
            summary["csv"] = json!(csv.map(|p| p.display().to_string()));
            summary["rows"] = json!(rows.len());
            Ok(Outcome::json(summary))
        }
    }
}

fn curvature(metric: &Metric, samples: &[(Vec<f64>, Vec<f64>)], check_bound: bool, c: Option<f64>, tolerance: f64) -> Result<Outcome> {
    let cfg = EngineConfig::default();
    let data = samples
        .iter()
        .map(|(x, y)| Ok(json!({ "x": x, "y": y, "curvature": ricci_tensor(metric.as_ref(), x, y, &cfg)? })))
        .collect::<Result<Vec<Value>>>()?;
    let mut out = json!({ "samples": data });
    let mut failed = false;
    if check_bound {
        let c = c.ok_or_else(|| FinslerError::InvalidArgument("--check-bound needs c".into()))?;
        let report = check_ricci_bound(metric.as_ref(), samples, c, tolerance, &cfg)?;
        failed = !report.pass;
        out["pass"] = json!(report.pass);
        out["max_eigenvalue"] = json!(report.worst);
        out["bound"] = serde_json::to_value(&report).unwrap_or(Value::Null);
    }
    Ok(Outcome { failed, ..Outcome::json(out) })
}

fn projparam(metric: &Metric, x: &[f64], y: &[f64], length: Option<f64>, points: usize, csv: Option<&Path>) -> Result<Outcome> {
    let dir = unit(metric, x, y)?;
    let len = length.unwrap_or(10.0);
    let seg = extend_geodesic(metric, x, &dir, len, len, &GeodesicOptions::default())?;
    let p = ProjectiveParameter::along(&seg, 0.0)?;
    let n = metric.dim();
    let (lo, hi) = p.s_range();
    let rows = grid(lo, hi, points)
        .into_iter()
        .map(|s| {
            let w = p.w(s)?;
            let mut row = vec![s];
            row.extend(p.position(s)?);
            row.push(p.q(s)?);
            row.extend_from_slice(&w);
            row.push(p.pi(s).unwrap_or(f64::NAN));
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let header: Vec<String> = std::iter::once("s".to_string())
        .chain(coords("x", n))
        .chain(["q", "w1", "w1_prime", "w2", "w2_prime", "pi"].map(String::from))
        .collect();
    let summary = json!({
        "x": x,
        "direction": dir,
        "s_range": [lo, hi],
        "poles": p.poles(),
        "range": p.range(),
        "wronskian_drift": p.wronskian_drift(),
    });
    csv_outcome(&header, &rows, csv, summary)
}

fn funk(interval: Option<&IntervalArgs>, ball: Option<&BallArgs>) -> Result<Outcome> {
    match (interval, ball) {
        (Some(i), None) => {
            let d = funk_distance_interval(&IntervalPair::new(i.a, i.b, i.k)?)?;
            match i.v {
                None => Ok(Outcome { output: Output::Text(format!("{d}")), flagged: false, failed: false }),
                Some(v) => Ok(Outcome::json(json!({
                    "a": i.a, "b": i.b, "k": i.k, "distance": d,
                    "v": v, "norm": interval_funk_eval(i.a, v, i.k)?,
                }))),
            }
        }
        (None, Some(b)) => {
            let m = FunkBall::new(b.x.len(), b.k)?;
            let mut out = json!({ "x": b.x, "k": b.k });
            if let Some(y) = &b.y {
                out["y"] = json!(y);
                out["norm"] = json!(m.norm(&b.x, y)?);
            }
            if let Some(to) = &b.to {
                out["to"] = json!(to);
                out["distance"] = json!(funk_distance_ball(&b.x, to, b.k)?);
                out["reverse_distance"] = json!(funk_distance_ball(to, &b.x, b.k)?);
            }
            if b.y.is_none() && b.to.is_none() {
                return Err(FinslerError::InvalidArgument("ball mode needs y or to".into()));
            }
            Ok(Outcome::json(out))
        }
        _ => Err(FinslerError::InvalidArgument("give exactly one of interval or ball".into())),
    }
}

fn pseudodist(metric: &Metric, x: &[f64], y: &[f64], opts: &PseudoDistanceOptions, schwarz_grid: Option<&[f64]>) -> Result<Outcome> {
    check_dim(metric, x)?;
    check_dim(metric, y)?;
    let report = pseudo_distance_upper(metric, x, y, opts)?;
    let mut flagged = report.lower_bound_consistent == Some(false);
    let mut out = json!({ "report": report });
    if let Some(grid) = schwarz_grid {
        let c = opts.c.ok_or_else(|| FinslerError::InvalidArgument("the Schwarz-ratio checker needs c".into()))?;
        let link = ChainLink::build(metric, x, y, opts.k, &opts.connect, opts.length_cap)?;
        let schwarz = schwarz_ratio(&link, grid, c)?;
        let corollary = corollary_check(&link, c, &opts.connect)?;
        flagged |= !schwarz.pass || !corollary.pass;
        out["schwarz"] = serde_json::to_value(&schwarz).unwrap_or(Value::Null);
        out["corollary"] = serde_json::to_value(corollary).unwrap_or(Value::Null);
    }
    out["flagged"] = json!(flagged);
    Ok(Outcome { flagged, ..Outcome::json(out) })
}

fn verify_all(criteria: Option<&[u8]>) -> Result<Outcome> {
    let outcomes = match criteria {
        None => verify::run_all(),
        Some(ids) => ids.iter().map(|&id| verify::criterion(id)).collect::<Result<Vec<_>>>()?,
    };
    for o in &outcomes {
        log::info!("{}", o.line());
    }
    let pass = outcomes.iter().all(|o| o.pass);
    let failed_ids: Vec<u8> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    let flags: Vec<Value> = outcomes
        .iter()
        .flat_map(|o| o.flagged.iter().map(move |f| json!({ "criterion": o.id, "message": f })))
        .collect();
    let summary = json!({
        "pass": pass,
        "failed": failed_ids,
        "flagged": flags,
        "criteria": outcomes,
    });
    Ok(Outcome { failed: !pass, ..Outcome::json(summary) })
}

pub fn metric_from_kind(kind: &str, n: Option<usize>, k: Option<f64>) -> std::result::Result<MetricSpec, String> {
    let need_n = || n.ok_or_else(|| format!("metric kind {kind} needs --n"));
    Ok(match kind {
        "euclidean" => MetricSpec::Euclidean { n: need_n()? },
        "klein" => MetricSpec::Klein { n: need_n()? },
        "funk-ball" => MetricSpec::FunkBall { n: need_n()?, k: k.unwrap_or(1.0) },
        "interval-funk" => MetricSpec::IntervalFunk { k: k.unwrap_or(1.0) },
        other => return Err(format!("metric kind {other} needs --metric-json (known shorthand kinds: euclidean, klein, funk-ball, interval-funk)")),
    })
}
