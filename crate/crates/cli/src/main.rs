mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use projfinsler::metrics::MetricSpec;
use serde_json::json;

use commands::{execute, metric_from_kind, Output};
use config::{BallArgs, Command, IntervalArgs, RunConfig};

#[derive(Parser)]
#[command(name = "projfinsler", version, about = "Projective parameters and pseudo-distances of Finsler metrics")]
struct Cli {
    /// Worker threads (overrides PROJFINSLER_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for every sampled computation.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args, Clone, Default)]
struct MetricArgs {
    /// Shorthand kind: euclidean, klein, funk-ball, interval-funk.
    #[arg(long)]
    metric: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    /// Funk constant of the metric.
    #[arg(long = "metric-k")]
    metric_k: Option<f64>,
    /// Full metric object, e.g. '{"kind":"randers",...}'.
    #[arg(long, conflicts_with = "metric")]
    metric_json: Option<String>,
}

/// Comma-separated coordinates.
#[derive(Clone, Debug)]
struct Coords(Vec<f64>);

fn vector(s: &str) -> Result<Coords, String> {
    s.split(',').map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"))).collect::<Result<_, _>>().map(Coords)
}

fn opt(c: Option<Coords>) -> Option<Vec<f64>> {
    c.map(|c| c.0)
}

#[derive(Subcommand)]
enum Sub {
    /// Homogeneity and strong convexity on seeded samples.
    Validate {
        #[command(flatten)]
        metric: MetricArgs,
        #[arg(long, default_value_t = 32)]
        samples: usize,
        #[arg(long, default_value_t = 0.7)]
        radius: f64,
        #[arg(long, default_value_t = 1e-12)]
        tolerance: f64,
    },
    /// Unit-speed geodesic from x along y, or connecting x to --to; CSV trace.
    Geodesic {
        #[command(flatten)]
        metric: MetricArgs,
        #[arg(long, value_parser = vector, allow_hyphen_values = true)]
        x: Coords,
        #[arg(long, value_parser = vector, allow_hyphen_values = true)]
        y: Option<Coords>,
        #[arg(long, value_parser = vector, allow_hyphen_values = true)]
        to: Option<Coords>,
        #[arg(long)]
        length: Option<f64>,
        #[arg(long, default_value_t = 201)]
        points: usize,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Ricci curvature at a line element or on samples; optional Ricci bound check.
    Curvature {
        #[command(flatten)]
        metric: MetricArgs,
        #[arg(long, value_parser = vector, allow_hyphen_values = true)]
        x: Option<Coords>,
        #[arg(long, value_parser = vector, allow_hyphen_values = true)]
        y: Option<Coords>,
        #[arg(long)]
        check_bound: bool,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long, default_value_t = 32)]
        samples: usize,
        #[arg(long, default_value_t = 0.7)]
        radius: f64,
        #[arg(long, default_value_t = 1e-6)]
        tolerance: f64,
    },
    /// Projective parameter table along the geodesic through (x, y).
    Projparam {
        #[command(flatten)]
        metric: MetricArgs,
        #[arg(long, value_parser = vector, allow_hyphen_values = true)]
        x: Coords,
        #[arg(long, value_parser = vector, allow_hyphen_values = true)]
        y: Coords,
        /// Extension in each direction.
        #[arg(long)]
        length: Option<f64>,
        #[arg(long, default_value_t = 201)]
        points: usize,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Funk norms and distances on the interval or the unit ball.
    Funk {
        #[arg(long, conflicts_with = "ball")]
        interval: bool,
        #[arg(long)]
        ball: bool,
        #[arg(long, allow_hyphen_values = true)]
        a: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        b: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        v: Option<f64>,
        #[arg(long, value_parser = vector, allow_hyphen_values = true)]
        x: Option<Coords>,
        #[arg(long, value_parser = vector, allow_hyphen_values = true)]
        y: Option<Coords>,
        #[arg(long, value_parser = vector, allow_hyphen_values = true)]
        to: Option<Coords>,
        #[arg(long, default_value_t = 1.0)]
        k: f64,
    },
    /// Chain pseudo-distance estimate with optional lower bound and theorem checkers.
    Pseudodist {
        #[command(flatten)]
        metric: MetricArgs,
        #[arg(long, value_parser = vector, allow_hyphen_values = true)]
        x: Coords,
        #[arg(long, value_parser = vector, allow_hyphen_values = true)]
        y: Coords,
        #[arg(long, default_value_t = 1)]
        segments: usize,
        #[arg(long, default_value_t = 256)]
        budget: usize,
        #[arg(long, default_value_t = 1.0)]
        k: f64,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long, value_parser = vector, allow_hyphen_values = true)]
        schwarz_grid: Option<Coords>,
    },
    /// Full verification suite, JSON summary on stdout.
    VerifyAll {
        /// Only these criteria, e.g. 1,2,11.
        #[arg(long, value_delimiter = ',')]
        criteria: Option<Vec<u8>>,
    },
    /// Execute a JSON config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

struct Failure {
    kind: String,
    message: String,
    line: Option<usize>,
    column: Option<usize>,
    field: Option<String>,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { kind: "usage".into(), message: message.into(), line: None, column: None, field: None }
    }

    fn emit(&self) {
        let mut v = json!({ "error": self.kind, "message": self.message });
        if let Some(l) = self.line {
            v["line"] = json!(l);
        }
        if let Some(c) = self.column {
            v["column"] = json!(c);
        }
        if let Some(f) = &self.field {
            v["field"] = json!(f);
        }
        eprintln!("{v}");
    }
}

fn metric_spec(m: &MetricArgs) -> Result<Option<MetricSpec>, Failure> {
    if let Some(text) = &m.metric_json {
        return serde_json::from_str(text)
            .map(Some)
            .map_err(|e| Failure { kind: "usage".into(), message: format!("--metric-json: {e}"), line: Some(e.line()), column: Some(e.column()), field: None });
    }
    match &m.metric {
        Some(kind) => metric_from_kind(kind, m.n, m.metric_k).map(Some).map_err(Failure::usage),
        None => Err(Failure::usage("a metric is required (--metric or --metric-json)")),
    }
}

fn required<T>(v: Option<T>, name: &str) -> Result<T, Failure> {
    v.ok_or_else(|| Failure::usage(format!("--{name} is required")))
}

fn to_config(cli: Cli) -> Result<RunConfig, Failure> {
    let seed = cli.seed;
    let (metric, command) = match cli.command {
        Sub::Run { config } => {
            return RunConfig::load(&config).map_err(|e| Failure { kind: "usage".into(), message: e.message, line: e.line, column: e.column, field: e.field });
        }
        Sub::Validate { metric, samples, radius, tolerance } => (metric_spec(&metric)?, Command::Validate { samples, radius, tolerance }),
        Sub::Geodesic { metric, x, y, to, length, points, csv } => {
            (metric_spec(&metric)?, Command::Geodesic { x: x.0, y: opt(y), to: opt(to), length, points, csv })
        }
        Sub::Curvature { metric, x, y, check_bound, c, samples, radius, tolerance } => {
            (metric_spec(&metric)?, Command::Curvature { x: opt(x), y: opt(y), check_bound, c, samples, radius, tolerance })
        }
        Sub::Projparam { metric, x, y, length, points, csv } => (metric_spec(&metric)?, Command::Projparam { x: x.0, y: y.0, length, points, csv }),
        Sub::Funk { interval, ball, a, b, v, x, y, to, k } => {
            let command = if interval {
                Command::Funk {
                    interval: Some(IntervalArgs { a: required(a, "a")?, b: required(b, "b")?, k, v }),
                    ball: None,
                }
            } else if ball {
                Command::Funk { interval: None, ball: Some(BallArgs { x: required(opt(x), "x")?, y: opt(y), to: opt(to), k }) }
            } else {
                return Err(Failure::usage("funk needs --interval or --ball"));
            };
            (None, command)
        }
        Sub::Pseudodist { metric, x, y, segments, budget, k, c, schwarz_grid } => {
            (metric_spec(&metric)?, Command::Pseudodist { x: x.0, y: y.0, segments, budget, k, c, schwarz_grid: opt(schwarz_grid) })
        }
        Sub::VerifyAll { criteria } => (None, Command::VerifyAll { criteria }),
    };
    Ok(RunConfig { metric, command, seed })
}

fn configure_threads(flag: Option<usize>) -> Result<(), Failure> {
    let from_env = match std::env::var("PROJFINSLER_THREADS") {
        Ok(v) => Some(v.trim().parse::<usize>().map_err(|e| Failure::usage(format!("PROJFINSLER_THREADS={v:?}: {e}")))?),
        Err(_) => None,
    };
    if let Some(n) = flag.or(from_env) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::usage(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8, Failure> {
    configure_threads(cli.threads)?;
    let cfg = to_config(cli)?;
    let outcome = execute(&cfg).map_err(|e| Failure { kind: e.kind().into(), message: e.to_string(), line: None, column: None, field: None })?;
    match &outcome.output {
        Output::Json(v) => {
            let text = serde_json::to_string_pretty(v).map_err(|e| Failure::usage(e.to_string()))?;
            println!("{text}");
        }
        Output::Csv(bytes) => print!("{}", String::from_utf8_lossy(bytes)),
        Output::Text(t) => println!("{t}"),
    }
    Ok(if outcome.failed {
        1
    } else if outcome.flagged {
        2
    } else {
        0
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            Failure::usage(first).emit();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            f.emit();
            ExitCode::from(1)
        }
    }
}
