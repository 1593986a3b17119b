use std::path::{Path, PathBuf};

use projfinsler::metrics::MetricSpec;
use serde::{Deserialize, Serialize};

/// Contents of a `run --config` file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub metric: Option<MetricSpec>,
    pub command: Command,
    #[serde(default)]
    pub seed: u64,
}

fn default_samples() -> usize {
    32
}

fn default_radius() -> f64 {
    0.7
}

fn default_points() -> usize {
    201
}

fn default_k() -> f64 {
    1.0
}

fn default_segments() -> usize {
    1
}

fn default_budget() -> usize {
    256
}

fn default_tolerance() -> f64 {
    1e-12
}

fn default_bound_tolerance() -> f64 {
    1e-6
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Command {
    Validate {
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default = "default_radius")]
        radius: f64,
        #[serde(default = "default_tolerance")]
        tolerance: f64,
    },
    /// Initial value problem from `(x, y)` over `length`, or boundary value
    /// problem from `x` to `to`.
    Geodesic {
        x: Vec<f64>,
        #[serde(default)]
        y: Option<Vec<f64>>,
        #[serde(default)]
        to: Option<Vec<f64>>,
        #[serde(default)]
        length: Option<f64>,
        #[serde(default = "default_points")]
        points: usize,
        #[serde(default)]
        csv: Option<PathBuf>,
    },
    Curvature {
        #[serde(default)]
        x: Option<Vec<f64>>,
        #[serde(default)]
        y: Option<Vec<f64>>,
        #[serde(default)]
        check_bound: bool,
        #[serde(default)]
        c: Option<f64>,
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default = "default_radius")]
        radius: f64,
        #[serde(default = "default_bound_tolerance")]
        tolerance: f64,
    },
    Projparam {
        x: Vec<f64>,
        y: Vec<f64>,
        #[serde(default)]
        length: Option<f64>,
        #[serde(default = "default_points")]
        points: usize,
        #[serde(default)]
        csv: Option<PathBuf>,
    },
    Funk {
        #[serde(default)]
        interval: Option<IntervalArgs>,
        #[serde(default)]
        ball: Option<BallArgs>,
    },
    Pseudodist {
        x: Vec<f64>,
        y: Vec<f64>,
        #[serde(default = "default_segments")]
        segments: usize,
        #[serde(default = "default_budget")]
        budget: usize,
        #[serde(default = "default_k")]
        k: f64,
        #[serde(default)]
        c: Option<f64>,
        /// Grid in `(-1, 1)` for the Schwarz-ratio and corollary checkers.
        #[serde(default)]
        schwarz_grid: Option<Vec<f64>>,
    },
    VerifyAll {
        #[serde(default)]
        criteria: Option<Vec<u8>>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalArgs {
    pub a: f64,
    pub b: f64,
    #[serde(default = "default_k")]
    pub k: f64,
    /// Optional tangent value for a norm evaluation at `a`.
    #[serde(default)]
    pub v: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallArgs {
    pub x: Vec<f64>,
    #[serde(default)]
    pub y: Option<Vec<f64>>,
    #[serde(default)]
    pub to: Option<Vec<f64>>,
    #[serde(default = "default_k")]
    pub k: f64,
}

#[derive(Debug)]
pub struct ConfigError {
    pub message: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
    /// Dotted path of the offending field.
    pub field: Option<String>,
}

impl RunConfig {
    pub fn from_str(text: &str) -> Result<Self, ConfigError> {
        let mut de = serde_json::Deserializer::from_str(text);
        let parsed = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let field = e.path().to_string();
            let inner = e.into_inner();
            ConfigError {
                message: inner.to_string(),
                line: Some(inner.line()),
                column: Some(inner.column()),
                field: (field != ".").then_some(field),
            }
        })?;
        de.end().map_err(|e| ConfigError {
            message: e.to_string(),
            line: Some(e.line()),
            column: Some(e.column()),
            field: None,
        })?;
        Ok(parsed)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            message: format!("{}: {e}", path.display()),
            line: None,
            column: None,
            field: None,
        })?;
        Self::from_str(&text)
    }
}
