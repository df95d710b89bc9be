use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use chebcrit::pipeline::check_degree;
use chebcrit::{ApproxConfig, ChebSeries, FunctionSpec, SolveConfig};
use serde::{Deserialize, Serialize};

use crate::args::{Format, FunctionArgs, RunArgs};

/// Everything that determines a run; embedded in every output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<String>,
    pub interval: [f64; 2],
    pub degrees: Vec<usize>,
    pub solve: SolveConfig,
    pub level: f64,
    pub format: Format,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tests: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub only: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

impl RunConfig {
    pub fn new(command: &str, run: &RunArgs, interval: [f64; 2], degrees: Vec<usize>) -> Self {
        Self {
            command: command.to_string(),
            function: None,
            interval,
            degrees,
            solve: SolveConfig {
                t_cap: run.t_cap,
                tol: run.tol,
                damping: run.damping,
                max_iter: run.max_iter,
                edge_groups: run.edge_groups,
                restart: run.restart,
            },
            level: run.level,
            format: run.format,
            seed: run.seed,
            tests: None,
            thresholds: None,
            only: None,
            epsilon: None,
            samples: None,
        }
    }

    pub fn approx_config(&self) -> Result<ApproxConfig> {
        let config = ApproxConfig {
            solve: self.solve,
            level: self.level,
            ..ApproxConfig::default()
        };
        config.validate()?;
        Ok(config)
    }
}

/// The polynomial artifact written by `approximate`.
///
/// `cheb_coeffs` are in the reduced variable `t in [-1, 1]`, with
/// `x = (alpha + beta)/2 + (beta - alpha)/2 t`; `derivative_roots` are in `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub degree: usize,
    pub function: String,
    pub interval: [f64; 2],
    pub cheb_coeffs: Vec<f64>,
    pub derivative_roots: Vec<f64>,
    /// `P' = scale T_n(., y)` in the reduced variable.
    pub scale: f64,
    /// `P` at the interval midpoint.
    pub anchor: f64,
    pub sup_error: f64,
    pub converged: bool,
    pub residual: f64,
    pub iterations: usize,
    pub perturbation: Vec<f64>,
    pub frozen_edge_groups: Vec<usize>,
    pub config: RunConfig,
    pub seed: u64,
}

impl Artifact {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn series(&self) -> Result<ChebSeries> {
        Ok(ChebSeries::new(self.cheb_coeffs.clone())?)
    }

    /// `P(x)` for `x` in the original interval.
    pub fn eval(&self, x: f64) -> Result<f64> {
        Ok(self.series()?.eval(to_unit(self.interval, x)))
    }
}

pub fn to_unit(interval: [f64; 2], x: f64) -> f64 {
    let [a, b] = interval;
    (2.0 * x - a - b) / (b - a)
}

pub fn from_unit(interval: [f64; 2], t: f64) -> f64 {
    let [a, b] = interval;
    0.5 * (a + b) + 0.5 * (b - a) * t
}

pub fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    let items: Vec<&str> = text.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        bail!("{what} list is empty");
    }
    items
        .iter()
        .map(|s| s.parse::<T>().map_err(|_| anyhow!("cannot parse '{s}' in {what} list")))
        .collect()
}

pub fn parse_degrees(text: &str) -> Result<Vec<usize>> {
    let degrees = parse_list::<usize>(text, "degree")?;
    for &n in &degrees {
        check_degree(n)?;
    }
    Ok(degrees)
}

pub fn parse_interval(text: Option<&str>) -> Result<[f64; 2]> {
    let Some(text) = text else {
        return Ok([-1.0, 1.0]);
    };
    let v = parse_list::<f64>(text, "interval")?;
    match v[..] {
        [a, b] if a.is_finite() && b.is_finite() && a < b => Ok([a, b]),
        _ => bail!("interval must be two finite numbers alpha < beta, got '{text}'"),
    }
}

fn read_knots(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot open knots file {}", path.display()))?;
    let mut knots = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != 2 {
            bail!("knots line {} must have two fields x,value", i + 1);
        }
        match (record[0].parse::<f64>(), record[1].parse::<f64>()) {
            (Ok(x), Ok(v)) => knots.push((x, v)),
            // a header row
            _ if i == 0 => continue,
            _ => bail!("cannot parse knots line {}: '{},{}'", i + 1, &record[0], &record[1]),
        }
    }
    Ok(knots)
}

/// The target on its own interval and its reduction to `[-1, 1]`.
pub fn load_function(args: &FunctionArgs) -> Result<(FunctionSpec, [f64; 2])> {
    let interval = parse_interval(args.interval.as_deref())?;
    let spec = match (&args.function, &args.knots) {
        (Some(s), None) => s.parse::<FunctionSpec>()?,
        (None, Some(path)) => FunctionSpec::piecewise_linear(read_knots(path)?)?,
        (None, None) => bail!("missing --fn (or --knots)"),
        (Some(_), Some(_)) => bail!("--fn and --knots are mutually exclusive"),
    };
    let reduced = if interval == [-1.0, 1.0] {
        spec
    } else {
        spec.reduced_to(interval[0], interval[1])?
    };
    Ok((reduced, interval))
}

pub fn describe_function(args: &FunctionArgs) -> String {
    match (&args.function, &args.knots) {
        (Some(s), _) => s.clone(),
        (None, Some(p)) => format!("knots:{}", p.display()),
        (None, None) => String::new(),
    }
}
