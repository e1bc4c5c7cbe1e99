//! Experiment settings: flat `key = value` files, command-line overrides and
//! the canonical echo written into every output header.

use std::fmt;

use ddlab_core::engine::{Axis, EngineKind, FixedParams, Scale, SweepSpec, DEFAULT_PHASE_KAPPAS};
use thiserror::Error;

use crate::tgrid::{format_axis, parse_axis};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { key: String, line: usize },
    #[error("line {line}: key `{key}` given twice")]
    Duplicate { key: String, line: usize },
    #[error("invalid value `{value}` for `{key}`: {reason}")]
    BadValue { key: String, value: String, reason: String },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

fn bad(key: &str, value: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::BadValue { key: key.to_string(), value: value.to_string(), reason: reason.into() }
}

/// One `key = value` line of an experiment file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

/// Parses the flat config syntax. Keys are checked against [`KEYS`]; values
/// are interpreted later by [`Settings::apply`].
pub fn parse_config(text: &str) -> Result<Vec<Entry>, ConfigError> {
    let mut entries: Vec<Entry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Syntax { line, message: format!("expected `key = value`, found `{content}`") });
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(ConfigError::Syntax { line, message: "missing key".into() });
        }
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey { key: key.to_string(), line });
        }
        if entries.iter().any(|e| e.key == key) {
            return Err(ConfigError::Duplicate { key: key.to_string(), line });
        }
        entries.push(Entry { key: key.to_string(), value: value.to_string(), line });
    }
    Ok(entries)
}

/// Every accepted key, in echo order.
pub const KEYS: &[&str] = &[
    "dims.d",
    "dims.p",
    "dims.n",
    "modulation.sigma1",
    "modulation.kappa",
    "noise.sigma_eps",
    "noise.test_noise",
    "train.eta",
    "train.lambda",
    "train.sgd_noise_std",
    "train.seeds",
    "train.base_seed",
    "sweep.t_grid",
    "sweep.lambda_grid",
    "sweep.engines",
    "sweep.prominence",
    "phase.r_points",
    "phase.q_points",
    "output.format",
    "output.svg",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    TheoryCurve,
    ExactCurve,
    Simulate,
    Compare,
    Heatmap,
    Phase,
    Rdecomp,
    Selfcheck,
}

impl Subcommand {
    pub fn name(&self) -> &'static str {
        match self {
            Subcommand::TheoryCurve => "theory-curve",
            Subcommand::ExactCurve => "exact-curve",
            Subcommand::Simulate => "simulate",
            Subcommand::Compare => "compare",
            Subcommand::Heatmap => "heatmap",
            Subcommand::Phase => "phase",
            Subcommand::Rdecomp => "rdecomp",
            Subcommand::Selfcheck => "selfcheck",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [
            Subcommand::TheoryCurve,
            Subcommand::ExactCurve,
            Subcommand::Simulate,
            Subcommand::Compare,
            Subcommand::Heatmap,
            Subcommand::Phase,
            Subcommand::Rdecomp,
            Subcommand::Selfcheck,
        ]
        .into_iter()
        .find(|s| s.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub d: usize,
    pub p: usize,
    pub n: usize,
    pub sigma1: f64,
    pub kappas: Vec<f64>,
    pub sigma_eps: f64,
    pub test_noise: bool,
    pub eta: f64,
    pub lambda: f64,
    pub sgd_noise_std: f64,
    pub seeds: usize,
    pub base_seed: u64,
    pub t_grid: Axis,
    pub lambda_grid: Axis,
    pub engines: Vec<EngineKind>,
    pub prominence: f64,
    pub r_points: usize,
    pub q_points: usize,
    pub format: Format,
    pub svg: bool,
}

fn log_axis(name: &str, min: f64, max: f64, count: usize) -> Axis {
    Axis { name: name.into(), scale: Scale::Log, min, max, count }
}

impl Settings {
    /// Defaults of each subcommand.
    pub fn defaults(cmd: Subcommand) -> Self {
        let mut s = Settings {
            d: 100,
            p: 70,
            n: 150,
            sigma1: 1.0,
            kappas: vec![100.0],
            sigma_eps: 0.3,
            test_noise: false,
            eta: 0.1,
            lambda: 1e-4,
            sgd_noise_std: 0.0,
            seeds: 20,
            base_seed: 0,
            t_grid: Axis::default_time(),
            lambda_grid: Axis::default_lambda(),
            engines: vec![EngineKind::Theory],
            prominence: 0.01,
            r_points: 51,
            q_points: 61,
            format: Format::Csv,
            svg: false,
        };
        match cmd {
            Subcommand::Compare => {
                s.kappas = vec![1.0, 10.0, 100.0];
                s.seeds = 100;
                s.t_grid = log_axis("t", 1.0, 1e7, 40);
                s.engines = vec![EngineKind::Theory, EngineKind::Exact, EngineKind::Simulate];
            }
            Subcommand::ExactCurve => s.seeds = 1,
            Subcommand::Phase => s.kappas = DEFAULT_PHASE_KAPPAS.to_vec(),
            Subcommand::Rdecomp => {
                s.p = s.d / 2;
                s.lambda = 0.0;
                s.t_grid = log_axis("t", 1e-2, 1e9, 120);
            }
            _ => {}
        }
        s
    }

    /// Sets one key from its textual value.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "dims.d" => self.d = parse_count(key, value)?,
            "dims.p" => self.p = parse_count(key, value)?,
            "dims.n" => self.n = parse_count(key, value)?,
            "modulation.sigma1" => self.sigma1 = parse_real(key, value)?,
            "modulation.kappa" => {
                self.kappas = value.split(',').map(|v| parse_real(key, v.trim())).collect::<Result<_, _>>()?;
            }
            "noise.sigma_eps" => self.sigma_eps = parse_real(key, value)?,
            "noise.test_noise" => self.test_noise = parse_bool(key, value)?,
            "train.eta" => self.eta = parse_real(key, value)?,
            "train.lambda" => self.lambda = parse_real(key, value)?,
            "train.sgd_noise_std" => self.sgd_noise_std = parse_real(key, value)?,
            "train.seeds" => self.seeds = parse_count(key, value)?,
            "train.base_seed" => {
                self.base_seed = value.parse().map_err(|_| bad(key, value, "expected an unsigned 64-bit integer"))?
            }
            "sweep.t_grid" => self.t_grid = parse_axis("t", value).map_err(|e| bad(key, value, e.to_string()))?,
            "sweep.lambda_grid" => {
                self.lambda_grid = parse_axis("lambda", value).map_err(|e| bad(key, value, e.to_string()))?
            }
            "sweep.engines" => {
                let mut engines = Vec::new();
                for name in value.split(',').map(str::trim) {
                    let engine = match name {
                        "theory" => EngineKind::Theory,
                        "exact" => EngineKind::Exact,
                        "simulate" => EngineKind::Simulate,
                        _ => return Err(bad(key, value, format!("unknown engine `{name}`"))),
                    };
                    if !engines.contains(&engine) {
                        engines.push(engine);
                    }
                }
                self.engines = engines;
            }
            "sweep.prominence" => self.prominence = parse_real(key, value)?,
            "phase.r_points" => self.r_points = parse_count(key, value)?,
            "phase.q_points" => self.q_points = parse_count(key, value)?,
            "output.format" => {
                self.format = match value {
                    "csv" => Format::Csv,
                    "json" => Format::Json,
                    _ => return Err(bad(key, value, "expected csv or json")),
                }
            }
            "output.svg" => self.svg = parse_bool(key, value)?,
            _ => return Err(ConfigError::UnknownKey { key: key.to_string(), line: 0 }),
        }
        Ok(())
    }

    pub fn apply_entries(&mut self, entries: &[Entry]) -> Result<(), ConfigError> {
        for e in entries {
            self.apply(&e.key, &e.value)?;
        }
        Ok(())
    }

    /// Range checks, reported against the config key.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let check = |ok: bool, key: &str, value: String, reason: &str| if ok { Ok(()) } else { Err(bad(key, &value, reason)) };
        check(self.d >= 2, "dims.d", self.d.to_string(), "must be at least 2")?;
        check(self.p >= 1 && self.p < self.d, "dims.p", self.p.to_string(), "must satisfy 1 <= p <= d-1")?;
        check(self.n >= 1, "dims.n", self.n.to_string(), "must be at least 1")?;
        check(self.sigma1 > 0.0 && self.sigma1.is_finite(), "modulation.sigma1", self.sigma1.to_string(), "must be positive")?;
        check(!self.kappas.is_empty(), "modulation.kappa", String::new(), "needs at least one value")?;
        for &k in &self.kappas {
            check(k >= 1.0 && k.is_finite(), "modulation.kappa", k.to_string(), "must be finite and >= 1")?;
        }
        check(self.sigma_eps >= 0.0 && self.sigma_eps.is_finite(), "noise.sigma_eps", self.sigma_eps.to_string(), "must be >= 0")?;
        check(self.eta > 0.0 && self.eta.is_finite(), "train.eta", self.eta.to_string(), "must be positive")?;
        check(self.lambda >= 0.0 && self.lambda.is_finite(), "train.lambda", self.lambda.to_string(), "must be finite and >= 0")?;
        check(
            self.sgd_noise_std >= 0.0 && self.sgd_noise_std.is_finite(),
            "train.sgd_noise_std",
            self.sgd_noise_std.to_string(),
            "must be >= 0",
        )?;
        check(self.seeds >= 1, "train.seeds", self.seeds.to_string(), "must be at least 1")?;
        check(!self.engines.is_empty(), "sweep.engines", String::new(), "needs at least one engine")?;
        check(self.prominence > 0.0 && self.prominence < 1.0, "sweep.prominence", self.prominence.to_string(), "must lie in (0, 1)")?;
        check(self.r_points >= 2, "phase.r_points", self.r_points.to_string(), "must be at least 2")?;
        check(self.q_points >= 2, "phase.q_points", self.q_points.to_string(), "must be at least 2")?;
        Ok(())
    }

    /// Canonical `(key, value)` pairs of everything that influences the data.
    /// Output location, format and thread count are left out since they do
    /// not change a single number.
    pub fn echo(&self) -> Vec<(String, String)> {
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let engines = self.engines.iter().map(|e| e.name()).collect::<Vec<_>>().join(",");
        [
            ("dims.d", self.d.to_string()),
            ("dims.p", self.p.to_string()),
            ("dims.n", self.n.to_string()),
            ("modulation.sigma1", self.sigma1.to_string()),
            ("modulation.kappa", list(&self.kappas)),
            ("noise.sigma_eps", self.sigma_eps.to_string()),
            ("noise.test_noise", self.test_noise.to_string()),
            ("train.eta", self.eta.to_string()),
            ("train.lambda", self.lambda.to_string()),
            ("train.sgd_noise_std", self.sgd_noise_std.to_string()),
            ("train.seeds", self.seeds.to_string()),
            ("train.base_seed", self.base_seed.to_string()),
            ("sweep.t_grid", format_axis(&self.t_grid)),
            ("sweep.lambda_grid", format_axis(&self.lambda_grid)),
            ("sweep.engines", engines),
            ("sweep.prominence", self.prominence.to_string()),
            ("phase.r_points", self.r_points.to_string()),
            ("phase.q_points", self.q_points.to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }

    pub fn fixed(&self) -> FixedParams {
        FixedParams {
            d: self.d,
            p: self.p,
            n: self.n,
            sigma1: self.sigma1,
            eta: self.eta,
            lambda: self.lambda,
            noise_std: self.sigma_eps,
            include_test_noise: self.test_noise,
        }
    }

    pub fn sweep(&self, threads: usize) -> SweepSpec {
        SweepSpec {
            fixed: self.fixed(),
            kappas: self.kappas.clone(),
            t_axis: self.t_grid.clone(),
            lambda_axis: self.lambda_grid.clone(),
            engines: self.engines.clone(),
            num_seeds: self.seeds,
            base_seed: self.base_seed,
            threads,
            prominence: self.prominence,
        }
    }
}

fn parse_real(key: &str, value: &str) -> Result<f64, ConfigError> {
    let v: f64 = value.parse().map_err(|_| bad(key, value, "expected a number"))?;
    if v.is_nan() {
        return Err(bad(key, value, "NaN is not allowed"));
    }
    Ok(v)
}

fn parse_count(key: &str, value: &str) -> Result<usize, ConfigError> {
    value.parse().map_err(|_| bad(key, value, "expected a non-negative integer"))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(bad(key, value, "expected true or false")),
    }
}
