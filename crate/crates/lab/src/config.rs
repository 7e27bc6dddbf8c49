//! Flat `key = value` experiment configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nls_core::exponents::parse_rational;
use nls_core::functionals::{EquationParams, Sign};
use nls_core::integrator::SolverConfig;
use nls_core::spectral::BoxGrid;
use num_traits::ToPrimitive;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, found '{text}'")]
    Syntax { line: usize, text: String },
    #[error("unknown key '{0}'")]
    UnknownKey(String),
    #[error("key '{0}' given twice")]
    DuplicateKey(String),
    #[error("missing required key '{0}'")]
    Missing(&'static str),
    #[error("bad value for '{key}': {reason}")]
    Value { key: String, reason: String },
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// Every recognised key, in manifest order.
pub const KEYS: [&str; 15] = [
    "dim",
    "power",
    "sign",
    "s",
    "box_length",
    "points",
    "dt",
    "t_end",
    "sample_every",
    "N_list",
    "sigma_list",
    "lambda",
    "a",
    "seed",
    "radius_R",
];

const REQUIRED: [&str; 9] =
    ["dim", "power", "sign", "s", "box_length", "points", "dt", "t_end", "sample_every"];

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub params: EquationParams,
    /// The power exactly as written, so exact-arithmetic consumers can reparse it.
    pub power_text: String,
    pub s: f64,
    pub grid: BoxGrid,
    pub solver: SolverConfig,
    pub n_list: Vec<f64>,
    pub sigma_list: Vec<f64>,
    pub lambda: f64,
    /// Exponent in `N = σ^{-a}`.
    pub a: f64,
    pub seed: u64,
    /// Exit-ball radius; `None` means twice the initial `H^s` norm.
    pub radius_r: Option<f64>,
    pub output_path: PathBuf,
}

fn value_err(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Value { key: key.to_string(), reason: reason.into() }
}

fn number(key: &str, text: &str) -> Result<f64, ConfigError> {
    let v: f64 = match text.parse() {
        Ok(v) => v,
        Err(_) => parse_rational(text)
            .ok()
            .and_then(|r| r.to_f64())
            .ok_or_else(|| value_err(key, format!("'{text}' is not a number")))?,
    };
    if !v.is_finite() {
        return Err(value_err(key, "not finite"));
    }
    Ok(v)
}

fn list(key: &str, text: &str) -> Result<Vec<f64>, ConfigError> {
    let inner = text.trim().trim_start_matches('[').trim_end_matches(']');
    let values = inner
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| number(key, t))
        .collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err(value_err(key, "list is empty"));
    }
    if values.iter().any(|v| *v <= 0.0) {
        return Err(value_err(key, "entries must be positive"));
    }
    Ok(values)
}

fn integer(key: &str, text: &str) -> Result<u64, ConfigError> {
    text.parse().map_err(|_| value_err(key, format!("'{text}' is not a non-negative integer")))
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ")
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text)
    }

    /// Parses the flat format. Blank lines and `#` comments are ignored;
    /// lists are comma or space separated and may be bracketed.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries: BTreeMap<&str, &str> = BTreeMap::new();
        for (index, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: index + 1,
                text: raw.to_string(),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let known = KEYS
                .iter()
                .find(|k| **k == key)
                .ok_or_else(|| ConfigError::UnknownKey(key.to_string()))?;
            if entries.insert(known, value).is_some() {
                return Err(ConfigError::DuplicateKey(key.to_string()));
            }
        }
        for key in REQUIRED {
            if !entries.contains_key(key) {
                return Err(ConfigError::Missing(key));
            }
        }
        let get = |k: &str| entries.get(k).copied();

        let dim = integer("dim", get("dim").unwrap())? as usize;
        let power_text = get("power").unwrap().to_string();
        let power = number("power", &power_text)?;
        let sign: Sign = get("sign").unwrap().parse().map_err(|e| value_err("sign", format!("{e}")))?;
        let params =
            EquationParams::new(dim, power, sign).map_err(|e| value_err("power", e.to_string()))?;
        let s = number("s", get("s").unwrap())?;
        if !(s > 0.0 && s <= 1.0) {
            return Err(value_err("s", "must lie in (0, 1]"));
        }
        let box_length = number("box_length", get("box_length").unwrap())?;
        let points = integer("points", get("points").unwrap())? as usize;
        let grid = BoxGrid::new(dim, box_length, points)
            .map_err(|e| value_err("points", e.to_string()))?;
        let dt = number("dt", get("dt").unwrap())?;
        let t_end = number("t_end", get("t_end").unwrap())?;
        let sample_every = integer("sample_every", get("sample_every").unwrap())? as usize;
        let solver = SolverConfig::new(dt, t_end, sample_every);
        solver.validate(&grid).map_err(|e| value_err("dt", e.to_string()))?;

        let n_list = get("N_list").map_or(Ok(vec![8.0, 16.0, 32.0, 64.0]), |t| list("N_list", t))?;
        let sigma_list = get("sigma_list").map_or(Ok(vec![0.01]), |t| list("sigma_list", t))?;
        let lambda = get("lambda").map_or(Ok(1.0), |t| number("lambda", t))?;
        if lambda < 1.0 {
            return Err(value_err("lambda", "must be at least 1"));
        }
        let a = get("a").map_or(Ok(0.5 / (1.0 - s).max(0.5)), |t| number("a", t))?;
        if !(a > 0.0 && a * (1.0 - s) < 1.0) {
            return Err(value_err("a", format!("need a > 0 and a(1 - s) < 1, got a(1 - s) = {}", a * (1.0 - s))));
        }
        let seed = get("seed").map_or(Ok(0), |t| integer("seed", t))?;
        let radius_r = match get("radius_R") {
            None | Some("auto") => None,
            Some(t) => {
                let r = number("radius_R", t)?;
                if r <= 0.0 {
                    return Err(value_err("radius_R", "must be positive"));
                }
                Some(r)
            }
        };
        Ok(Self {
            params,
            power_text,
            s,
            grid,
            solver,
            n_list,
            sigma_list,
            lambda,
            a,
            seed,
            radius_r,
            output_path: PathBuf::from("."),
        })
    }

    /// Canonical `key = value` lines, all keys in [`KEYS`] order. Parsing
    /// the result reproduces the configuration.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (key, value) in self.entries() {
            let _ = writeln!(out, "{key} = {value}");
        }
        out
    }

    pub fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("dim", self.grid.dim().to_string()),
            ("power", self.power_text.clone()),
            ("sign", self.params.sign().to_string()),
            ("s", self.s.to_string()),
            ("box_length", self.grid.box_length().to_string()),
            ("points", self.grid.points_per_axis().to_string()),
            ("dt", self.solver.dt.to_string()),
            ("t_end", self.solver.t_end.to_string()),
            ("sample_every", self.solver.sample_every.to_string()),
            ("N_list", join(&self.n_list)),
            ("sigma_list", join(&self.sigma_list)),
            ("lambda", self.lambda.to_string()),
            ("a", self.a.to_string()),
            ("seed", self.seed.to_string()),
            ("radius_R", self.radius_r.map_or("auto".to_string(), |r| r.to_string())),
        ]
    }

    pub fn with_output(mut self, path: impl Into<PathBuf>) -> Self {
        self.output_path = path.into();
        self
    }
}
