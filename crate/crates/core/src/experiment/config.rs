//! Flat `section.key = value` experiment configuration.
//!
//! ```text
//! # comment
//! scenario.soi_doa_deg = 0
//! scenario.interferers = -30:20, 30:20, 70:40   # doa_deg:inr_db pairs
//! experiment.methods = mvdr, sc, wsc
//! ```
//!
//! Unknown keys, duplicate keys and invariant violations are rejected with the
//! offending key path.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::array::{ArrayGeometry, Interferer, Scenario};
use crate::solvers::{Method, SolverOptions};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("unknown key `{key}` (line {line})")]
    UnknownKey { key: String, line: usize },

    #[error("duplicate key `{key}` (line {line})")]
    DuplicateKey { key: String, line: usize },

    #[error("missing required key `{key}`")]
    MissingKey { key: String },

    #[error("invalid value for `{key}`: {message}")]
    InvalidValue { key: String, message: String },

    /// A value parsed but breaks a cross-field or domain invariant.
    #[error("invariant violated at `{key}`: {message}")]
    Invariant { key: String, message: String },
}

const KNOWN_KEYS: &[&str] = &[
    "scenario.soi_doa_deg",
    "scenario.soi_snr_db",
    "scenario.interferers",
    "scenario.num_snapshots",
    "scenario.noise_power",
    "scenario.rng_seed",
    "geometry.num_elements",
    "geometry.spacing_wavelengths",
    "experiment.methods",
    "experiment.mismatch_deg",
    "experiment.monte_carlo_runs",
    "experiment.output_dir",
    "experiment.grid_resolution_deg",
    "experiment.pattern_resolution_deg",
    "experiment.metric_resolution_deg",
    "experiment.null_window_deg",
    "experiment.ellipsoid_half_width_deg",
    "experiment.ellipsoid_samples",
    "experiment.failure_budget",
    "solver.gamma",
    "solver.p",
    "solver.max_iterations",
    "solver.objective_tolerance",
    "solver.irls_epsilon",
    "solver.diagonal_loading",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub geometry: ArrayGeometry,
    /// Spacing of the penalty DOA grid.
    pub grid_resolution_deg: f64,
    /// Spacing of the exported pattern CSVs.
    pub pattern_resolution_deg: f64,
    /// Spacing of the patterns the metrics are computed on.
    pub metric_resolution_deg: f64,
    pub null_window_deg: f64,
    pub methods: Vec<Method>,
    pub solver_options: SolverOptions,
    /// Steering error applied to every method: all beamformers steer at
    /// `soi_doa_deg + mismatch_deg`.
    pub mismatch_deg: f64,
    pub ellipsoid_half_width_deg: f64,
    pub ellipsoid_samples: usize,
    pub monte_carlo_runs: usize,
    /// Largest tolerated number of failed (run, method) solves.
    pub failure_budget: usize,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn steering_deg(&self) -> f64 {
        self.scenario.soi_doa_deg + self.mismatch_deg
    }
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<ExperimentConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let entries = tokenize(text)?;
    let mut fields = Fields { entries };

    let interferers = match fields.take("scenario.interferers") {
        Some(v) => parse_interferers(&v)?,
        None => Vec::new(),
    };
    let scenario = Scenario {
        soi_doa_deg: fields.required("scenario.soi_doa_deg")?,
        soi_snr_db: fields.required("scenario.soi_snr_db")?,
        interferers,
        num_snapshots: fields.required("scenario.num_snapshots")?,
        noise_power: fields.optional("scenario.noise_power", 1.0)?,
        rng_seed: fields.optional("scenario.rng_seed", 0)?,
    };

    let num_elements: usize = fields.required("geometry.num_elements")?;
    let spacing: f64 = fields.optional("geometry.spacing_wavelengths", 0.5)?;
    let geometry = ArrayGeometry::new(num_elements, spacing).map_err(|e| ConfigError::Invariant {
        key: if num_elements < 2 {
            "geometry.num_elements".into()
        } else {
            "geometry.spacing_wavelengths".into()
        },
        message: e.to_string(),
    })?;

    let methods = match fields.take("experiment.methods") {
        Some(v) => parse_methods(&v)?,
        None => {
            return Err(ConfigError::MissingKey {
                key: "experiment.methods".into(),
            })
        }
    };

    let defaults = SolverOptions::default();
    let solver_options = SolverOptions {
        gamma: fields.optional("solver.gamma", defaults.gamma)?,
        p: fields.optional("solver.p", defaults.p)?,
        max_iterations: fields.optional("solver.max_iterations", defaults.max_iterations)?,
        objective_tolerance: fields.optional("solver.objective_tolerance", defaults.objective_tolerance)?,
        irls_epsilon: fields.optional("solver.irls_epsilon", defaults.irls_epsilon)?,
        diagonal_loading: fields.optional("solver.diagonal_loading", defaults.diagonal_loading)?,
    };

    let mismatch_deg: f64 = fields.optional("experiment.mismatch_deg", 0.0)?;
    let config = ExperimentConfig {
        scenario,
        geometry,
        grid_resolution_deg: fields.optional("experiment.grid_resolution_deg", 1.0)?,
        pattern_resolution_deg: fields.optional("experiment.pattern_resolution_deg", 1.0)?,
        metric_resolution_deg: fields.optional(
            "experiment.metric_resolution_deg",
            crate::analysis::METRIC_RESOLUTION_DEG,
        )?,
        null_window_deg: fields.optional("experiment.null_window_deg", 1.0)?,
        methods,
        solver_options,
        mismatch_deg,
        ellipsoid_half_width_deg: fields
            .optional("experiment.ellipsoid_half_width_deg", mismatch_deg.abs().max(3.0))?,
        ellipsoid_samples: fields.optional("experiment.ellipsoid_samples", 61)?,
        monte_carlo_runs: fields.optional("experiment.monte_carlo_runs", 1)?,
        failure_budget: fields.optional("experiment.failure_budget", 0)?,
        output_dir: PathBuf::from(fields.optional::<String>("experiment.output_dir", "out".into())?),
    };
    validate(&config)?;
    Ok(config)
}

pub fn validate(config: &ExperimentConfig) -> Result<(), ConfigError> {
    let invariant = |key: &str, message: String| ConfigError::Invariant {
        key: key.into(),
        message,
    };
    config.scenario.validate().map_err(|e| {
        let s = &config.scenario;
        let key = if s.num_snapshots == 0 {
            "scenario.num_snapshots"
        } else if !(s.noise_power > 0.0) {
            "scenario.noise_power"
        } else if s.soi_doa_deg.abs() > 90.0 {
            "scenario.soi_doa_deg"
        } else {
            "scenario.interferers"
        };
        invariant(key, e.to_string())
    })?;
    if config.methods.is_empty() {
        return Err(invariant("experiment.methods", "at least one method is required".into()));
    }
    if config.monte_carlo_runs == 0 {
        return Err(invariant("experiment.monte_carlo_runs", "must be at least 1".into()));
    }
    if config.steering_deg().abs() > 90.0 {
        return Err(invariant(
            "experiment.mismatch_deg",
            format!("steering angle {} deg outside [-90, 90]", config.steering_deg()),
        ));
    }
    for (key, v) in [
        ("experiment.grid_resolution_deg", config.grid_resolution_deg),
        ("experiment.null_window_deg", config.null_window_deg),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(invariant(key, format!("must be positive, got {v}")));
        }
    }
    for (key, v) in [
        ("experiment.pattern_resolution_deg", config.pattern_resolution_deg),
        ("experiment.metric_resolution_deg", config.metric_resolution_deg),
    ] {
        let steps = 180.0 / v;
        if !(v > 0.0 && v <= 1.0) || (steps - steps.round()).abs() > 1e-6 {
            return Err(invariant(key, format!("must lie in (0, 1] and divide 180, got {v}")));
        }
    }
    if !(config.ellipsoid_half_width_deg >= 0.0) {
        return Err(invariant("experiment.ellipsoid_half_width_deg", "must be nonnegative".into()));
    }
    if config.ellipsoid_samples < 2 {
        return Err(invariant("experiment.ellipsoid_samples", "must be at least 2".into()));
    }
    config.solver_options.validate().map_err(|e| {
        let o = &config.solver_options;
        let key = if !(o.p > 0.0 && o.p <= 1.0) {
            "solver.p"
        } else if !(o.gamma >= 0.0) {
            "solver.gamma"
        } else if o.max_iterations == 0 {
            "solver.max_iterations"
        } else if !(o.objective_tolerance > 0.0) {
            "solver.objective_tolerance"
        } else if !(o.irls_epsilon > 0.0) {
            "solver.irls_epsilon"
        } else {
            "solver.diagonal_loading"
        };
        invariant(key, e.to_string())
    })
}

struct Entry {
    value: String,
}

struct Fields {
    entries: BTreeMap<String, Entry>,
}

impl Fields {
    fn take(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key).map(|e| e.value)
    }

    fn required<T: FromStr>(&mut self, key: &str) -> Result<T, ConfigError> {
        let v = self.take(key).ok_or_else(|| ConfigError::MissingKey { key: key.into() })?;
        parse_value(key, &v)
    }

    fn optional<T: FromStr>(&mut self, key: &str, default: T) -> Result<T, ConfigError> {
        match self.take(key) {
            Some(v) => parse_value(key, &v),
            None => Ok(default),
        }
    }
}

fn parse_value<T: FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse().map_err(|_| ConfigError::InvalidValue {
        key: key.into(),
        message: format!("cannot parse `{v}` as {}", std::any::type_name::<T>()),
    })
}

fn tokenize(text: &str) -> Result<BTreeMap<String, Entry>, ConfigError> {
    let mut entries = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line,
            message: format!("expected `key = value`, got `{content}`"),
        })?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(ConfigError::Syntax {
                line,
                message: format!("malformed key `{key}`"),
            });
        }
        if value.is_empty() {
            return Err(ConfigError::Syntax {
                line,
                message: format!("empty value for `{key}`"),
            });
        }
        if !KNOWN_KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey {
                key: key.into(),
                line,
            });
        }
        if entries
            .insert(key.to_string(), Entry { value: value.to_string() })
            .is_some()
        {
            return Err(ConfigError::DuplicateKey {
                key: key.into(),
                line,
            });
        }
    }
    Ok(entries)
}

fn parse_interferers(v: &str) -> Result<Vec<Interferer>, ConfigError> {
    const KEY: &str = "scenario.interferers";
    if v.eq_ignore_ascii_case("none") {
        return Ok(Vec::new());
    }
    v.split(',')
        .map(|item| {
            let item = item.trim();
            let (doa, inr) = item.split_once(':').ok_or_else(|| ConfigError::InvalidValue {
                key: KEY.into(),
                message: format!("expected `doa_deg:inr_db`, got `{item}`"),
            })?;
            Ok(Interferer {
                doa_deg: parse_value(KEY, doa.trim())?,
                inr_db: parse_value(KEY, inr.trim())?,
            })
        })
        .collect()
}

fn parse_methods(v: &str) -> Result<Vec<Method>, ConfigError> {
    const KEY: &str = "experiment.methods";
    let mut out: Vec<Method> = Vec::new();
    for name in v.split(',').map(str::trim) {
        let m: Method = name.parse().map_err(|_| ConfigError::InvalidValue {
            key: KEY.into(),
            message: format!("unknown method `{name}` (expected one of mvdr, sc, wsc, rmvb, rwsc)"),
        })?;
        if out.contains(&m) {
            return Err(ConfigError::Invariant {
                key: KEY.into(),
                message: format!("method `{name}` listed twice"),
            });
        }
        out.push(m);
    }
    Ok(out)
}
