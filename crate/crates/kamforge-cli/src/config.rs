//! Typed run configuration read from TOML.

use std::fmt;
use std::path::{Path, PathBuf};

use kamforge::lattice::LatticeConfig;
use kamforge::measure::SamplingMode;
use kamforge::engine::HypothesisPolicy;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Run,
    Measure,
    Lattice,
    Counterexample,
    Selftest,
}

impl Command {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "run" => Some(Command::Run),
            "measure" => Some(Command::Measure),
            "lattice" => Some(Command::Lattice),
            "counterexample" => Some(Command::Counterexample),
            "selftest" => Some(Command::Selftest),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default = "defaults::command")]
    pub command: Command,
    /// Coupling strength; overrides the `eps` of the lattice table.
    pub eps: f64,
    #[serde(default = "defaults::nu_max")]
    pub nu_max: usize,
    #[serde(default = "defaults::xi_samples")]
    pub xi_samples: usize,
    #[serde(default = "defaults::out")]
    pub out: PathBuf,
    #[serde(default)]
    pub seed: u64,
    /// JSON file with an explicit normal form; replaces the lattice when set.
    #[serde(default)]
    pub problem_file: Option<PathBuf>,
    #[serde(default = "LatticeConfig::example")]
    pub lattice: LatticeConfig,
    #[serde(default)]
    pub engine: EngineSection,
    #[serde(default)]
    pub measure: MeasureSection,
    #[serde(default)]
    pub integrate: IntegrateSection,
    #[serde(default)]
    pub counterexample: CounterexampleSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineSection {
    pub policy: HypothesisPolicy,
    /// Order in the action deviation of the reduced coupling.
    pub y_order: u32,
    pub torus: bool,
    pub torus_dt: f64,
    /// Horizon of the torus check in periods of the slowest angle.
    pub torus_periods: f64,
}

impl Default for EngineSection {
    fn default() -> Self {
        EngineSection {
            policy: HypothesisPolicy::Halt,
            y_order: 2,
            torus: true,
            torus_dt: 0.5,
            torus_periods: 100.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeasureSection {
    pub gammas: Vec<f64>,
    pub k_max: u32,
    pub tau: f64,
    pub half_width: f64,
    pub sampling: SamplingMode,
    /// Fourier cutoffs of the stepwise shells.
    pub shells: Vec<u32>,
    /// Exponent used for the shell schedule.
    pub shell_tau: f64,
    /// Admitted constant in front of the shell envelope.
    pub shell_c: f64,
}

impl Default for MeasureSection {
    fn default() -> Self {
        MeasureSection {
            gammas: vec![0.01, 0.05, 0.1],
            k_max: 5,
            tau: 1.0,
            half_width: 0.05,
            sampling: SamplingMode::MonteCarlo,
            shells: vec![2, 4, 6, 8, 10, 12],
            shell_tau: 3.0,
            shell_c: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegrateSection {
    pub t_end: f64,
    pub dt: f64,
    pub every: usize,
    /// Relative spread of the tangent actions around `y_star`.
    pub spread: f64,
    /// Amplitude of the degenerate and normal sites.
    pub amplitude: f64,
}

impl Default for IntegrateSection {
    fn default() -> Self {
        IntegrateSection {
            t_end: 100.0,
            dt: 0.01,
            every: 10,
            spread: 0.01,
            amplitude: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CounterexampleSection {
    pub sigma_exp: u32,
    pub ell_exp: u32,
    pub eps_hi: f64,
    pub eps_lo: f64,
    pub points: usize,
}

impl Default for CounterexampleSection {
    fn default() -> Self {
        CounterexampleSection {
            sigma_exp: 1,
            ell_exp: 1,
            eps_hi: 1e-1,
            eps_lo: 1e-3,
            points: 4000,
        }
    }
}

mod defaults {
    use super::Command;
    use std::path::PathBuf;

    pub fn command() -> Command {
        Command::Run
    }
    pub fn nu_max() -> usize {
        3
    }
    pub fn xi_samples() -> usize {
        10_000
    }
    pub fn out() -> PathBuf {
        PathBuf::from("kamforge-out")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Io(String),
    /// Malformed TOML; the message carries the line and column.
    Parse(String),
    /// A field holds an invalid value.
    Invalid { field: String, reason: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io(m) => write!(f, "cannot read config: {m}"),
            ConfigError::Parse(m) => write!(f, "config parse error: {m}"),
            ConfigError::Invalid { field, reason } => write!(f, "invalid field `{field}`: {reason}"),
        }
    }
}

impl std::error::Error for ConfigError {}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

/// Parses TOML text. Relative `problem_file` paths resolve against `base`.
pub fn parse_str(text: &str, base: &Path) -> Result<RunConfig, ConfigError> {
    let mut cfg: RunConfig = toml::from_str(text).map_err(|e| match unknown_field(&e) {
        Some(field) => invalid(&field, "unknown key"),
        None => ConfigError::Parse(e.to_string()),
    })?;
    if let Some(p) = &cfg.problem_file {
        if p.is_relative() {
            cfg.problem_file = Some(base.join(p));
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
    parse_str(&text, path.parent().unwrap_or(Path::new(".")))
}

fn unknown_field(e: &toml::de::Error) -> Option<String> {
    let msg = e.message();
    let rest = msg.strip_prefix("unknown field `")?;
    Some(rest[..rest.find('`')?].to_string())
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, found {}", self.schema_version),
            ));
        }
        if !(self.eps.is_finite() && self.eps >= 0.0) {
            return Err(invalid("eps", "must be finite and >= 0"));
        }
        if let Some(p) = &self.problem_file {
            if !p.is_file() {
                return Err(invalid("problem_file", format!("{} does not exist", p.display())));
            }
        }
        self.lattice
            .validate()
            .map_err(|e| invalid("lattice", e.to_string()))?;
        let e = &self.engine;
        if !(e.torus_dt > 0.0 && e.torus_dt.is_finite()) {
            return Err(invalid("engine.torus_dt", "must be positive"));
        }
        if !(e.torus_periods > 0.0 && e.torus_periods.is_finite()) {
            return Err(invalid("engine.torus_periods", "must be positive"));
        }
        let m = &self.measure;
        if m.gammas.is_empty() || m.gammas.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return Err(invalid("measure.gammas", "need at least one finite gamma >= 0"));
        }
        if m.k_max < 1 {
            return Err(invalid("measure.k_max", "must be at least 1"));
        }
        if !(m.tau >= 0.0 && m.shell_tau >= 0.0) {
            return Err(invalid("measure.tau", "exponents must be >= 0"));
        }
        if !(m.half_width > 0.0) {
            return Err(invalid("measure.half_width", "must be positive"));
        }
        if m.shells.windows(2).any(|w| w[1] < w[0]) {
            return Err(invalid("measure.shells", "cutoffs must be non-decreasing"));
        }
        if self.xi_samples == 0 {
            return Err(invalid("xi_samples", "must be positive"));
        }
        let i = &self.integrate;
        if !(i.dt > 0.0 && i.t_end >= i.dt) {
            return Err(invalid("integrate.dt", "need 0 < dt <= t_end"));
        }
        if i.every == 0 {
            return Err(invalid("integrate.every", "must be positive"));
        }
        let c = &self.counterexample;
        if !(c.eps_hi < 0.5 && c.eps_lo > 0.0 && c.eps_lo < c.eps_hi) {
            return Err(invalid("counterexample.eps_lo", "need 0 < eps_lo < eps_hi < 0.5"));
        }
        if c.sigma_exp < 1 || c.ell_exp < 1 {
            return Err(invalid("counterexample.sigma_exp", "exponents must be at least 1"));
        }
        Ok(())
    }
}
