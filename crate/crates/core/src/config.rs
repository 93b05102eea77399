//! Run configuration from flat TOML key-value files.
//!
//! ```toml
//! scenario = "landau"
//! scheme = "esec2"
//! dt = 0.1
//! n_steps = 500
//! n_c = 100          # optional; other keys default per scenario
//! ```

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::error::Result;
use crate::integrator::{SchemeKind, SchemeParams};
use crate::scenarios::{ScenarioKind, ScenarioSpec};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
}

fn bad(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        reason: reason.into(),
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: Option<ScenarioKind>,
    scheme: Option<SchemeKind>,
    dt: Option<f64>,
    n_steps: Option<usize>,
    seed: Option<u64>,
    nx: Option<usize>,
    ny: Option<usize>,
    lx: Option<f64>,
    ly: Option<f64>,
    n_c: Option<usize>,
    alpha_x: Option<f64>,
    alpha_y: Option<f64>,
    v_b: Option<f64>,
    beta: Option<f64>,
    delta: Option<f64>,
    v01: Option<f64>,
    v02: Option<f64>,
    b: Option<f64>,
    k0: Option<f64>,
    quiet_start: Option<bool>,
    c: Option<f64>,
    filter: Option<bool>,
    b_ext: Option<f64>,
    output_dir: Option<PathBuf>,
    snapshot_stride: Option<usize>,
    workers: Option<usize>,
}

/// Everything needed for one run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub scenario: ScenarioSpec,
    pub scheme: SchemeKind,
    pub dt: f64,
    pub n_steps: usize,
    /// Speed of light. Electromagnetic schemes default to 1; electrostatic
    /// schemes must leave it unset.
    pub c: Option<f64>,
    pub filter: bool,
    /// Uniform external `Bz` (electrostatic schemes only).
    pub b_ext: f64,
    pub output_dir: Option<PathBuf>,
    /// Field snapshot cadence in steps; 0 disables snapshots.
    pub snapshot_stride: usize,
    pub workers: usize,
}

impl RunConfig {
    pub fn new(scenario: ScenarioSpec, scheme: SchemeKind, dt: f64, n_steps: usize) -> Self {
        Self {
            scenario,
            scheme,
            dt,
            n_steps,
            c: None,
            filter: true,
            b_ext: 0.0,
            output_dir: None,
            snapshot_stride: 0,
            workers: 1,
        }
    }

    pub fn from_toml_str(text: &str) -> std::result::Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
                .unwrap_or(0);
            ConfigError::Parse {
                line,
                message: e.message().trim().to_string(),
            }
        })?;
        let kind = raw.scenario.ok_or(ConfigError::Missing("scenario"))?;
        let mut s = ScenarioSpec::defaults(kind);
        macro_rules! take {
            ($($f:ident),*) => { $( if let Some(v) = raw.$f { s.$f = v; } )* };
        }
        take!(
            seed,
            nx,
            ny,
            n_c,
            alpha_x,
            alpha_y,
            v_b,
            beta,
            delta,
            v01,
            v02,
            b,
            k0,
            quiet_start
        );
        match kind {
            ScenarioKind::Weibel => {
                s.ly = raw.ly.unwrap_or(if s.k0 > 0.0 { TAU / s.k0 } else { s.ly });
                s.lx = raw.lx.unwrap_or(s.ly / s.ny as f64);
            }
            _ => {
                s.lx = raw.lx.unwrap_or(s.lx);
                s.ly = raw.ly.unwrap_or(s.ly);
            }
        }
        let config = Self {
            scenario: s,
            scheme: raw.scheme.ok_or(ConfigError::Missing("scheme"))?,
            dt: raw.dt.ok_or(ConfigError::Missing("dt"))?,
            n_steps: raw.n_steps.ok_or(ConfigError::Missing("n_steps"))?,
            c: raw.c,
            filter: raw.filter.unwrap_or(true),
            b_ext: raw.b_ext.unwrap_or(0.0),
            output_dir: raw.output_dir,
            snapshot_stride: raw.snapshot_stride.unwrap_or(0),
            workers: raw.workers.unwrap_or(1),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> std::result::Result<(), ConfigError> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(bad("dt", format!("{} must be positive", self.dt)));
        }
        if self.n_steps == 0 {
            return Err(bad("n_steps", "must be at least 1"));
        }
        if self.workers == 0 {
            return Err(bad("workers", "must be at least 1"));
        }
        if self.scheme.is_electromagnetic() {
            if let Some(c) = self.c {
                if !(c.is_finite() && c > 0.0) {
                    return Err(bad("c", format!("{c} must be positive")));
                }
            }
            if self.b_ext != 0.0 {
                return Err(bad(
                    "b_ext",
                    "only electrostatic schemes take an external field",
                ));
            }
        } else {
            if self.c.is_some() {
                return Err(bad(
                    "c",
                    format!("electrostatic scheme `{}` does not use c", self.scheme),
                ));
            }
            if !self.b_ext.is_finite() {
                return Err(bad("b_ext", "must be finite"));
            }
        }
        self.scenario.validate().map_err(|e| match e {
            crate::Error::InvalidParameter { name, reason } => bad(name, reason),
            other => bad("scenario", other.to_string()),
        })
    }

    pub fn params(&self) -> SchemeParams {
        SchemeParams {
            dt: self.dt,
            c: self.c.unwrap_or(1.0),
            filter: self.filter,
            b_ext: self.b_ext,
            workers: self.workers,
        }
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    Ok(RunConfig::from_toml_str(&text)?)
}
