//! Run configuration read from TOML.
//!
//! Every section and every key is optional; missing values take the
//! defaults of the corresponding types.
//!
//! ```toml
//! output_dir = "out"
//!
//! [model]
//! sigma = 0.3
//!
//! [solver]
//! n_z = 29
//!
//! [sim]
//! n_paths = 10000
//!
//! [state]
//! pi = 0.4
//!
//! [sweep]
//! param = "delta"
//! values = [0.1, 0.2, 0.3]
//!
//! [surface]
//! x = [0.5, 1.0, 1.5]
//! p = 1.0
//! pi = [0.3, 0.5, 0.7]
//! ```

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ModelError;
use crate::model::StatePoint;
use crate::params::ModelParams;
use crate::sim::SimConfig;
use crate::solver::SolverConfig;
use crate::sweep::SWEEPABLE;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse { message: String, line: Option<usize> },

    #[error(transparent)]
    Invalid(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub param: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurfaceSpec {
    pub x: Vec<f64>,
    pub p: f64,
    pub pi: Vec<f64>,
}

impl Default for SurfaceSpec {
    fn default() -> Self {
        SurfaceSpec {
            x: vec![0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0],
            p: 1.0,
            pi: vec![0.3, 0.5, 0.7],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    pub model: ModelParams,
    pub solver: SolverConfig,
    pub sim: SimConfig,
    pub state: StatePoint,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    pub surface: SurfaceSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            output_dir: PathBuf::from("out"),
            model: ModelParams::default(),
            solver: SolverConfig::default(),
            sim: SimConfig::default(),
            state: StatePoint::default(),
            sweep: None,
            surface: SurfaceSpec::default(),
        }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
        message: e.message().to_string(),
        line: e.span().map(|s| line_of(text, s.start)),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        self.model.validate()?;
        self.solver.validate()?;
        self.sim.validate()?;
        let s = self.state;
        StatePoint::new(s.x, s.p, s.pi)?;
        if let Some(sw) = &self.sweep {
            if !SWEEPABLE.contains(&sw.param.as_str()) {
                return Err(ModelError::UnknownParameter(sw.param.clone()));
            }
        }
        for &x in &self.surface.x {
            for &pi in &self.surface.pi {
                StatePoint::new(x, self.surface.p, pi)?;
            }
        }
        Ok(())
    }

    /// The effective configuration as TOML; [`parse_config`] reads it back
    /// to an equal value.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config is always representable in TOML")
    }

    /// Uses `seed` for both the solver and the policy simulation.
    pub fn set_seed(&mut self, seed: u64) {
        self.solver.seed = seed;
        self.sim.seed = seed;
    }
}
