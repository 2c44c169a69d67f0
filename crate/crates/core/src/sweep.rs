//! One-parameter sensitivity runs.
//!
//! A model parameter sweep re-solves the boundary for every value. A sweep
//! over the starting state (`x`, `p` or `pi`) solves once and re-evaluates
//! the policy from each state.

use serde::Serialize;

use crate::boundary::Boundary;
use crate::error::ModelError;
use crate::model::{Model, StatePoint};
use crate::params::ModelParams;
use crate::policy::{simulate_policy, PolicyStats};
use crate::sim::{PathEngine, SimConfig};
use crate::solver::{solve_boundary, SolverConfig};

/// Parameters that can be swept: the seven model fields and the three
/// state coordinates.
pub const SWEEPABLE: [&str; 10] = [
    "sigma", "e_rate", "beta", "delta", "i_cost", "r", "alpha", "x", "p", "pi",
];

/// Result for one value. `stats` and `boundary` are `None` when the value
/// was rejected, with the reason in `error`.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub param: String,
    pub value: f64,
    pub stats: Option<PolicyStats>,
    #[serde(skip)]
    pub boundary: Option<Boundary>,
    pub error: Option<String>,
}

impl SweepRow {
    fn failed(param: &str, value: f64, err: ModelError) -> Self {
        log::warn!("skipping {param} = {value}: {err}");
        SweepRow {
            param: param.to_string(),
            value,
            stats: None,
            boundary: None,
            error: Some(err.to_string()),
        }
    }
}

fn with_state(sp: &StatePoint, name: &str, value: f64) -> Result<StatePoint, ModelError> {
    match name {
        "x" => StatePoint::new(value, sp.p, sp.pi),
        "p" => StatePoint::new(sp.x, value, sp.pi),
        "pi" => StatePoint::new(sp.x, sp.p, value),
        other => Err(ModelError::UnknownParameter(other.to_string())),
    }
}

/// Runs `param` over `values` around `base` and `sp`. An unknown parameter
/// name is an error; an invalid value only marks its own row.
pub fn sweep(
    param: &str,
    values: &[f64],
    base: &ModelParams,
    sp: &StatePoint,
    solver: &SolverConfig,
    sim: &SimConfig,
) -> Result<Vec<SweepRow>, ModelError> {
    if !SWEEPABLE.contains(&param) {
        return Err(ModelError::UnknownParameter(param.to_string()));
    }
    if matches!(param, "x" | "p" | "pi") {
        let model = Model::new(*base)?;
        let boundary = solve_boundary(&model, solver, sim)?;
        let engine = PathEngine::new(model, *sim)?;
        return Ok(values
            .iter()
            .map(|&v| {
                match with_state(sp, param, v).and_then(|s| simulate_policy(&boundary, &s, &engine)) {
                    Ok(stats) => SweepRow {
                        param: param.to_string(),
                        value: v,
                        stats: Some(stats),
                        boundary: Some(boundary.clone()),
                        error: None,
                    },
                    Err(e) => SweepRow::failed(param, v, e),
                }
            })
            .collect());
    }
    Ok(values
        .iter()
        .map(|&v| {
            let run = || -> Result<(PolicyStats, Boundary), ModelError> {
                let model = Model::new(base.with_field(param, v)?)?;
                log::info!("solving for {param} = {v}");
                let boundary = solve_boundary(&model, solver, sim)?;
                let engine = PathEngine::new(model, *sim)?;
                Ok((simulate_policy(&boundary, sp, &engine)?, boundary))
            };
            match run() {
                Ok((stats, boundary)) => SweepRow {
                    param: param.to_string(),
                    value: v,
                    stats: Some(stats),
                    boundary: Some(boundary),
                    error: None,
                },
                Err(e) => SweepRow::failed(param, v, e),
            }
        })
        .collect())
}
