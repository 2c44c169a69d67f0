//! Damped Monte-Carlo fixed-point iteration for the free boundary.
//!
//! The boundary solves `E[c](z) = 0` where
//!
//! ```text
//! E[c](z) = (1/r) E_{z, c(z)} [ q(Z_zeta, Pi_zeta) 1{Pi_zeta <= c(Z_zeta)} ]
//! ```
//!
//! and `zeta` is exponential with rate `r`. The solver runs in two phases.
//! First it iterates with common random numbers (every node reuses the same
//! paths in every sweep), which makes the iteration a deterministic map whose
//! convergence can be detected. It then runs a number of sweeps on fresh
//! streams and averages those iterates in logit space, which removes most of
//! the bias tied to one particular set of paths.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::{Boundary, Convergence, ZGrid};
use crate::error::ModelError;
use crate::isotonic::project_nondecreasing;
use crate::model::{logistic, logit, Model, EPS_CLIP};
use crate::sim::{stream, PathEngine, PathState, SimConfig};

/// How a sweep moves `c` given the operator estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum UpdateRule {
    /// `logit c <- logit c + gain * E / I`.
    #[default]
    Logit,
    /// `c <- c + lambda(m(z)) * E` with the `lambda` of [`damping_lambda`].
    Additive,
}

/// How `Pi_zeta` is drawn inside the operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BeliefSampling {
    /// Euler steps of size `dt` in logit coordinates.
    Euler,
    /// Exact two-point mixture draw; only `Pi_zeta` is needed, so no path
    /// has to be stepped.
    #[default]
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub n_z: usize,
    pub z_min: f64,
    pub z_max: f64,
    /// Paths per node per sweep.
    pub n_paths_op: usize,
    /// Cap on common-random-number sweeps.
    pub max_iter: usize,
    /// Sup-norm change below which a sweep counts as settled.
    pub tol_c: f64,
    /// Residual tolerance as a fraction of `r I`.
    pub tol_resid_frac: f64,
    /// Consecutive settled sweeps required.
    pub patience: usize,
    pub seed: u64,
    pub update: UpdateRule,
    /// Step size of the logit update.
    pub gain: f64,
    /// Fresh-stream sweeps averaged after convergence (0 disables).
    pub averaging_sweeps: usize,
    pub sampling: BeliefSampling,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            n_z: 57,
            z_min: -8.0,
            z_max: 6.0,
            n_paths_op: 20_000,
            max_iter: 200,
            tol_c: 5e-3,
            tol_resid_frac: 0.02,
            patience: 3,
            seed: 2024,
            update: UpdateRule::Logit,
            gain: 3.0,
            averaging_sweeps: 20,
            sampling: BeliefSampling::Exact,
        }
    }
}

impl SolverConfig {
    /// The smaller grid used for parameter sweeps in CI.
    pub fn reduced() -> Self {
        SolverConfig {
            n_z: 29,
            n_paths_op: 10_000,
            averaging_sweeps: 10,
            ..Default::default()
        }
    }

    pub fn grid(&self) -> Result<ZGrid, ModelError> {
        ZGrid::new(self.z_min, self.z_max, self.n_z)
            .map_err(|e| ModelError::InvalidSolver(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        self.grid()?;
        let bad = |msg: String| Err(ModelError::InvalidSolver(msg));
        if self.n_paths_op < 2 {
            return bad(format!("n_paths_op must be >= 2, got {}", self.n_paths_op));
        }
        if self.tol_c.is_nan() || self.tol_c <= 0.0 {
            return bad(format!("tol_c must be > 0, got {}", self.tol_c));
        }
        if self.tol_resid_frac.is_nan() || self.tol_resid_frac <= 0.0 {
            return bad(format!("tol_resid_frac must be > 0, got {}", self.tol_resid_frac));
        }
        if self.patience == 0 || self.max_iter == 0 {
            return bad("patience and max_iter must be >= 1".into());
        }
        if !(self.gain > 0.0 && self.gain.is_finite()) {
            return bad(format!("gain must be > 0, got {}", self.gain));
        }
        Ok(())
    }
}

/// The damping `lambda(z)`: `1 - m(z)` when `m(z) > 1/2`, otherwise `m(z)`.
pub fn damping_lambda(m_of_z: f64) -> f64 {
    if m_of_z > 0.5 {
        1.0 - m_of_z
    } else {
        m_of_z
    }
}

/// Sample mean and standard error of one operator evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OperatorEstimate {
    pub value: f64,
    pub stderr: f64,
}

/// One row of a residual profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualPoint {
    pub z: f64,
    pub residual: f64,
    pub stderr: f64,
}

/// Stream key `[tag, a, b]`; the path index is appended per path.
pub type StreamKey = [u64; 3];

/// Monte-Carlo estimate of `E[c](z)` with `n_paths` paths started at
/// `(z, c(z))`.
pub fn estimate_operator(
    c: &Boundary,
    z: f64,
    engine: &PathEngine,
    n_paths: usize,
    sampling: BeliefSampling,
    key: StreamKey,
) -> OperatorEstimate {
    let model = engine.model();
    let r = model.params().r;
    let phi0 = logit(c.eval(z));
    let clock_speed = 0.5 * model.params().sigma.powi(2);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for path in 0..n_paths as u64 {
        let mut rng = engine.rng(&[key[0], key[1], key[2], path]);
        let zeta = engine.sample_clock(&mut rng);
        let (z_end, phi) = match sampling {
            BeliefSampling::Euler => {
                let s = engine.advance(PathState::from_logit(z, phi0), zeta, &mut rng);
                (s.z, s.logit_pi)
            }
            BeliefSampling::Exact => {
                (z + clock_speed * zeta, engine.exact_logit_at(phi0, zeta, &mut rng))
            }
        };
        let v = if !c.stops(z_end, logistic(phi)) {
            model.q_logit(z_end, phi) / r
        } else {
            0.0
        };
        sum += v;
        sum_sq += v * v;
    }
    let n = n_paths as f64;
    let mean = sum / n;
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    OperatorEstimate {
        value: mean,
        stderr: (var / n).sqrt(),
    }
}

fn sweep_estimates(
    c: &Boundary,
    engine: &PathEngine,
    cfg: &SolverConfig,
    key_of: impl Fn(usize) -> StreamKey + Sync,
    nodes: &[usize],
) -> Vec<OperatorEstimate> {
    nodes
        .par_iter()
        .map(|&i| {
            estimate_operator(c, c.grid().node(i), engine, cfg.n_paths_op, cfg.sampling, key_of(i))
        })
        .collect()
}

/// Clamps to `[m, 1 - eps]`, projects onto nondecreasing sequences and
/// clamps again.
fn project(values: &mut [f64], m: &[f64]) {
    let clamp = |v: &mut [f64]| {
        for (c, &lo) in v.iter_mut().zip(m) {
            *c = c.max(lo.max(EPS_CLIP)).min(1.0 - EPS_CLIP);
        }
    };
    clamp(values);
    project_nondecreasing(values, None);
    clamp(values);
}

fn updated(c: &Boundary, est: &[OperatorEstimate], model: &Model, cfg: &SolverConfig) -> Vec<f64> {
    let i_cost = model.params().i_cost;
    let mut next: Vec<f64> = c
        .c_values()
        .iter()
        .zip(c.m_values())
        .zip(est)
        .map(|((&ci, &mi), e)| match cfg.update {
            UpdateRule::Logit => logistic(logit(ci) + cfg.gain * e.value / i_cost),
            UpdateRule::Additive => ci + damping_lambda(mi) * e.value,
        })
        .collect();
    project(&mut next, c.m_values());
    next
}

/// Largest residual that the projection does not explain. Nodes held at a
/// clamp by a residual pushing into it are skipped, and runs of equal
/// values (pooled by the projection) are judged by their mean residual.
fn unexplained_residual(c: &[f64], m: &[f64], est: &[OperatorEstimate]) -> f64 {
    let mut worst: f64 = 0.0;
    let mut i = 0;
    while i < c.len() {
        let mut j = i + 1;
        while j < c.len() && c[j] == c[i] {
            j += 1;
        }
        let (mut sum, mut count) = (0.0, 0usize);
        for k in i..j {
            let e = est[k].value;
            let at_floor = c[k] <= m[k].max(EPS_CLIP) && e < 0.0;
            let at_cap = c[k] >= 1.0 - EPS_CLIP && e > 0.0;
            if !(at_floor || at_cap) {
                sum += e;
                count += 1;
            }
        }
        if count > 0 {
            worst = worst.max((sum / count as f64).abs());
        }
        i = j;
    }
    worst
}

/// Solves for the boundary starting from `c = m`.
pub fn solve_boundary(
    model: &Model,
    cfg: &SolverConfig,
    sim: &SimConfig,
) -> Result<Boundary, ModelError> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let engine = PathEngine::new(*model, SimConfig { seed: cfg.seed, ..*sim })?;
    let m: Vec<f64> = grid.nodes().iter().map(|&z| model.m_fn(z)).collect();
    let mut start = m.clone();
    project(&mut start, &m);
    let mut c = Boundary::new(grid, start, m.clone())?;
    solve_from(&engine, cfg, &mut c)
}

fn solve_from(
    engine: &PathEngine,
    cfg: &SolverConfig,
    c: &mut Boundary,
) -> Result<Boundary, ModelError> {
    let model = engine.model();
    let grid = *c.grid();
    let m = c.m_values().to_vec();
    let all: Vec<usize> = (0..grid.n).collect();
    let tol_resid = cfg.tol_resid_frac * model.params().r * model.params().i_cost;

    let mut settled = 0;
    let mut iterations = 0;
    let (mut sup_change, mut sup_resid) = (f64::INFINITY, f64::INFINITY);
    let mut converged = false;
    while iterations < cfg.max_iter {
        iterations += 1;
        let est = sweep_estimates(c, engine, cfg, |i| [stream::OPERATOR, i as u64, 0], &all);
        sup_resid = unexplained_residual(c.c_values(), &m, &est);
        let next = updated(c, &est, model, cfg);
        sup_change = next
            .iter()
            .zip(c.c_values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        *c = Boundary::new(grid, next, m.clone())?;
        log::debug!(
            "sweep {iterations}: sup change {sup_change:.3e}, residual {sup_resid:.3e}"
        );
        if sup_change < cfg.tol_c && sup_resid <= tol_resid {
            settled += 1;
            if settled >= cfg.patience {
                converged = true;
                break;
            }
        } else {
            settled = 0;
        }
    }
    if converged {
        log::info!("converged after {iterations} sweeps");
    } else {
        log::warn!(
            "no convergence after {iterations} sweeps (sup change {sup_change:.3e}, residual {sup_resid:.3e})"
        );
    }

    let k = cfg.averaging_sweeps;
    if k > 0 {
        let mut acc = vec![0.0; grid.n];
        for sweep in 0..k {
            let est =
                sweep_estimates(c, engine, cfg, |i| [stream::AVERAGING, sweep as u64, i as u64], &all);
            let next = updated(c, &est, model, cfg);
            for (a, v) in acc.iter_mut().zip(&next) {
                *a += logit(*v);
            }
            *c = Boundary::new(grid, next, m.clone())?;
        }
        let mut avg: Vec<f64> = acc.iter().map(|a| logistic(a / k as f64)).collect();
        project(&mut avg, &m);
        *c = Boundary::new(grid, avg, m.clone())?;
    }

    Ok(c.clone().with_convergence(Convergence {
        converged,
        iterations,
        final_sup_change: sup_change,
        final_sup_residual: sup_resid,
        averaging_sweeps: k,
    }))
}

/// Operator estimates at every `stride`-th node (and the last node) on
/// streams independent of those used by the solver.
pub fn residual_profile(
    c: &Boundary,
    engine: &PathEngine,
    n_paths: usize,
    stride: usize,
    sampling: BeliefSampling,
) -> Vec<ResidualPoint> {
    let n = c.grid().n;
    let stride = stride.max(1);
    let mut nodes: Vec<usize> = (0..n).step_by(stride).collect();
    if nodes.last() != Some(&(n - 1)) {
        nodes.push(n - 1);
    }
    nodes
        .par_iter()
        .map(|&i| {
            let z = c.grid().node(i);
            let e = estimate_operator(c, z, engine, n_paths, sampling, [stream::RESIDUAL, i as u64, 0]);
            ResidualPoint {
                z,
                residual: e.value,
                stderr: e.stderr,
            }
        })
        .collect()
}
