//! Evaluation of a boundary as an adoption rule.
//!
//! The rule stops at `tau = inf { t : Pi_t >= c(Z_t) }`. Paths are stepped
//! with the Euler scheme of [`PathEngine`]; a path that is still running at
//! the horizon counts as never stopping and contributes nothing to `U`.

use rayon::prelude::*;
use serde::Serialize;

use crate::boundary::Boundary;
use crate::error::ModelError;
use crate::model::{Model, StatePoint, EPS_CLIP};
use crate::sim::{pollution_at, stream, PathEngine, PathState};

/// Censored Monte-Carlo summary of one policy evaluation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyStats {
    /// Fraction of paths stopped before the horizon.
    pub prob_stop: f64,
    /// Mean stopping time over stopped paths (`NaN` if none stopped).
    pub e_tau: f64,
    pub se_tau: f64,
    /// Mean pollutant stock at adoption over stopped paths.
    pub e_p_tau: f64,
    pub se_p_tau: f64,
    /// Estimate of `U(x, pi)`.
    pub u_hat: f64,
    pub se_u: f64,
    /// `V_inf - u_hat`.
    pub v_hat: f64,
    pub se_v: f64,
    pub n_paths: usize,
    pub horizon: f64,
    /// Copied from the boundary; a `false` here means the boundary solve hit
    /// its iteration cap.
    pub boundary_converged: bool,
}

#[derive(Debug, Clone, Copy, Default)]
struct PathOutcome {
    stopped: bool,
    tau: f64,
    p_tau: f64,
    reward: f64,
}

/// Mean and standard error; `(NaN, NaN)` for an empty sample and a zero
/// error for a single draw.
fn mean_se(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.clone().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

fn run_path(
    c: &Boundary,
    engine: &PathEngine,
    start: PathState,
    sp: &StatePoint,
    path: u64,
) -> PathOutcome {
    let model = engine.model();
    let horizon = engine.config().horizon;
    let mut rng = engine.rng(&[stream::POLICY, path]);
    let mut s = start;
    let mut gap = s.pi() - c.eval(s.z);
    while s.t < horizon {
        let h = engine.config().dt.min(horizon - s.t);
        let next = engine.advance(s, h, &mut rng);
        let next_pi = next.pi();
        let next_gap = next_pi - c.eval(next.z);
        if c.stops(next.z, next_pi) {
            let frac = (gap / (gap - next_gap)).clamp(0.0, 1.0);
            let tau = s.t + frac * (next.t - s.t);
            let phi = s.logit_pi + frac * (next.logit_pi - s.logit_pi);
            let z = s.z0 + (next.z - s.z0) * (tau / next.t);
            let r = model.params().r;
            return PathOutcome {
                stopped: true,
                tau,
                p_tau: pollution_at(tau, sp.p, model.params()),
                reward: (-r * tau).exp() * model.obstacle_logit(z, phi),
            };
        }
        s = next;
        gap = next_gap;
    }
    PathOutcome::default()
}

/// Simulates the rule given by `c` from the state `sp`.
///
/// A start inside the stopping region is handled exactly: every path stops
/// at time zero and `u_hat = G(x, pi)`.
pub fn simulate_policy(
    c: &Boundary,
    sp: &StatePoint,
    engine: &PathEngine,
) -> Result<PolicyStats, ModelError> {
    let model = engine.model();
    let cfg = engine.config();
    cfg.validate()?;
    if !c.is_converged() {
        log::warn!("evaluating a boundary whose solve did not converge");
    }
    let v_never = model.value_never(sp);
    let start = engine.start_from_x(sp.x, sp.pi)?;
    let n = cfg.n_paths;

    if c.stops(start.z, sp.pi) {
        let u = model.reward_g(sp.x, sp.pi);
        return Ok(PolicyStats {
            prob_stop: 1.0,
            e_tau: 0.0,
            se_tau: 0.0,
            e_p_tau: sp.p,
            se_p_tau: 0.0,
            u_hat: u,
            se_u: 0.0,
            v_hat: v_never - u,
            se_v: 0.0,
            n_paths: n,
            horizon: cfg.horizon,
            boundary_converged: c.is_converged(),
        });
    }

    // Collected in path order so that the sums do not depend on scheduling.
    let outcomes: Vec<PathOutcome> = (0..n as u64)
        .into_par_iter()
        .map(|path| run_path(c, engine, start, sp, path))
        .collect();

    let stopped = outcomes.iter().filter(|o| o.stopped);
    let n_stop = stopped.clone().count();
    let (e_tau, se_tau) = mean_se(stopped.clone().map(|o| o.tau));
    let (e_p_tau, se_p_tau) = mean_se(stopped.map(|o| o.p_tau));
    let (u_hat, se_u) = mean_se(outcomes.iter().map(|o| o.reward));
    Ok(PolicyStats {
        prob_stop: n_stop as f64 / n as f64,
        e_tau,
        se_tau,
        e_p_tau,
        se_p_tau,
        u_hat,
        se_u,
        v_hat: v_never - u_hat,
        se_v: se_u,
        n_paths: n,
        horizon: cfg.horizon,
        boundary_converged: c.is_converged(),
    })
}

/// One point of a value surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurfacePoint {
    pub x: f64,
    pub p: f64,
    pub pi: f64,
    pub u_hat: f64,
    pub se_u: f64,
    pub v_hat: f64,
    pub se_v: f64,
}

/// `V(x, p0, pi)` for every `x` in `x_grid` and `pi` in `pi_list`, rows
/// ordered by `pi` and then `x`. All points share the same random streams.
pub fn value_surface(
    c: &Boundary,
    x_grid: &[f64],
    p0: f64,
    pi_list: &[f64],
    engine: &PathEngine,
) -> Result<Vec<SurfacePoint>, ModelError> {
    let mut rows = Vec::with_capacity(x_grid.len() * pi_list.len());
    for &pi in pi_list {
        for &x in x_grid {
            let sp = StatePoint::new(x, p0, pi)?;
            let st = simulate_policy(c, &sp, engine)?;
            rows.push(SurfacePoint {
                x,
                p: p0,
                pi,
                u_hat: st.u_hat,
                se_u: st.se_u,
                v_hat: st.v_hat,
                se_v: st.se_v,
            });
        }
    }
    Ok(rows)
}

/// Boundary that never stops inside the grid range: `c = 1 - eps`.
pub fn never_stop_boundary(model: &Model, like: &Boundary) -> Result<Boundary, ModelError> {
    Boundary::constant(model, *like.grid(), 1.0 - EPS_CLIP)
}

/// Boundary that stops at once from any state: `c = eps`.
pub fn stop_now_boundary(model: &Model, like: &Boundary) -> Result<Boundary, ModelError> {
    Boundary::constant(model, *like.grid(), EPS_CLIP)
}
