//! Seeded simulation of the filtered state.
//!
//! Under the observation filtration the belief `Pi` is a driftless diffusion
//! with volatility `(2 alpha / sigma) Pi (1 - Pi)`. It is simulated through
//! `phi = logit(Pi)`, whose dynamics
//!
//! ```text
//! d phi = k^2 (Pi - 1/2) dt + k dW,   k = 2 alpha / sigma
//! ```
//!
//! keep every Euler iterate inside `(0, 1)`. The clock coordinate
//! `Z_t = z_0 + sigma^2 t / 2` carries no noise at all.
//!
//! Every path draws from its own generator, seeded from the base seed and a
//! tuple of stream identifiers, so results do not depend on how paths are
//! scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::model::{check_belief, logistic, logit, Model};
use crate::params::ModelParams;

/// Path generator type used throughout the crate.
pub type PathRng = Xoshiro256PlusPlus;

/// Stream tags, kept distinct so that different estimators never share
/// random numbers by accident.
pub mod stream {
    pub const OPERATOR: u64 = 1;
    pub const AVERAGING: u64 = 2;
    pub const RESIDUAL: u64 = 3;
    pub const POLICY: u64 = 4;
    pub const CHECK: u64 = 5;
}

/// Default capped mass of the exponential clock.
const EXP_TAIL_MASS: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Euler step.
    pub dt: f64,
    /// Paths per policy evaluation.
    pub n_paths: usize,
    pub seed: u64,
    /// Cap on exponential clock draws; `ln(1e4) / r` when unset.
    pub t_max: Option<f64>,
    /// Censoring horizon for policy paths.
    pub horizon: f64,
}

impl SimConfig {
    /// Clock cap in effect for discount rate `r`.
    pub fn t_max_for(&self, r: f64) -> f64 {
        self.t_max.unwrap_or_else(|| default_t_max(r))
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(ModelError::InvalidSim(format!("dt must be > 0, got {}", self.dt)));
        }
        if let Some(t_max) = self.t_max {
            if !(t_max.is_finite() && t_max >= self.dt) {
                return Err(ModelError::InvalidSim(format!(
                    "t_max must be >= dt, got t_max = {t_max}, dt = {}",
                    self.dt
                )));
            }
        }
        if !(self.horizon.is_finite() && self.horizon >= self.dt) {
            return Err(ModelError::InvalidSim(format!(
                "horizon must be >= dt, got horizon = {}, dt = {}",
                self.horizon, self.dt
            )));
        }
        if self.n_paths == 0 {
            return Err(ModelError::InvalidSim("n_paths must be >= 1".into()));
        }
        Ok(())
    }
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 0.01,
            n_paths: 20_000,
            seed: 2024,
            t_max: None,
            horizon: 150.0,
        }
    }
}

/// `ln(1e4) / r`: the exponential clock exceeds it with probability `1e-4`.
pub fn default_t_max(r: f64) -> f64 {
    -EXP_TAIL_MASS.ln() / r
}

/// Position of one simulated path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathState {
    pub t: f64,
    /// `logit(Pi_t)`.
    pub logit_pi: f64,
    /// `Z_t`, always exactly `z0 + sigma^2 t / 2`.
    pub z: f64,
    pub z0: f64,
}

impl PathState {
    pub fn start(z0: f64, pi: f64) -> Result<Self, ModelError> {
        check_belief(pi)?;
        Ok(PathState::from_logit(z0, logit(pi)))
    }

    #[inline]
    pub fn from_logit(z0: f64, logit_pi: f64) -> Self {
        PathState {
            t: 0.0,
            logit_pi,
            z: z0,
            z0,
        }
    }

    #[inline]
    pub fn pi(&self) -> f64 {
        logistic(self.logit_pi)
    }
}

/// Mixes a base seed with stream identifiers (splitmix64 finaliser).
pub fn stream_seed(seed: u64, parts: &[u64]) -> u64 {
    fn mix(mut x: u64) -> u64 {
        x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
        x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        x ^ (x >> 31)
    }
    parts
        .iter()
        .fold(mix(seed), |h, &p| mix(h ^ mix(p.wrapping_add(0xD1B5_4A32_D192_ED03))))
}

/// Inverse-CDF draw of an exponential time with rate `r`.
#[inline]
pub fn exp_time_from_uniform(u: f64, r: f64) -> f64 {
    -(-u).ln_1p() / r
}

/// Exponential time with rate `r` (mean `1 / r`).
#[inline]
pub fn sample_exp_time<R: Rng + ?Sized>(rng: &mut R, r: f64) -> f64 {
    exp_time_from_uniform(rng.random::<f64>(), r)
}

/// Pollutant stock at time `t` while emissions continue.
pub fn pollution_at(t: f64, p0: f64, params: &ModelParams) -> f64 {
    let decay = (-params.delta * t).exp();
    params.steady_stock() * (1.0 - decay) + p0 * decay
}

/// Pollutant stock at time `t >= tau` after emissions stopped at `tau`.
pub fn pollution_after(t: f64, tau: f64, p_tau: f64, params: &ModelParams) -> f64 {
    p_tau * (-params.delta * (t - tau)).exp()
}

/// Simulator for `(Z, Pi)` under one model and step size.
#[derive(Debug, Clone)]
pub struct PathEngine {
    model: Model,
    cfg: SimConfig,
    vol: f64,
    vol2: f64,
    clock_speed: f64,
    sqrt_dt: f64,
    t_max: f64,
}

impl PathEngine {
    pub fn new(model: Model, cfg: SimConfig) -> Result<Self, ModelError> {
        cfg.validate()?;
        let p = model.params();
        let vol = 2.0 * p.alpha / p.sigma;
        Ok(PathEngine {
            model,
            cfg,
            vol,
            vol2: vol * vol,
            clock_speed: 0.5 * p.sigma * p.sigma,
            sqrt_dt: cfg.dt.sqrt(),
            t_max: cfg.t_max_for(p.r),
        })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    /// Effective cap on exponential clock draws.
    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    /// Generator for the stream identified by `parts`.
    pub fn rng(&self, parts: &[u64]) -> PathRng {
        PathRng::seed_from_u64(stream_seed(self.cfg.seed, parts))
    }

    /// One Euler step of length `dt` with Brownian increment `dw`.
    #[inline]
    pub fn step_belief(&self, state: PathState, dw: f64) -> PathState {
        self.step_by(state, dw, self.cfg.dt)
    }

    #[inline]
    fn step_by(&self, s: PathState, dw: f64, h: f64) -> PathState {
        // Branch-free form; saturates to 0 or 1 without producing NaN.
        let pi = 1.0 / (1.0 + (-s.logit_pi).exp());
        let t = s.t + h;
        PathState {
            t,
            logit_pi: s.logit_pi + self.vol2 * (pi - 0.5) * h + self.vol * dw,
            z: s.z0 + self.clock_speed * t,
            z0: s.z0,
        }
    }

    /// Advances by `duration` using full steps and one final partial step.
    pub fn advance<R: Rng + ?Sized>(&self, mut s: PathState, duration: f64, rng: &mut R) -> PathState {
        let dt = self.cfg.dt;
        let n = (duration / dt).floor() as u64;
        for _ in 0..n {
            let g: f64 = rng.sample(StandardNormal);
            s = self.step_by(s, self.sqrt_dt * g, dt);
        }
        let rest = duration - n as f64 * dt;
        if rest > 0.0 {
            let g: f64 = rng.sample(StandardNormal);
            s = self.step_by(s, rest.sqrt() * g, rest);
        }
        s
    }

    /// Exact draw of `logit(Pi_t)` given `logit(Pi_0) = logit0`.
    ///
    /// The filtered belief is a mixture: with probability `Pi_0` the path
    /// drifts as if `mu = +alpha`, otherwise as if `mu = -alpha`, and in
    /// both cases `phi_t = phi_0 +- k^2 t / 2 + k W_t`.
    #[inline]
    pub fn exact_logit_at<R: Rng + ?Sized>(&self, logit0: f64, t: f64, rng: &mut R) -> f64 {
        let up = rng.random::<f64>() < logistic(logit0);
        let g: f64 = rng.sample(StandardNormal);
        let drift = 0.5 * self.vol2 * t;
        logit0 + if up { drift } else { -drift } + self.vol * t.sqrt() * g
    }

    /// Draws an exponential clock with rate `r`, capped at `t_max`.
    #[inline]
    pub fn sample_clock<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        sample_exp_time(rng, self.model.params().r).min(self.t_max)
    }

    /// Cost process recovered from the transformed state.
    #[inline]
    pub fn x_from_state(&self, s: &PathState) -> f64 {
        self.model.x_of(s.z, s.logit_pi)
    }

    /// Transformed starting state for `(x, pi)`.
    pub fn start_from_x(&self, x: f64, pi: f64) -> Result<PathState, ModelError> {
        check_belief(pi)?;
        if !(x > 0.0 && x.is_finite()) {
            return Err(ModelError::InvalidState(format!("x must be > 0, got {x}")));
        }
        let phi = logit(pi);
        Ok(PathState::from_logit(self.model.z_of(x, phi), phi))
    }
}
