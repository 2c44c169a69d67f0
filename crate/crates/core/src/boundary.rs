//! Free boundary `z -> c(z)` stored on a uniform grid.

use serde::Serialize;

use crate::error::ModelError;
use crate::model::{check_belief, logit, Model, EPS_CLIP};

/// Uniform ascending grid `z_min = z_0 < ... < z_{n-1} = z_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZGrid {
    pub z_min: f64,
    pub z_max: f64,
    pub n: usize,
}

impl ZGrid {
    pub fn new(z_min: f64, z_max: f64, n: usize) -> Result<Self, ModelError> {
        if !(z_min.is_finite() && z_max.is_finite() && z_min < z_max) {
            return Err(ModelError::InvalidBoundary(format!(
                "grid needs z_min < z_max, got [{z_min}, {z_max}]"
            )));
        }
        if n < 2 {
            return Err(ModelError::InvalidBoundary(format!(
                "grid needs at least 2 nodes, got {n}"
            )));
        }
        Ok(ZGrid { z_min, z_max, n })
    }

    pub fn dz(&self) -> f64 {
        (self.z_max - self.z_min) / (self.n - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.z_max
        } else {
            self.z_min + i as f64 * self.dz()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// Cell index and fractional position of `z`, clamped to the grid.
    #[inline]
    fn locate(&self, z: f64) -> (usize, f64) {
        if z <= self.z_min {
            return (0, 0.0);
        }
        if z >= self.z_max {
            return (self.n - 2, 1.0);
        }
        let s = (z - self.z_min) / self.dz();
        let i = (s.floor() as usize).min(self.n - 2);
        (i, s - i as f64)
    }
}

/// Outcome of a solve, carried along with the boundary it produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Convergence {
    pub converged: bool,
    /// Sweeps run with common random numbers.
    pub iterations: usize,
    /// Sup-norm change of the last common-random-number sweep.
    pub final_sup_change: f64,
    /// Largest in-sample operator value (ignoring clamped nodes) at the
    /// last common-random-number sweep.
    pub final_sup_residual: f64,
    /// Fresh-stream sweeps whose iterates were averaged.
    pub averaging_sweeps: usize,
}

/// Monotone piecewise-linear threshold `c(z)` with the lower threshold
/// `m(z)` alongside.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Boundary {
    grid: ZGrid,
    c_values: Vec<f64>,
    m_values: Vec<f64>,
    convergence: Option<Convergence>,
}

/// Cost threshold `b(pi)` recovered from `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CostThreshold {
    /// Stop iff `x >= b`.
    Finite(f64),
    /// `pi` lies below every grid value of `c`: continue for every `x`.
    AlwaysContinue,
    /// `pi` lies above every grid value of `c`: stop for every `x`.
    AlwaysStop,
}

impl CostThreshold {
    /// The threshold as a number, with `+inf` and `0` as sentinels.
    pub fn value(self) -> f64 {
        match self {
            CostThreshold::Finite(b) => b,
            CostThreshold::AlwaysContinue => f64::INFINITY,
            CostThreshold::AlwaysStop => 0.0,
        }
    }
}

/// Generalised inverse `c^{-1}(pi) = inf { z : c(z) >= pi }`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InverseValue {
    At(f64),
    /// `pi < c(z_min)`.
    BelowRange,
    /// `pi > c(z_max)`.
    AboveRange,
}

impl Boundary {
    /// Checks lengths, that every `c` lies in `(0, 1)` and that `c` is
    /// nondecreasing. `m <= c` is not required here (degenerate policies
    /// violate it on purpose).
    pub fn new(grid: ZGrid, c_values: Vec<f64>, m_values: Vec<f64>) -> Result<Self, ModelError> {
        if c_values.len() != grid.n || m_values.len() != grid.n {
            return Err(ModelError::InvalidBoundary(format!(
                "expected {} values, got c: {}, m: {}",
                grid.n,
                c_values.len(),
                m_values.len()
            )));
        }
        if let Some(bad) = c_values.iter().find(|c| !(**c > 0.0 && **c < 1.0)) {
            return Err(ModelError::InvalidBoundary(format!(
                "c values must lie in (0, 1), found {bad}"
            )));
        }
        if let Some(w) = c_values.windows(2).find(|w| w[1] < w[0]) {
            return Err(ModelError::InvalidBoundary(format!(
                "c must be nondecreasing, found {} followed by {}",
                w[0], w[1]
            )));
        }
        Ok(Boundary {
            grid,
            c_values,
            m_values,
            convergence: None,
        })
    }

    /// Constant threshold `c = value`, with the model's `m` attached.
    pub fn constant(model: &Model, grid: ZGrid, value: f64) -> Result<Self, ModelError> {
        let m = grid.nodes().iter().map(|&z| model.m_fn(z)).collect();
        Boundary::new(grid, vec![value; grid.n], m)
    }

    pub(crate) fn with_convergence(mut self, conv: Convergence) -> Self {
        self.convergence = Some(conv);
        self
    }

    pub fn grid(&self) -> &ZGrid {
        &self.grid
    }

    pub fn c_values(&self) -> &[f64] {
        &self.c_values
    }

    pub fn m_values(&self) -> &[f64] {
        &self.m_values
    }

    pub fn convergence(&self) -> Option<&Convergence> {
        self.convergence.as_ref()
    }

    /// `false` only when a solve ran out of iterations.
    pub fn is_converged(&self) -> bool {
        self.convergence.as_ref().is_none_or(|c| c.converged)
    }

    /// `c(z)` by linear interpolation; constant beyond the grid ends.
    #[inline]
    pub fn eval(&self, z: f64) -> f64 {
        let (i, f) = self.grid.locate(z);
        let (a, b) = (self.c_values[i], self.c_values[i + 1]);
        a + f * (b - a)
    }

    /// Whether `(z, pi)` lies in the stopping region `pi >= c(z)`. A value
    /// of `c` at the cap `1 - EPS_CLIP` stands for `c = 1` and is never
    /// reached. Values within `1e-15` of the cap count as the cap, so a
    /// boundary read back from text behaves the same.
    #[inline]
    pub fn stops(&self, z: f64, pi: f64) -> bool {
        let c = self.eval(z);
        c < 1.0 - EPS_CLIP - 1e-15 && pi >= c
    }

    /// Largest `c(z_{i+1}) - c(z_i)` divided by the grid step.
    pub fn max_slope(&self) -> f64 {
        let dz = self.grid.dz();
        self.c_values
            .windows(2)
            .map(|w| (w[1] - w[0]) / dz)
            .fold(0.0, f64::max)
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.c_values.windows(2).all(|w| w[0] <= w[1])
    }

    /// `c^{-1}(pi)`, linear between grid nodes; flat stretches resolve to
    /// their left end.
    pub fn inverse(&self, pi: f64) -> InverseValue {
        let c = &self.c_values;
        let Some(i) = c.iter().position(|&v| v >= pi) else {
            return InverseValue::AboveRange;
        };
        if i == 0 {
            return if c[0] == pi {
                InverseValue::At(self.grid.z_min)
            } else {
                InverseValue::BelowRange
            };
        }
        let (lo, hi) = (c[i - 1], c[i]);
        let z0 = self.grid.node(i - 1);
        InverseValue::At(z0 + (pi - lo) / (hi - lo) * (self.grid.node(i) - z0))
    }

    /// `b(pi) = exp[(sigma^2 / 2 alpha) logit(pi) - c^{-1}(pi)]`; the
    /// stopping set is `{x >= b(pi)}`.
    pub fn boundary_in_x(&self, pi: f64, model: &Model) -> Result<CostThreshold, ModelError> {
        check_belief(pi)?;
        Ok(match self.inverse(pi) {
            InverseValue::At(z) => {
                CostThreshold::Finite((model.consts().exp_ratio * logit(pi) - z).exp())
            }
            InverseValue::BelowRange => CostThreshold::AlwaysContinue,
            InverseValue::AboveRange => CostThreshold::AlwaysStop,
        })
    }
}
