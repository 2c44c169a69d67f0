//! Model primitives and the constants derived from them.

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// The seven primitive parameters of the pollution-cost model.
///
/// Costs per unit of pollution follow a geometric Brownian motion with
/// volatility `sigma` and an unobserved drift of `+alpha` or `-alpha`.
/// Before adoption the pollutant stock is fed at rate `beta * e_rate` and
/// dissipates at rate `delta`; adoption costs `i_cost` once and stops
/// emissions. Everything is discounted at rate `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    pub sigma: f64,
    pub e_rate: f64,
    pub beta: f64,
    pub delta: f64,
    pub i_cost: f64,
    pub r: f64,
    pub alpha: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            sigma: 0.2,
            e_rate: 0.5,
            beta: 0.4,
            delta: 0.2,
            i_cost: 10.0,
            r: 0.1,
            alpha: 0.05,
        }
    }
}

impl ModelParams {
    /// Builds a validated parameter set.
    pub fn new(
        sigma: f64,
        e_rate: f64,
        beta: f64,
        delta: f64,
        i_cost: f64,
        r: f64,
        alpha: f64,
    ) -> Result<Self, ModelError> {
        let params = ModelParams {
            sigma,
            e_rate,
            beta,
            delta,
            i_cost,
            r,
            alpha,
        };
        params.validate()?;
        Ok(params)
    }

    /// Checks positivity of every field and `r > alpha`.
    ///
    /// When `r <= alpha` the never-adopt strategy has infinite expected cost
    /// and the stopping problem is not well posed.
    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, value) in self.named_fields() {
            if !(value.is_finite() && value > 0.0) {
                return Err(ModelError::NonPositive { name, value });
            }
        }
        if self.r <= self.alpha {
            return Err(ModelError::DiscountNotAboveDrift {
                r: self.r,
                alpha: self.alpha,
            });
        }
        Ok(())
    }

    /// Field names as used in config files and sweeps, paired with values.
    pub fn named_fields(&self) -> [(&'static str, f64); 7] {
        [
            ("sigma", self.sigma),
            ("e_rate", self.e_rate),
            ("beta", self.beta),
            ("delta", self.delta),
            ("i_cost", self.i_cost),
            ("r", self.r),
            ("alpha", self.alpha),
        ]
    }

    /// Returns a copy with one named field replaced. The result is not
    /// validated.
    pub fn with_field(&self, name: &str, value: f64) -> Result<Self, ModelError> {
        let mut out = *self;
        match name {
            "sigma" => out.sigma = value,
            "e_rate" => out.e_rate = value,
            "beta" => out.beta = value,
            "delta" => out.delta = value,
            "i_cost" => out.i_cost = value,
            "r" => out.r = value,
            "alpha" => out.alpha = value,
            other => return Err(ModelError::UnknownParameter(other.to_string())),
        }
        Ok(out)
    }

    /// `sigma^2 / (2 alpha)`, the exponent of the likelihood-ratio power.
    pub fn lr_exponent(&self) -> f64 {
        self.sigma * self.sigma / (2.0 * self.alpha)
    }

    /// Emission inflow `beta * E`.
    pub fn inflow(&self) -> f64 {
        self.beta * self.e_rate
    }

    /// Steady-state pollutant stock under continued emissions.
    pub fn steady_stock(&self) -> f64 {
        self.inflow() / self.delta
    }
}

/// Constants that appear in the closed-form strategy values and in the
/// running gain `q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedConstants {
    pub theta: f64,
    pub theta0: f64,
    pub rho: f64,
    pub rho0: f64,
    /// `(alpha - r) theta + 2 alpha rho`, always negative.
    pub coef_a: f64,
    /// `(alpha + r) rho`, always positive.
    pub coef_b: f64,
    /// `sigma^2 / (2 alpha)`.
    pub exp_ratio: f64,
}

/// Evaluates the discounting constants of the never/now strategy values.
pub fn derive_constants(params: &ModelParams) -> Result<DerivedConstants, ModelError> {
    params.validate()?;
    let ModelParams {
        r, alpha, delta, ..
    } = *params;
    let rd_minus = r + delta - alpha;
    let rd_plus = r + delta + alpha;
    let theta =
        2.0 * alpha * (2.0 * r + delta) / ((r - alpha) * (r + alpha) * rd_minus * rd_plus);
    let theta0 = 2.0 * alpha / (rd_minus * rd_plus);
    let rho = 1.0 / (rd_plus * (r + alpha));
    let rho0 = 1.0 / rd_plus;
    Ok(DerivedConstants {
        theta,
        theta0,
        rho,
        rho0,
        coef_a: (alpha - r) * theta + 2.0 * alpha * rho,
        coef_b: (alpha + r) * rho,
        exp_ratio: params.lr_exponent(),
    })
}
