//! Closed-form pieces of the stopping problem.
//!
//! The three-dimensional cost minimisation over `(x, p, pi)` reduces to a
//! two-dimensional reward problem in `(x, pi)` with reward
//! `G(x, pi) = beta E x (theta pi + rho) - I`. A change of variables
//! `z = (sigma^2 / 2 alpha) ln(pi / (1 - pi)) - ln x` then turns the cost
//! coordinate into a deterministic clock, `Z_t = z + sigma^2 t / 2`, and
//! leaves all the randomness in the belief `pi`.
//!
//! Powers of the likelihood ratio `pi / (1 - pi)` are always formed as
//! `exp(k * logit(pi))`; the direct form overflows near the ends of `(0, 1)`.

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::params::{derive_constants, DerivedConstants, ModelParams};

/// Clip used to keep beliefs and thresholds away from 0 and 1.
pub const EPS_CLIP: f64 = 1e-9;

/// Bisection tolerance for the lower threshold `m(z)`.
pub const TOL_ROOT: f64 = 1e-10;

/// `ln(p / (1 - p))`.
#[inline]
pub fn logit(p: f64) -> f64 {
    p.ln() - (-p).ln_1p()
}

/// Inverse of [`logit`], evaluated without overflow for either sign.
#[inline]
pub fn logistic(phi: f64) -> f64 {
    if phi >= 0.0 {
        1.0 / (1.0 + (-phi).exp())
    } else {
        let e = phi.exp();
        e / (1.0 + e)
    }
}

/// A point `(x, p, pi)` of the original state space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatePoint {
    /// Socioeconomic cost per unit of pollution.
    pub x: f64,
    /// Pollutant stock.
    pub p: f64,
    /// Belief that the cost trend is `+alpha`.
    pub pi: f64,
}

impl StatePoint {
    pub fn new(x: f64, p: f64, pi: f64) -> Result<Self, ModelError> {
        if !(x.is_finite() && x > 0.0) {
            return Err(ModelError::InvalidState(format!("x must be > 0, got {x}")));
        }
        if !(p.is_finite() && p > 0.0) {
            return Err(ModelError::InvalidState(format!("p must be > 0, got {p}")));
        }
        check_belief(pi)?;
        Ok(StatePoint { x, p, pi })
    }
}

impl Default for StatePoint {
    fn default() -> Self {
        StatePoint {
            x: 1.0,
            p: 1.0,
            pi: 0.5,
        }
    }
}

/// A point `(z, pi)` of the transformed state space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformedPoint {
    pub z: f64,
    pub pi: f64,
}

impl TransformedPoint {
    pub fn new(z: f64, pi: f64) -> Result<Self, ModelError> {
        if !z.is_finite() {
            return Err(ModelError::InvalidState(format!("z must be finite, got {z}")));
        }
        check_belief(pi)?;
        Ok(TransformedPoint { z, pi })
    }
}

pub(crate) fn check_belief(pi: f64) -> Result<(), ModelError> {
    if pi > 0.0 && pi < 1.0 {
        Ok(())
    } else {
        Err(ModelError::BeliefOutOfRange(pi))
    }
}

/// Validated parameters bundled with their derived constants.
///
/// All methods are pure; a `Model` can be shared freely across threads.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Model {
    params: ModelParams,
    consts: DerivedConstants,
}

impl Model {
    pub fn new(params: ModelParams) -> Result<Self, ModelError> {
        let consts = derive_constants(&params)?;
        Ok(Model { params, consts })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn consts(&self) -> &DerivedConstants {
        &self.consts
    }

    /// Expected discounted cost of never adopting the policy.
    pub fn value_never(&self, sp: &StatePoint) -> f64 {
        let DerivedConstants {
            theta,
            theta0,
            rho,
            rho0,
            ..
        } = self.consts;
        self.params.inflow() * sp.x * (theta * sp.pi + rho)
            + sp.x * sp.p * (theta0 * sp.pi + rho0)
    }

    /// Expected discounted cost of adopting the policy immediately.
    pub fn value_now(&self, sp: &StatePoint) -> f64 {
        let DerivedConstants { theta0, rho0, .. } = self.consts;
        sp.x * sp.p * (theta0 * sp.pi + rho0) + self.params.i_cost
    }

    /// Reward of stopping in the reduced problem; equals
    /// `value_never - value_now`.
    pub fn reward_g(&self, x: f64, pi: f64) -> f64 {
        self.params.inflow() * x * (self.consts.theta * pi + self.consts.rho) - self.params.i_cost
    }

    /// `(x, pi) -> (z, pi)`.
    pub fn to_z(&self, x: f64, pi: f64) -> TransformedPoint {
        TransformedPoint {
            z: self.z_of(x, logit(pi)),
            pi,
        }
    }

    /// `(z, pi) -> (x, pi)`.
    pub fn to_xpi(&self, tp: &TransformedPoint) -> (f64, f64) {
        (self.x_of(tp.z, logit(tp.pi)), tp.pi)
    }

    #[inline]
    pub(crate) fn z_of(&self, x: f64, logit_pi: f64) -> f64 {
        self.consts.exp_ratio * logit_pi - x.ln()
    }

    /// `e^{-z} (pi / (1 - pi))^{sigma^2 / 2 alpha}` in log space.
    #[inline]
    pub fn x_of(&self, z: f64, logit_pi: f64) -> f64 {
        (self.consts.exp_ratio * logit_pi - z).exp()
    }

    /// Reward expressed in transformed coordinates.
    pub fn obstacle_f(&self, tp: &TransformedPoint) -> f64 {
        self.obstacle_logit(tp.z, logit(tp.pi))
    }

    pub(crate) fn obstacle_logit(&self, z: f64, logit_pi: f64) -> f64 {
        let pi = logistic(logit_pi);
        self.params.inflow()
            * self.x_of(z, logit_pi)
            * (self.consts.theta * pi + self.consts.rho)
            - self.params.i_cost
    }

    /// Running gain of continuing, `q(z, pi)`.
    ///
    /// Equal to `rI` in the limit `pi -> 0+` and strictly decreasing in `pi`.
    pub fn q_fn(&self, z: f64, pi: f64) -> f64 {
        self.q_logit(z, logit(pi))
    }

    /// [`Model::q_fn`] with the belief given as `logit(pi)`.
    #[inline]
    pub fn q_logit(&self, z: f64, logit_pi: f64) -> f64 {
        let pi = logistic(logit_pi);
        let DerivedConstants { coef_a, coef_b, .. } = self.consts;
        self.params.inflow() * self.x_of(z, logit_pi) * (coef_a * pi - coef_b)
            + self.params.r * self.params.i_cost
    }

    /// Lower threshold `m(z) = inf { pi : q(z, pi) < 0 }`, by bisection on
    /// `[EPS_CLIP, 1 - EPS_CLIP]`.
    pub fn m_fn(&self, z: f64) -> f64 {
        let (mut lo, mut hi) = (EPS_CLIP, 1.0 - EPS_CLIP);
        if self.q_fn(z, hi) > 0.0 {
            return hi;
        }
        if self.q_fn(z, lo) <= 0.0 {
            return lo;
        }
        while hi - lo > TOL_ROOT {
            let mid = 0.5 * (lo + hi);
            if self.q_fn(z, mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> Model {
        Model::new(ModelParams::default()).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn strategy_values_at_reference_state() {
        let m = model();
        let sp = StatePoint::new(1.0, 1.0, 0.5).unwrap();
        assert!(rel(m.value_never(&sp), 13.333_333_333_333_33) < 1e-12);
        assert!(rel(m.value_now(&sp), 13.428_571_428_571_43) < 1e-12);
        assert!(rel(m.reward_g(1.0, 0.5), -0.095_238_095_238_095) < 1e-10);
    }

    #[test]
    fn zero_cost_limits() {
        let m = model();
        let sp = StatePoint {
            x: 0.0,
            p: 3.0,
            pi: 0.3,
        };
        assert_eq!(m.value_never(&sp), 0.0);
        assert_eq!(m.value_now(&sp), 10.0);
        assert_eq!(m.reward_g(0.0, 0.7), -10.0);
    }

    #[test]
    fn linear_in_belief() {
        let m = model();
        let (x, p) = (1.7, 0.4);
        let hi = m.value_never(&StatePoint { x, p, pi: 1.0 });
        let lo = m.value_never(&StatePoint { x, p, pi: 0.0 });
        let dc = m.consts();
        let expect = m.params().inflow() * dc.theta * x + x * p * dc.theta0;
        assert!(rel(hi - lo, expect) < 1e-12);
    }

    #[test]
    fn reward_increasing() {
        let m = model();
        assert!(m.reward_g(1.1, 0.5) > m.reward_g(1.0, 0.5));
        assert!(m.reward_g(1.0, 0.6) > m.reward_g(1.0, 0.5));
    }

    #[test]
    fn transform_reference_points() {
        let m = model();
        let tp = m.to_z(1.0, 0.5);
        assert_eq!(tp.z, 0.0);
        assert_eq!(m.to_xpi(&tp).0, 1.0);
        let tp = m.to_z(2.0, 0.5);
        assert!((tp.z + std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn obstacle_matches_reward_at_origin() {
        let m = model();
        let tp = TransformedPoint::new(0.0, 0.5).unwrap();
        assert!(rel(m.obstacle_f(&tp), m.reward_g(1.0, 0.5)) < 1e-12);
    }

    #[test]
    fn obstacle_tends_to_minus_i() {
        let m = model();
        let v = m.obstacle_f(&TransformedPoint::new(0.0, 1e-300).unwrap());
        assert_eq!(v, -10.0);
        // no overflow right next to 1
        let v = m.obstacle_f(&TransformedPoint::new(50.0, 1.0 - 1e-16).unwrap());
        assert!(v.is_finite());
    }

    #[test]
    fn q_reference_values() {
        let m = model();
        assert!(rel(m.q_fn(0.0, 0.5), 0.314_285_714_285_714_3) < 1e-12);
        assert!((m.q_fn(0.0, 1e-300) - 1.0).abs() < 1e-12);
        assert!((m.q_fn(60.0, 0.5) - 1.0).abs() < 1e-12);
        assert!(m.q_fn(0.0, 1.0 - 1e-16) < -1.0);
    }

    #[test]
    fn m_at_zero() {
        let m = model();
        // sign bracket computed directly from q
        assert!(m.q_fn(0.0, 0.68) > 0.0);
        assert!(m.q_fn(0.0, 0.69) < 0.0);
        let m0 = m.m_fn(0.0);
        assert!((m0 - 0.688).abs() < 1e-3, "{m0}");
        assert!(m.q_fn(0.0, m0 - TOL_ROOT) > 0.0);
        assert!(m.q_fn(0.0, m0 + TOL_ROOT) < 0.0);
    }

    #[test]
    fn m_tails() {
        let m = model();
        assert!(m.m_fn(-8.0) < 0.02);
        assert!(m.m_fn(6.0) > 0.98);
        assert_eq!(m.m_fn(-40.0), EPS_CLIP);
        assert_eq!(m.m_fn(40.0), 1.0 - EPS_CLIP);
    }

    #[test]
    fn state_validation() {
        assert!(StatePoint::new(0.0, 1.0, 0.5).is_err());
        assert!(StatePoint::new(1.0, -1.0, 0.5).is_err());
        assert!(StatePoint::new(1.0, 1.0, 1.0).is_err());
        assert!(TransformedPoint::new(0.0, 0.0).is_err());
        assert!(TransformedPoint::new(f64::NAN, 0.5).is_err());
    }

    #[test]
    fn logistic_is_stable() {
        assert_eq!(logistic(-800.0), 0.0);
        assert_eq!(logistic(800.0), 1.0);
        for p in [1e-12, 0.3, 0.5, 0.9, 1.0 - 1e-12] {
            assert!(rel(logistic(logit(p)), p) < 1e-9);
        }
    }
}
