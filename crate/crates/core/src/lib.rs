//! Optimal timing of an emissions-reduction policy when the trend of
//! pollution costs is unknown and learned from observations.
//!
//! The crate computes the free boundary `c(z)` that separates waiting from
//! adopting, and evaluates the resulting rule by simulation.
//!
//! ```
//! use pollstop::{Model, ModelParams, StatePoint};
//!
//! let model = Model::new(ModelParams::default()).unwrap();
//! let sp = StatePoint::new(1.0, 1.0, 0.5).unwrap();
//! let gap = model.value_never(&sp) - model.value_now(&sp);
//! assert!((gap - model.reward_g(1.0, 0.5)).abs() < 1e-12);
//! ```

pub mod boundary;
pub mod checks;
pub mod config;
pub mod error;
pub mod isotonic;
pub mod model;
pub mod output;
pub mod params;
pub mod policy;
pub mod sim;
pub mod solver;
pub mod sweep;

#[cfg(doctest)]
mod book;

pub use boundary::{Boundary, CostThreshold, ZGrid};
pub use config::{parse_config, RunConfig};
pub use error::ModelError;
pub use model::{Model, StatePoint, TransformedPoint};
pub use params::{derive_constants, DerivedConstants, ModelParams};
pub use policy::{simulate_policy, value_surface, PolicyStats};
pub use sim::{PathEngine, SimConfig};
pub use solver::{residual_profile, solve_boundary, SolverConfig};
