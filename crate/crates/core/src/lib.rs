//! Exact relaxation dynamics of perturbed Heisenberg spin ladders, and models
//! of how a perturbation alters them: exponential damping of the memory kernel,
//! plus constant and time-dependent damping of the unperturbed curve.

pub mod comparators;
pub mod dynamics;
pub mod error;
pub mod kernel;
pub mod lattice;
pub mod optimize;
pub mod series;
pub mod spectral;

pub use error::{LadderError, Result};
pub use lattice::{BlockedOperator, BondConvention, Ladder, LadderSpec};
pub use series::TimeSeries;
