//! Simulation of nonadiabatic holonomic quantum gates on the spin and
//! Rydberg states of a single electron floating on liquid helium.
//!
//! The crate builds the driven multilevel Hamiltonians, integrates the
//! dissipative dynamics, computes gate and state fidelities, and derives the
//! physical inputs (level positions, transition structure, two-ripplon decay
//! rates) from the vertical confinement problem.

pub mod basis;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod helium;
pub mod holonomy;
pub mod operator;
pub mod pulse;
mod tridiag;

pub use basis::{BasisLabel, Spin, DIM};
pub use error::{Error, Result};
pub use operator::{state_fidelity, tensor_product, DensityMatrix, Operator, StateVector};
pub use pulse::GaussianPulse;
