//! High-order discrete velocity models for thermal lattice Boltzmann
//! simulations: moment-condition generation, model solving and
//! verification, Hermite equilibria, a BGK collide-and-stream kernel and an
//! exact Riemann solver used as the shock-tube reference.

pub mod config;
pub mod equilibrium;
pub mod error;
pub mod exec;
pub mod lbm;
pub mod moment_conditions;
pub mod riemann;
pub mod shock_tube;
pub mod snapshot;
pub mod stencil;

pub use error::{Error, Result};
pub use exec::Execution;
