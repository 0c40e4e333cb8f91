//! Finite-difference laboratory for the doubly degenerate thin-film equation
//! `u_t + (m(u) ψ(u_xxx))_x = 0` on an interval with `u_x = u_xxx = 0` at the
//! walls, for power-law and Ellis rheologies.
//!
//! The semidiscrete scheme conserves mass exactly and dissipates the discrete
//! energy `½∫u_x²` at exactly the discrete dissipation rate, so the long-time
//! regimes (finite-time extinction, polynomial and exponential decay) can be
//! measured from the recorded energy alone.

pub mod asymptotics;
pub mod error;
pub mod functionals;
pub mod harness;
pub mod model;
pub mod oracle;
mod pow;
pub mod spatial;
pub mod timestep;

pub use error::{Error, Result};
pub use functionals::Diagnostics;
pub use model::{FlowExponent, Regularisation, Rheology};
pub use spatial::{FilmState, Grid};
pub use timestep::{IntegratorConfig, Method, Termination, Trajectory};
