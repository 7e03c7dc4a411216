//! Numerical toolkit for the Keener-Tyson model of the Belousov-Zhabotinsky
//! reaction on a periodic torus.
//!
//! The crate builds solutions two independent ways — a mild-solution Picard
//! scheme driven by semigroup propagators, and a long-horizon IMEX stepper —
//! and ships the machinery to verify the estimates that make the pair (u, v)
//! well behaved: propagator norm bounds, invariant boxes, and the
//! comparison-ODE trap-time chain that forces trajectories into the square
//! S = (q, u_bar)^2.

pub mod comparison;
pub mod error;
pub mod grid;
pub mod io;
pub mod mild;
pub mod model;
pub mod monitor;
pub mod ode;
pub mod semigroup;
mod spectral;
pub mod stepper;
pub mod trajectory;

pub use error::{Error, Result};
