//! Multi-bump positive solutions of `-Δu + V(|y|)u = u^p` in the plane.
//!
//! The crate builds `k` copies of the radial ground state on a ring of radius
//! `r`, corrects the sum inside the symmetric constrained space, maximizes the
//! reduced energy over `r`, and polishes the result into a certified solution.

pub mod banded;
pub mod energy;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod krylov;
pub mod lyapunov;
mod ode;
pub mod pipeline;
pub(crate) mod quadrature;
pub mod radial;
pub mod reduced;

pub use error::{Error, Result};
