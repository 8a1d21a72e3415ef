//! Vector-valued diffusion on the interval `(0, 1)` with coupled boundary
//! conditions `f(z) ∈ Y_z`, `∂_D f/∂ν + S_z f(z) ∈ Y_z⊥` at each endpoint `z`.
//!
//! * [`lattice`]: order structure of `R^m`, subspaces, projections and the
//!   algebraic invariance criteria.
//! * [`forms`]: P1 Galerkin assembly of the constrained form.
//! * [`semigroup`]: time stepping, eigenpairs and trajectory observers.
//! * [`analyzer`]: predictions from the criteria, checked against simulation.
//! * [`cli`]: configuration files and the command-line pipelines.

pub mod analyzer;
pub mod banded;
pub mod cli;
mod error;
pub mod forms;
pub mod lattice;
pub mod semigroup;

pub use error::{Error, Result};
