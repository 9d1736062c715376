//! Time-dependent and static optimal shape design for a linear parabolic
//! equation with a source-term shape control.
//!
//! Shapes are relaxed to densities with values in `[0, 1]` and a volume
//! budget. The relaxed problems are convex quadratic programs solved by
//! conditional gradient, whose linear oracle is the bathtub principle. The
//! [`turnpike`] module measures how close the time-dependent optimum stays to
//! the static one.

pub mod admissible;
pub mod config;
mod error;
pub mod grid;
pub mod io;
pub mod pde;
pub mod scenario;
pub mod solver;
pub mod turnpike;

pub use error::{Error, Result};
pub use grid::{Grid, ScalarField, ShapeMask};
