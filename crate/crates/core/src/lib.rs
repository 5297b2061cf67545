//! Finite-difference acoustic scattering on a staggered Cartesian grid with a
//! perfectly matched layer and diffuse-interface obstacles.

// `!(x > 0.0)` rejects NaN on purpose; index loops mirror the stencils.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod amr;
pub mod config;
pub mod convergence;
pub mod driver;
pub mod energy;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod ops;
pub mod pml;
pub mod presets;
pub mod reduce;
pub mod solver;
pub mod stepper;
pub mod verify;

pub use error::{Error, Result};
