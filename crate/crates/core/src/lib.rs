//! Dyadic harmonic analysis toolkit.
//!
//! Exact dyadic cube arithmetic on (shifted) grids, piecewise-constant grid
//! functions, Haar calculus, Calderon-Zygmund and stopping-time
//! decompositions, discretised square functions, dyadic and sparse bilinear
//! forms, Muckenhoupt weights, and the numerical harnesses built on them.

pub mod decomposition;
pub mod dyadic_grid;
pub mod error;
pub mod grid_fn;
pub mod haar;
pub mod operators;
pub mod scalar;
pub mod verify;
pub mod weights;

pub use error::{Error, Result};
pub use scalar::{Real, Scalar};

pub use dyadic_grid::{Cube, Dyadic, DyadicGrid, GoodnessParams, ShiftSeq};
pub use grid_fn::{Generator, GridFunction, Integrator};

/// Exact rational scalar used for machine-exact averaging checks.
pub type Rational = num_rational::Rational64;

/// Double precision grid function, the default working type.
pub type GridFn = GridFunction<f64>;
/// Single precision grid function.
pub type GridFn32 = GridFunction<f32>;
/// Grid function with exact rational values.
pub type ExactGridFn = GridFunction<Rational>;
