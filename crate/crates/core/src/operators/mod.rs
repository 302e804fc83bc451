//! Kernels, square functions, dyadic square functions, maximal functions and
//! the bilinear forms built from them.

mod dyadic_sf;
mod forms;
mod kernel;
mod theta;

pub use dyadic_sf::{
    dyadic_square_function, dyadic_square_profile, maximal_3d, maximal_3d_profile, HaarEnergy,
    MaximalProfile, SquareProfile, SquareVariant,
};
pub use forms::{
    diagonal_form, dyadic_form, enlarged_form, enlarged_form_cellwise, form_outside_root,
    sparse_form,
};
pub use kernel::{KernelConstants, KernelSpec, Profile};
pub use theta::{
    bilinear_lhs, bilinear_lhs_breakdown, square_function, square_function_sq, testing_constant,
    theta_apply, LhsBreakdown, TestingEntry, TestingParams, TestingReport, TimeGrid, TimeSample,
};
