//! Dispersion relations: closed forms, lattice sums, the regularized 2D
//! reciprocal sum, finite-difference derivatives and contour extraction.

pub mod closed_form;
pub mod contour;
pub mod derivatives;
pub mod grid;
pub mod lattice_sum;
pub mod regularized;
pub mod special;

pub use closed_form::{closed_form_1d, smooth_battery_1d, ClosedForm1d, ClosedFormValue, Dispersion1d, FourierDispersion};
pub use derivatives::{
    central_differences, curvature_minima, find_inflection_points, find_inflection_points_sampled, hessian_2d, CurvatureMinimum, HessianField,
    InflectionPoint, StationarySet,
};
pub use grid::{periodic_distance, DispersionGrid, KAxis};
pub use lattice_sum::{lattice_sum_dispersion, lattice_sum_grid_1d, lattice_sum_grid_2d, Couplings, Cutoff2d, LatticeSum};
pub use contour::{marching_squares, ContourGrid, ContourSet, Polyline};
pub use regularized::{g_star, regularized_dispersion_2d, regularized_integrals, RegularizedDispersion, RegularizedIntegrals};
