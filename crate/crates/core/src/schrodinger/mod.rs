//! One-dimensional Schrödinger operators `-u'' + V u` on the line.

mod confining;
mod potential;
mod spline;
mod sturm;
mod weyl;

pub use confining::{xi_confining, INTERLACING_TOL};
pub use potential::{Potential, PotentialClass, PotentialSpec};
pub use spline::CubicSpline;
pub use sturm::{dirichlet_eigenvalues, dirichlet_eigenvalues_with, oscillation_count, Domain, EigenReport, ShootingOptions};
pub use weyl::{
    green_diagonal_schrodinger, green_diagonal_schrodinger_with, weyl_log_derivative, weyl_solution, xi_schrodinger,
    xi_schrodinger_grid,
    Side, WeylOptions, WeylSolution,
};
