//! Jacobi matrices `(h u)(n) = u(n+1) + u(n-1) + v(n) u(n)`.

mod green;
mod operator;
mod tridiag;

pub use green::{default_depth, green_diagonal, green_diagonal_finite, xi_arg, DEPTH_TOL, MAX_DEPTH};
pub(crate) use operator::gcd;
pub use operator::{dirichlet_decouple, truncate, Diagonal, JacobiOperator, TruncatedJacobi};
pub use tridiag::{
    default_energy_window, eigenvalues_tridiagonal, near_jump, sturm_count, trace_formula_jacobi, xi_counting,
    xi_counting_steps, xi_counting_sturm,
};
