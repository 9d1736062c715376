//! Elliptic operator assembly, static and implicit-Euler solves, spectra and
//! a priori inequality checks.

mod evolution;
mod inequalities;
pub mod linalg;
mod operator;

pub use evolution::{solve_adjoint, solve_forward, Propagator, TimeGrid, Trajectory};
pub(crate) use evolution::to_trajectory;
pub use inequalities::{check_energy_inequality, check_gronwall, h1_seminorm_sq, InequalityReport};
pub use operator::{
    analytic_modes, discrete_laplacian_lambda1, smallest_eigenvalue, solve_static_adjoint, solve_static_pde,
    solve_static_pde_with, EigenPair, EllipticOperator, EllipticityDiagnostic,
};
