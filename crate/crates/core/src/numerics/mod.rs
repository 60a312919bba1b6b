//! Dense real/complex linear algebra: products, Kronecker products, linear
//! solves, eigenvalues, Schur tests and Riccati-based gain synthesis.

mod complex;
mod eigen;
mod linsolve;
mod matrix;
mod riccati;

pub use complex::{kron_complex, kron_complex_real, ComplexMatrix};
pub use eigen::{
    complex_eigenvalues, eigenvalues, is_schur, spectral_radius, Spectrum, DEFAULT_EIG_TOL,
};
pub use linsolve::{inverse, lstsq, rank, solve};
pub use matrix::{kron, vec_norm, RealMatrix};
pub(crate) use matrix::{vec_add, vec_sub};
pub use num_complex::Complex64;
pub use riccati::{
    observer_gain, solve_dare, state_gain, synthesize_observer_gain, synthesize_state_gain,
    RiccatiOptions, RiccatiSolution,
};
