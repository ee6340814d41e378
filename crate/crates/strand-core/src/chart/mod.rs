//! A coefficient-driven evaluator for covariant Hamiltonian field theory with
//! a vertical symmetry, in adapted local coordinates on a trivialized bundle
//! `P = M × F × G`.
//!
//! A [`ChartSpec`] supplies the chart data (structure constants, connection
//! and lift coefficients, Christoffel symbols, the group composition map in
//! normal coordinates, a Hamiltonian); the operations evaluate the covariant
//! brackets, the quotient projection and its differential, horizontal
//! differentials and field-equation residuals at points, differentiating the
//! supplied coefficients by central finite differences. Coefficient closures
//! must be side-effect-free; evaluation is pure and can run concurrently.

use thiserror::Error;

pub mod brackets;
pub mod fd;
pub mod fixtures;
pub mod kappa;
pub mod residuals;
pub mod spec;

pub use brackets::{
    bracket_curvature, bracket_lie_poisson, bracket_reduced, bracket_sigma, bracket_unreduced,
    curvature_coefficients, dh_curvature_correction, dh_reduced, dh_unreduced, pullback_form,
    pullback_scalar,
};
pub use fd::FdScheme;
pub use kappa::{check_invariance, dkappa_local, kappa_local, z_matrix, z_matrix_inv};
pub use residuals::{
    hamilton_cartan_residual, reduced_equation_residuals, HamiltonCartanResidual,
    ReducedEquationResidual, SectionSampleR, SectionSampleU,
};
pub use spec::{
    Block, ChartSpec, Dims, GroupLiftSpec, PointR, PointU, PoissonFormSpec, Structure, TangentR,
    TangentU,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChartError {
    /// Chart data is structurally invalid (dimension mismatch, bad structure
    /// constants, ...).
    #[error("invalid chart data: {0}")]
    Invalid(String),
    /// Evaluation left the domain of a chart map.
    #[error("chart domain error: {0}")]
    ChartDomain(String),
    /// An operation's stated precondition is violated.
    #[error("precondition violated: {0}")]
    Precondition(String),
}
