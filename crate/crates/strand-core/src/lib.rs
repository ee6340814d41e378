// Index-based loops mirror the tensor notation of the formulas they
// implement; negated comparisons are deliberate NaN guards.
#![allow(clippy::needless_range_loop)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Simulation and verification toolkit for the charged SO(3) strand, a
//! covariant Hamiltonian field theory with a circle symmetry.
//!
//! The crate integrates the strand in two equivalent formulations and checks
//! them against each other:
//!
//! * **Unreduced**: fields `(R(t,s), p^t(t,s))` with `R ∈ SO(3)`, evolved by
//!   the covariant Hamilton equations ([`dynamics`]).
//! * **Reduced**: fields `(ζ, σ^t, μ^t, ξ)` on the unit sphere obtained by
//!   quotienting the fiberwise circle action, evolved by the reduced
//!   covariant Hamilton equations.
//!
//! [`chart`] hosts a coefficient-driven evaluator for the local-coordinate
//! form of the covariant brackets, the quotient projection and its
//! differential, and the residuals of both sets of field equations. Its
//! operations take derivatives of user-supplied coefficient functions by
//! central finite differences, so any adapted chart (not just the strand's)
//! can be plugged in; [`chart::fixtures`] ships three such charts used by the
//! verification suite.
//!
//! [`diagnostics`] turns runs into conserved-quantity series, bracket-identity
//! residuals, reduced-vs-unreduced equivalence errors, and mesh-refinement
//! studies.
//!
//! ```
//! use strand_core::diagnostics::equivalence_error;
//! use strand_core::dynamics::{
//!     initial_conditions, integrate_reduced, integrate_unreduced, Grid, InitialKind,
//!     IntegratorConfig,
//! };
//! use strand_core::so3::{SpdTensor, Vec3};
//! use strand_core::strand::StrandParams;
//!
//! let params = StrandParams::new(
//!     SpdTensor::diag(1.0, 2.0, 3.0)?,
//!     SpdTensor::diag(2.0, 1.0, 1.0)?,
//!     1.0,
//!     Vec3::E3,
//! );
//! let grid = Grid::new(32, 1.0)?;
//! let config = IntegratorConfig::new(0.25 * grid.ds(), 0.25);
//! let kind = InitialKind::Twist { amplitude: 0.3, mode: 1 };
//! let (u0, r0) = initial_conditions(kind, &grid, 0, config.fd_order);
//!
//! // Integrate both formulations from consistent data; they stay close.
//! let unreduced = integrate_unreduced(&params, u0, &grid, &config, 8)?;
//! let reduced = integrate_reduced(&params, r0, &grid, &config, 8)?;
//! let errors = equivalence_error(&reduced, &unreduced, &grid, config.fd_order)?;
//! assert!(errors.iter().all(|e| *e < 1e-2));
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod chart;
pub mod diagnostics;
pub mod dynamics;
pub mod reduction;
pub mod rng;
pub mod so3;
pub mod strand;
