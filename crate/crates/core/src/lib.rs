//! Mean-field approximation of log-partition functions over product measures
//! with compact support, together with the machinery needed to check the
//! approximation at desk scale:
//!
//! * [`measures`] — site measures (finite support and truncated exponential on
//!   `(0,1)`), exponential tilting, KL divergence, and the one-dimensional
//!   mean/KL closed forms.
//! * [`functionals`] — the concrete functionals under study (linear and
//!   quadratic forms, weighted triangle counts, edge-colored homomorphism
//!   counts, vector spin Hamiltonians, smoothed tail cutoffs) with analytic
//!   gradients and derivative bounds.
//! * [`bounds`] — the two-sided error budget for the mean-field
//!   approximation, gradient-range covers, and the sandwich check.
//! * [`meanfield`] — naive mean-field fixed points and the variational rate
//!   solvers (per-edge color simplices, `(0,1)` edge weights, spin systems).
//! * [`validate`] — brute-force enumeration of small instances, Gauss–Legendre
//!   quadrature, Monte Carlo tail estimators with tilted importance sampling,
//!   and the end-to-end budget experiment.
//!
//! Core numeric kernels are generic over the scalar type through the
//! [`Scalar`] trait (any `num_traits::Float` with the usual operator
//! assignments); the solvers and validators run at `f64`, re-exported here as
//! [`Real`]. Type aliases at the crate root pin the common concrete types.

pub mod bounds;
pub mod error;
pub mod functionals;
pub mod meanfield;
pub mod measures;
pub mod scalar;
pub mod util;
pub mod validate;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Scalar type used by the solvers, validators, and CLI.
pub type Real = f64;

/// Site measure at solver precision.
pub type SiteMeasure = measures::SiteMeasure<Real>;
/// Product measure at solver precision.
pub type ProductMeasure = measures::ProductMeasure<Real>;
/// Linear tilt at solver precision.
pub type LinearTilt = measures::LinearTilt<Real>;
/// Functional at solver precision.
pub type Functional = functionals::Functional<Real>;
/// Derivative bounds at solver precision.
pub type FunctionalBounds = functionals::FunctionalBounds<Real>;
/// Block vector of per-site points at solver precision.
pub type SiteVec = functionals::SiteVec<Real>;
