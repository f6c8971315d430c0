//! Verification laboratory for flag kernels of arbitrary order on graded
//! homogeneous groups.
//!
//! The crate is layered bottom-up:
//!
//! * [`graded`]: dilations, homogeneous and partial norms, multiindices.
//! * [`calculus`]: exact order arithmetic for the classes `F`, `F0` and `S`.
//! * [`kernels`]: analytic kernels, mollified truncations, test functions and pairings.
//! * [`spectral`]: sampled fields, continuous-convention transforms, exponent fits.
//! * [`groupconv`]: Campbell-Hausdorff group laws, group convolution, regularized composition.
//! * [`verify`]: checks producing structured reports.
//! * [`cli`]: configuration, report emission and the command-line front end.

pub mod calculus;
pub mod classcalc;
pub mod cli;
pub mod error;
pub mod graded;
pub mod groupconv;
pub mod jet;
pub mod kernels;
pub mod quadrature;
pub mod special;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
pub use graded::{GradedLayout, MultiIndex, NormVariant, OrderVector, Rational};
