//! Group laws from structure constants, convolution on graded groups and
//! regularized composition of truncated kernels.

pub mod algebra;
pub mod bch;
pub mod central;
pub mod composition;
pub mod convolve;
pub mod operator;
pub mod poly;

pub use algebra::NilpotentAlgebra;
pub use bch::GroupLaw;
pub use central::{central_composition, CentralOptions, CentralResult};
pub use composition::{regularized_composition, CompositionOptions, CompositionResult};
pub use convolve::{group_convolve, group_convolve_at, group_convolve_direct};
pub use operator::{operator_apply, operator_apply_field, reflect};
