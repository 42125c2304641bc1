//! Variability indexes, associated-kernel density estimation and
//! semiparametric diagnostics for data on the nonnegative orthant.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod bandwidth;
pub mod data;
pub mod diagnostics;
pub mod error;
pub mod estimators;
pub mod indexes;
pub mod kernels;
mod par;
pub mod parametric;
pub mod quadrature;
pub mod special;

pub use data::{empirical_moments, load_csv, read_csv, waterpumps, Dataset, Divisor, MomentSummary, SupportKind};
pub use error::{Error, Result};
pub use bandwidth::{adaptive_bayes_gamma_closed, default_prior, PriorSpec};
pub use diagnostics::{diagnose, select_bandwidths, Decision, DiagnosticReport, Selector, StartChoice};
pub use estimators::{BandwidthAssignment, DensityEstimate};
pub use kernels::{product_density, KernelFamily, KernelMoments};
pub use parametric::StartModel;
pub use quadrature::QuadratureSpec;
pub use par::is_parallel;
