//! Theta functions with characteristics, second-order theta functions and the
//! two symmetric correction matrices that separate the theta-function
//! bidifferential from the Hodge-theoretic one on a marked curve.
//!
//! Everything is a function of a period matrix `tau` in the Siegel upper
//! half-space ([`siegel::PeriodMatrix`]).

// Negated comparisons below are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod siegel;
pub mod theta;
pub mod sot;
pub mod bidiff;
pub mod locus;
pub mod fay;

pub use error::{Error, Result};
pub use siegel::{Characteristic, ImInverse, Parity, PeriodMatrix};
pub use theta::{Precision, ThetaJet, TruncationPlan};
