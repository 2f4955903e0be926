//! Exterior-power curvature operators of submanifolds: the extrinsic Bochner
//! operator on p-forms, its sharp lower bound, pinching thresholds, integral
//! estimates and the homology conclusions they support.

pub mod bochner;
pub mod catalog;
pub mod cli;
pub mod error;
pub mod exterior;
pub mod integral;
mod linalg;
pub mod pinching;
pub mod verdict;

pub use bochner::SecondFundamentalForm;
pub use error::{Error, Result};
pub use exterior::{Endomorphism, MultiIndex, POperator};
