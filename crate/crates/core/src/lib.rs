//! Perturbed primal-dual interior point method for linear programs in
//! standard form, with early prediction of the optimal active set, the
//! perturbation-theory calculators behind it, and a crossover to a revised
//! simplex method.

// `!(x > 0.0)` guards reject NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod activity;
pub mod crossover;
pub mod error;
pub mod experiments;
pub mod generate;
pub mod ipm;
pub mod linalg;
pub mod lp;
pub mod mps;
pub mod oracle;
pub mod theory;

pub use error::{Error, Result};
pub use lp::{ensure_full_rank, ActiveSetLabel, LabelSource, StandardLP};
pub use mps::load_mps;
pub use oracle::{actual_active_set, Oracle};
