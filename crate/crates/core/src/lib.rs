//! Carnot group arithmetic, porosity profiling and non-differentiability
//! constructions on the Heisenberg group and other step-two-and-up groups
//! given by polynomial group laws.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cantor;
pub mod cc;
pub mod error;
pub mod gradient;
pub mod group;
pub mod metric;
pub mod nondiff;
pub mod porosity;
pub mod report;
pub mod sets;
pub mod whitney;

pub use cc::{cc_estimate, CcEstimate, CcSettings};
pub use error::{Error, Result};
pub use group::{GPoint, GroupLinearMap, GroupSpec, Monomial};
pub use metric::{koranyi_lower_bound, koranyi_norm, Metric};
