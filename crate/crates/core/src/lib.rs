#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

pub mod coeff;
pub mod eigen;
pub mod expr;
pub mod front;
pub mod radial;
pub mod semiwave;
pub mod thresholds;
