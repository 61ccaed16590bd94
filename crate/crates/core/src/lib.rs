//! Haar averaging of pseudo-representations on finite groupoids and of
//! connections on the rotation groupoid of the plane.

// `!(x > floor)` is used on purpose so that NaN lands on the refusing side.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Structure tables read more clearly with explicit indices.
#![allow(clippy::needless_range_loop)]

pub mod averaging;
pub mod circle;
pub mod experiment;
pub mod fixtures;
pub mod groupoid;
pub mod haar;
pub mod io;
pub mod linalg;
pub mod pseudo_rep;
pub mod report;
