//! The extremal scalar recursion
//!
//! ```text
//! b_{i+1} = b_i / (1 - c_i)
//! c_{i+1} = 2 c_i^2 [b_i / (1 - c_i)]^2
//! ```
//!
//! and the two bounds it is claimed to satisfy when `b0 >= 1` and
//! `eps = 6 b0^2 c0 <= 2/3`.

use serde::{Deserialize, Serialize};

use super::{envelope_bound, AveragingError};

/// Relative allowance for comparisons that hold with equality in exact
/// arithmetic (for instance `c0 = 1/9`, `b0 = 1` at index 0).
const ULP_ALLOWANCE: f64 = 4.0 * f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaRow {
    pub i: usize,
    pub b: f64,
    pub c: f64,
    /// `eps^(2^i) / (6 b0^2)`.
    pub bound: f64,
    pub sqrt3_b0: f64,
    /// `b_i / (1 - c_i)`.
    pub ratio: f64,
    pub c_ok: bool,
    pub b_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaTable {
    pub b0: f64,
    pub c0: f64,
    pub eps: f64,
    pub rows: Vec<LemmaRow>,
}

impl LemmaTable {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.c_ok && r.b_ok)
    }

    pub fn first_failure(&self) -> Option<&LemmaRow> {
        self.rows.iter().find(|r| !(r.c_ok && r.b_ok))
    }
}

fn at_most(a: f64, b: f64) -> bool {
    a <= b + ULP_ALLOWANCE * b.abs()
}

/// Rows `i = 0..=l` of the extremal sequences with both bound checks.
pub fn lemma_recursion(b0: f64, c0: f64, l: usize) -> Result<LemmaTable, AveragingError> {
    if !(b0 >= 1.0) || !b0.is_finite() {
        return Err(AveragingError::Hypothesis(format!("b0 = {b0} is below 1")));
    }
    if !(c0 >= 0.0) {
        return Err(AveragingError::Hypothesis(format!("c0 = {c0} is negative")));
    }
    let eps = 6.0 * b0 * b0 * c0;
    if !at_most(eps, 2.0 / 3.0) {
        return Err(AveragingError::Hypothesis(format!("eps = 6 b0^2 c0 = {eps} exceeds 2/3")));
    }
    let sqrt3_b0 = 3f64.sqrt() * b0;
    let (mut b, mut c) = (b0, c0);
    let mut rows = Vec::with_capacity(l + 1);
    for i in 0..=l {
        let ratio = b / (1.0 - c);
        let bound = envelope_bound(b0, c0, i);
        rows.push(LemmaRow {
            i,
            b,
            c,
            bound,
            sqrt3_b0,
            ratio,
            c_ok: at_most(c, bound),
            b_ok: at_most(ratio, sqrt3_b0),
        });
        c = 2.0 * c * c * ratio * ratio;
        b = ratio;
    }
    Ok(LemmaTable { b0, c0, eps, rows })
}
