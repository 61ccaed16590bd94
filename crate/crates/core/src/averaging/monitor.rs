//! One-step estimates for the averaged pseudo-representation:
//!
//! ```text
//! |avg(lambda)(g)|                                    <= b / (1 - c)
//! |avg(lambda)(g'g) - avg(lambda)(g') avg(lambda)(g)| <= 2 c^2 b^2 / (1 - c)^2
//! ```
//!
//! Once `c` is near `1e-8` the right side of the second estimate drops
//! under the rounding error of any `f64` evaluation of the left side. The
//! averaged matrices are therefore recomputed in double-double arithmetic
//! (Newton-refined inverses, compensated fiber sums) and the defect is
//! taken from those before rounding back to `f64`. Fiber weights are
//! renormalized to sum to one in the same precision, since `f64` weights
//! such as `1/6` only sum to one within an ulp.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use super::{invert_all, AveragingError};
use crate::groupoid::FiniteGroupoid;
use crate::haar::HaarSystem;
use crate::pseudo_rep::{FiberMetric, PseudoRep};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateCheck {
    pub b: f64,
    pub c: f64,
    pub norm: f64,
    pub norm_bound: f64,
    /// `norm_bound - norm`.
    pub norm_slack: f64,
    /// Defect of the averaged pseudo-rep, evaluated in extended precision.
    pub defect: f64,
    /// The same defect evaluated on the plain `f64` average.
    pub defect_f64: f64,
    pub defect_bound: f64,
    pub defect_slack: f64,
    pub pass: bool,
}

/// Row-major double-double matrix.
#[derive(Debug, Clone)]
struct DdMatrix {
    rows: usize,
    cols: usize,
    data: Vec<TwoFloat>,
}

impl DdMatrix {
    fn zeros(rows: usize, cols: usize) -> Self {
        DdMatrix { rows, cols, data: vec![TwoFloat::from(0.0); rows * cols] }
    }

    fn from_f64(m: &DMatrix<f64>) -> Self {
        let mut out = DdMatrix::zeros(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out.data[i * m.ncols() + j] = TwoFloat::from(m[(i, j)]);
            }
        }
        out
    }

    fn at(&self, i: usize, j: usize) -> TwoFloat {
        self.data[i * self.cols + j]
    }

    fn mul(&self, other: &DdMatrix) -> DdMatrix {
        let mut out = DdMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = TwoFloat::from(0.0);
                for k in 0..self.cols {
                    acc += self.at(i, k) * other.at(k, j);
                }
                out.data[i * other.cols + j] = acc;
            }
        }
        out
    }

    fn sub(&self, other: &DdMatrix) -> DdMatrix {
        let data = self.data.iter().zip(&other.data).map(|(a, b)| *a - *b).collect();
        DdMatrix { rows: self.rows, cols: self.cols, data }
    }

    fn round(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.at(i, j).hi())
    }
}

/// One Newton step `X + X (I - A X)` from an `f64` inverse.
fn refined_inverse(a: &DMatrix<f64>, x0: &DMatrix<f64>) -> DdMatrix {
    let a = DdMatrix::from_f64(a);
    let x = DdMatrix::from_f64(x0);
    let mut residual = a.mul(&x);
    for v in residual.data.iter_mut() {
        *v = -*v;
    }
    for i in 0..residual.rows {
        residual.data[i * residual.cols + i] += 1.0;
    }
    let mut out = x.mul(&residual);
    for (a, b) in out.data.iter_mut().zip(&x.data) {
        *a += *b;
    }
    out
}

/// `a / s` to double-double accuracy. The crate's own division by a
/// double-double skips the fused residual and stops at `f64` accuracy.
fn dd_div(a: f64, s: TwoFloat) -> TwoFloat {
    let q0 = a / s.hi();
    let r = TwoFloat::from(a) - s * q0;
    TwoFloat::new_add(q0, r.hi() / s.hi())
}

fn average_dd(groupoid: &FiniteGroupoid, haar: &HaarSystem, rep: &PseudoRep) -> Result<Vec<DdMatrix>, AveragingError> {
    let inverses: Vec<DdMatrix> =
        invert_all(rep)?.iter().zip(rep.mats()).map(|(x0, a)| refined_inverse(a, x0)).collect();
    let mats: Vec<DdMatrix> = rep.mats().iter().map(DdMatrix::from_f64).collect();
    groupoid
        .arrows()
        .map(|g| {
            let x = groupoid.src(g);
            let fiber = groupoid.target_fiber(x).unwrap();
            let total = fiber.iter().fold(TwoFloat::from(0.0), |acc, &k| acc + haar.arrow_weight(groupoid, k));
            let mut acc = DdMatrix::zeros(rep.ranks()[groupoid.tgt(g)], rep.ranks()[x]);
            for &k in fiber {
                let gk = groupoid.compose(g, k).ok_or(AveragingError::FiberMismatch { g, k })?;
                let w = dd_div(haar.arrow_weight(groupoid, k), total);
                let term = mats[gk].mul(&inverses[k]);
                for (a, t) in acc.data.iter_mut().zip(&term.data) {
                    *a += *t * w;
                }
            }
            Ok(acc)
        })
        .collect()
}

/// Checks both estimates for one averaging step of `rep`, with `avg` the
/// `f64` average as produced by the iteration.
pub fn monitor_estimates(
    groupoid: &FiniteGroupoid,
    haar: &HaarSystem,
    rep: &PseudoRep,
    avg: &PseudoRep,
    metric: &FiberMetric,
) -> Result<EstimateCheck, AveragingError> {
    let b = rep.defect_b(groupoid, metric)?.value;
    let c = rep.defect_c(groupoid, metric)?.value;
    if !(c < 1.0) {
        return Err(AveragingError::DefectTooLarge(c));
    }
    let norm = avg.defect_b(groupoid, metric)?.value;
    let defect_f64 = avg.defect_c(groupoid, metric)?.value;
    let precise = average_dd(groupoid, haar, rep)?;
    let defect = groupoid
        .composable_pairs()
        .map(|(later, earlier, comp)| {
            let d = precise[comp].sub(&precise[later].mul(&precise[earlier])).round();
            metric.norm(&d, groupoid.src(earlier), groupoid.tgt(later))
        })
        .fold(0.0, |acc: f64, v| if v.is_nan() || acc.is_nan() { f64::NAN } else { acc.max(v) });
    let norm_bound = b / (1.0 - c);
    let q = c * b / (1.0 - c);
    let defect_bound = 2.0 * q * q;
    let norm_slack = norm_bound - norm;
    let defect_slack = defect_bound - defect;
    Ok(EstimateCheck {
        b,
        c,
        norm,
        norm_bound,
        norm_slack,
        defect,
        defect_f64,
        defect_bound,
        defect_slack,
        pass: norm_slack >= 0.0 && defect_slack >= 0.0,
    })
}
