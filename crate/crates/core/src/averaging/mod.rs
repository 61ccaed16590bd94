//! The Haar averaging operator on pseudo-representations,
//!
//! ```text
//! avg(lambda)(g) = sum_{k in fiber(src g)} nu(k) lambda(g k) lambda(k)^-1
//! ```
//!
//! together with near-representation certificates, the iteration driver,
//! the scalar recursion that bounds it, and the one-step estimate monitor.

mod certify;
mod iterate;
mod lemma;
mod monitor;
mod segment;

use nalgebra::DMatrix;
use rayon::prelude::*;
use thiserror::Error;

use crate::groupoid::{ArrowId, FiniteGroupoid};
use crate::haar::HaarSystem;
use crate::linalg::{self, LinalgError};
use crate::pseudo_rep::{PseudoRep, RepError};

pub use certify::{certify_near_rep, NearRepCertificate, OrbitCertificate, DEFAULT_SEARCH_BUDGET};
pub use iterate::{envelope_bound, iterate, ConvergenceTrace, IterationOptions, IterationOutcome, TraceRow};
pub use lemma::{lemma_recursion, LemmaRow, LemmaTable};
pub use monitor::{monitor_estimates, EstimateCheck};
pub use segment::{segment_scan, SegmentPoint};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AveragingError {
    #[error("matrix of arrow {arrow} cannot be inverted: {source}")]
    NotInvertible {
        arrow: ArrowId,
        #[source]
        source: LinalgError,
    },
    #[error("fiber enumeration mismatch: {g} . {k} is undefined")]
    FiberMismatch { g: ArrowId, k: ArrowId },
    #[error(transparent)]
    Rep(#[from] RepError),
    #[error("near-representation certificate failed: {0}")]
    NotNearRepresentation(String),
    #[error("iteration diverged at step {iteration}: c = {c:e}")]
    Diverged { iteration: usize, c: f64 },
    #[error("interpolant at t = {t} is singular at arrow {arrow}")]
    SingularInterpolant { t: f64, arrow: ArrowId },
    #[error("recursion hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("estimates need c < 1, got c = {0:e}")]
    DefectTooLarge(f64),
}

/// Inverse of every matrix, or the first arrow that refuses inversion.
pub(crate) fn invert_all(rep: &PseudoRep) -> Result<Vec<DMatrix<f64>>, AveragingError> {
    rep.mats()
        .par_iter()
        .enumerate()
        .map(|(arrow, m)| linalg::checked_inverse(m).map_err(|source| AveragingError::NotInvertible { arrow, source }))
        .collect()
}

/// One application of the averaging operator. Each output matrix is an
/// independent fiber sum in ascending arrow order.
pub fn average(groupoid: &FiniteGroupoid, haar: &HaarSystem, rep: &PseudoRep) -> Result<PseudoRep, AveragingError> {
    let inverses = invert_all(rep)?;
    let ranks = rep.ranks();
    let mats = groupoid
        .arrows()
        .into_par_iter()
        .map(|g| {
            let x = groupoid.src(g);
            for &k in groupoid.target_fiber(x).unwrap() {
                if groupoid.compose(g, k).is_none() {
                    return Err(AveragingError::FiberMismatch { g, k });
                }
            }
            let shape = (ranks[groupoid.tgt(g)], ranks[x]);
            Ok(haar.integrate_fiber_with(groupoid, x, shape, |k| {
                let gk = groupoid.compose(g, k).unwrap();
                rep.mat(gk) * &inverses[k]
            }))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PseudoRep::from_parts(ranks.to_vec(), mats))
}
