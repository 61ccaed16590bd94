use serde::{Deserialize, Serialize};

use super::{average, AveragingError};
use crate::groupoid::FiniteGroupoid;
use crate::haar::HaarSystem;
use crate::linalg::{self, SINGULAR_FLOOR};
use crate::pseudo_rep::{FiberMetric, PseudoRep};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentPoint {
    pub t: f64,
    pub c: f64,
    /// Smallest singular value over all arrows of the interpolant.
    pub min_singular: f64,
}

/// Defect of `(1 - t) lambda + t avg(lambda)` at `t = j / steps`,
/// `j = 0..=steps`, identity metrics.
pub fn segment_scan(
    groupoid: &FiniteGroupoid,
    haar: &HaarSystem,
    rep: &PseudoRep,
    steps: usize,
) -> Result<Vec<SegmentPoint>, AveragingError> {
    let avg = average(groupoid, haar, rep)?;
    let metric = FiberMetric::identity(&rep.bundle());
    let steps = steps.max(1);
    (0..=steps)
        .map(|j| {
            let t = j as f64 / steps as f64;
            let lt = rep.interpolate(&avg, t);
            let mut min_singular = f64::INFINITY;
            for (arrow, m) in lt.mats().iter().enumerate() {
                let s = linalg::min_singular(m);
                if !(s > SINGULAR_FLOOR) {
                    return Err(AveragingError::SingularInterpolant { t, arrow });
                }
                min_singular = min_singular.min(s);
            }
            let c = lt.defect_c(groupoid, &metric)?.value;
            Ok(SegmentPoint { t, c, min_singular })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn representation_has_zero_defect_throughout() {
        let inst = fixtures::s3_standard();
        let haar = HaarSystem::uniform(&inst.groupoid);
        let pts = segment_scan(&inst.groupoid, &haar, &inst.rep, 8).unwrap();
        assert_eq!(pts.len(), 9);
        assert!(pts.iter().all(|p| p.c <= 1e-14));
    }

    #[test]
    fn scalar_segment_is_monotone() {
        let inst = fixtures::z2_scalar(1.5);
        let haar = HaarSystem::uniform(&inst.groupoid);
        let pts = segment_scan(&inst.groupoid, &haar, &inst.rep, 20).unwrap();
        for p in &pts {
            let tau = (1.0 - p.t) * 1.5 + p.t * 13.0 / 12.0;
            assert!((p.c - (1.0 - tau * tau).abs()).abs() < 1e-14);
        }
        assert!(pts.windows(2).all(|w| w[1].c < w[0].c));
    }

    #[test]
    fn singular_interpolant_is_reported() {
        // a quarter turn on Z2 averages to (J + J^-1)/2 = 0
        let groupoid = fixtures::z2();
        let quarter = nalgebra::DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let rep = PseudoRep::new(
            &groupoid,
            &crate::pseudo_rep::FiberBundle::constant(&groupoid, 2),
            vec![nalgebra::DMatrix::identity(2, 2), quarter],
        )
        .unwrap();
        let haar = HaarSystem::uniform(&groupoid);
        let err = segment_scan(&groupoid, &haar, &rep, 4).unwrap_err();
        assert_eq!(err, AveragingError::SingularInterpolant { t: 1.0, arrow: 1 });

        let inst = fixtures::z2_scalar(0.0);
        assert!(matches!(
            segment_scan(&inst.groupoid, &haar, &inst.rep, 4),
            Err(AveragingError::NotInvertible { arrow: 1, .. })
        ));
    }
}
