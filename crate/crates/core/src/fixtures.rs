//! Shipped test instances.

use nalgebra::DMatrix;

use crate::circle::{AnalyticField, CircleAction, CircleActionGroupoid};
use crate::groupoid::{FiniteGroup, FiniteGroupoid};
use crate::haar::HaarSystem;
use crate::io::{FieldDoc, GroupoidDoc, HaarDoc, RepDoc};
use crate::pseudo_rep::{FiberBundle, PseudoRep};

/// A groupoid with a pseudo-representation on it.
#[derive(Debug, Clone)]
pub struct Instance {
    pub groupoid: FiniteGroupoid,
    pub rep: PseudoRep,
}

pub fn z2() -> FiniteGroupoid {
    FiniteGroupoid::one_object_group(FiniteGroup::cyclic(2).table()).unwrap()
}

/// `Z2` on a line: `lambda(e) = 1`, `lambda(a) = tau`.
pub fn z2_scalar(tau: f64) -> Instance {
    let groupoid = z2();
    let rep = PseudoRep::new(
        &groupoid,
        &FiberBundle::constant(&groupoid, 1),
        vec![DMatrix::from_element(1, 1, 1.0), DMatrix::from_element(1, 1, tau)],
    )
    .unwrap();
    Instance { groupoid, rep }
}

/// The regular representation of `Z2` by permutation matrices.
pub fn z2_regular() -> Instance {
    let groupoid = z2();
    let swap = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
    let rep =
        PseudoRep::new(&groupoid, &FiberBundle::constant(&groupoid, 2), vec![DMatrix::identity(2, 2), swap]).unwrap();
    Instance { groupoid, rep }
}

/// `S3` acting on three points by permutation.
pub fn s3_action() -> FiniteGroupoid {
    let s3 = FiniteGroup::symmetric(3);
    FiniteGroupoid::action_groupoid(&s3, &s3.natural_action(3)).unwrap()
}

/// The two-dimensional irreducible representation of `S3`, obtained by
/// restricting the permutation action on `R^3` to the plane `x + y + z = 0`
/// in an orthonormal basis, pulled back to the translation groupoid.
pub fn s3_standard() -> Instance {
    let groupoid = s3_action();
    let s3 = FiniteGroup::symmetric(3);
    let perms = s3.natural_action(3);
    let r2 = std::f64::consts::SQRT_2;
    let r6 = 6f64.sqrt();
    let basis = DMatrix::from_row_slice(3, 2, &[1.0 / r2, 1.0 / r6, -1.0 / r2, 1.0 / r6, 0.0, -2.0 / r6]);
    let points = 3;
    let rep = PseudoRep::from_fn(&groupoid, &FiberBundle::constant(&groupoid, 2), |arrow| {
        let sigma = &perms[arrow / points];
        let p = DMatrix::from_fn(3, 3, |i, j| if sigma[j] == i { 1.0 } else { 0.0 });
        basis.transpose() * p * &basis
    })
    .unwrap();
    Instance { groupoid, rep }
}

pub fn s3_perturbed(amplitude: f64, seed: u64) -> Instance {
    let Instance { groupoid, rep } = s3_standard();
    let rep = PseudoRep::perturbed(&groupoid, &rep, amplitude, seed);
    Instance { groupoid, rep }
}

/// Gauge matrices for the pair-groupoid fixture.
fn pair_gauge() -> [DMatrix<f64>; 2] {
    [DMatrix::identity(2, 2), DMatrix::from_row_slice(2, 2, &[1.1, 0.2, 0.0, 0.95])]
}

/// `lambda(y <- x) = A_y A_x^-1` on the pair groupoid over two points, an
/// exact representation that is not orthogonal.
pub fn pair_gauge_rep() -> Instance {
    let groupoid = FiniteGroupoid::pair_groupoid(2);
    let gauge = pair_gauge();
    let inverses: Vec<DMatrix<f64>> = gauge.iter().map(|a| a.clone().try_inverse().unwrap()).collect();
    let rep = PseudoRep::from_fn(&groupoid, &FiberBundle::constant(&groupoid, 2), |arrow| {
        let (y, x) = (groupoid.tgt(arrow), groupoid.src(arrow));
        if x == y {
            DMatrix::identity(2, 2)
        } else {
            &gauge[y] * &inverses[x]
        }
    })
    .unwrap();
    Instance { groupoid, rep }
}

pub fn pair_perturbed(amplitude: f64, seed: u64) -> Instance {
    let Instance { groupoid, rep } = pair_gauge_rep();
    let rep = PseudoRep::perturbed(&groupoid, &rep, amplitude, seed);
    Instance { groupoid, rep }
}

/// `S3` on three points next to the pair groupoid on two points, rank 2 on
/// both orbits.
pub fn two_orbit(amplitude: f64, seed: u64) -> Instance {
    let a = s3_standard();
    let b = pair_gauge_rep();
    let groupoid = FiniteGroupoid::disjoint_union(&a.groupoid, &b.groupoid);
    let mats = a.rep.mats().iter().chain(b.rep.mats()).cloned().collect();
    let base = PseudoRep::new(&groupoid, &FiberBundle::constant(&groupoid, 2), mats).unwrap();
    let rep = PseudoRep::perturbed(&groupoid, &base, amplitude, seed);
    Instance { groupoid, rep }
}

/// `Z2` with the composition `a . a` redirected to `a`.
pub fn z2_corrupted() -> GroupoidDoc {
    let mut doc = GroupoidDoc::from(&z2());
    for t in &mut doc.comp {
        if t[0] == 1 && t[1] == 1 {
            t[2] = 1;
        }
    }
    doc
}

/// The degree-two circle field at `eps`, on radii `0.5, 1, 1.5`.
pub fn circle_degree_two(order: usize, eps: f64) -> FieldDoc {
    let groupoid = CircleActionGroupoid::new(order, vec![0.5, 1.0, 1.5], CircleAction::Rotation).unwrap();
    FieldDoc::Analytic { groupoid, terms: AnalyticField::degree_two(eps).terms }
}

/// Named JSON documents shipped under `fixtures/`.
pub fn shipped() -> Vec<(&'static str, serde_json::Value)> {
    fn v<T: serde::Serialize>(doc: T) -> serde_json::Value {
        serde_json::to_value(doc).unwrap()
    }
    let pair = pair_perturbed(1e-2, 1);
    let s3 = s3_perturbed(1e-2, 1);
    let haar = |w: [f64; 2]| v(HaarDoc::from(&HaarSystem::from_weights(&pair.groupoid, w.to_vec()).unwrap()));
    vec![
        ("z2.groupoid.json", v(GroupoidDoc::from(&z2()))),
        ("z2_tau1.5.rep.json", v(RepDoc::from(&z2_scalar(1.5).rep))),
        ("z2_tau1.1.rep.json", v(RepDoc::from(&z2_scalar(1.1).rep))),
        ("z2_corrupted.groupoid.json", v(z2_corrupted())),
        ("pair.groupoid.json", v(GroupoidDoc::from(&pair.groupoid))),
        ("pair.rep.json", v(RepDoc::from(&pair.rep))),
        ("pair_haar_0.3.json", haar([0.3, 0.7])),
        ("pair_haar_0.5.json", haar([0.5, 0.5])),
        ("pair_haar_0.9.json", haar([0.9, 0.1])),
        ("s3.groupoid.json", v(GroupoidDoc::from(&s3.groupoid))),
        ("s3_standard.rep.json", v(RepDoc::from(&s3_standard().rep))),
        ("s3_perturbed.rep.json", v(RepDoc::from(&s3.rep))),
        ("circle_degree_two.field.json", v(circle_degree_two(64, 1e-2))),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_fixtures_are_representations() {
        for inst in [z2_regular(), s3_standard(), pair_gauge_rep(), two_orbit(0.0, 0)] {
            assert!(inst.groupoid.validate().is_empty());
            let check = inst.rep.is_representation(&inst.groupoid, 1e-14);
            assert!(check.holds, "{check:?}");
        }
    }

    #[test]
    fn s3_standard_is_orthogonal() {
        let inst = s3_standard();
        for m in inst.rep.mats() {
            let d = m.transpose() * m - DMatrix::identity(2, 2);
            assert!(d.amax() < 1e-15);
        }
    }

    #[test]
    fn shipped_files_match_the_code() {
        let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
        for (name, doc) in shipped() {
            let text = std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
            let on_disk: serde_json::Value = serde_json::from_str(&text).unwrap();
            assert_eq!(on_disk, doc, "{name} is stale; rerun the write_fixtures example");
        }
    }

    #[test]
    fn corrupted_table_breaks_a_law() {
        let g = z2_corrupted().build().unwrap();
        assert!(!g.validate().is_empty());
    }
}
