//! Near-representation certificates, checked orbit by orbit.
//!
//! An orbit passes when `c <= b^-2 / 9` for the restricted pseudo-rep under
//! some fiber metric. The metric search is limited to per-object scalar
//! rescalings `phi_x = s_x^2 I` drawn from a logarithmic grid. Under such a
//! metric the norm of `A: E_x -> E_y` is `(s_y / s_x) |A|`, so the search
//! only rescales precomputed identity-metric norms.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::groupoid::{FiniteGroupoid, InvariantSubset, ObjectId};
use crate::linalg;
use crate::pseudo_rep::PseudoRep;

/// Default number of scale vectors tried per orbit.
pub const DEFAULT_SEARCH_BUDGET: usize = 10_000;

/// Unitality tolerance required before certifying.
const UNITAL_TOL: f64 = 1e-12;

/// Scale grid `4^{(j - 4) / 4}`, `j = 0..=8`; contains 1.
const GRID: [f64; 9] = [0.25, FRAC_1_SQRT_2 / 2.0, 0.5, FRAC_1_SQRT_2, 1.0, SQRT_2, 2.0, 2.0 * SQRT_2, 4.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitCertificate {
    pub orbit: usize,
    pub objects: Vec<ObjectId>,
    pub b: f64,
    pub c: f64,
    pub threshold: f64,
    pub pass: bool,
    /// Scale `s_x` per object of the orbit; all ones is the identity metric.
    pub scales: Vec<f64>,
    pub identity_b: f64,
    pub identity_c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearRepCertificate {
    pub unital: bool,
    pub orbits: Vec<OrbitCertificate>,
    pub pass: bool,
}

/// Pairs of local (source, target) indices with their identity-metric norm.
struct NormTable {
    arrows: Vec<(usize, usize, f64)>,
    defects: Vec<(usize, usize, f64)>,
}

impl NormTable {
    fn b(&self, s: &[f64]) -> f64 {
        self.arrows.iter().map(|&(x, y, n)| n * s[y] / s[x]).fold(0.0, f64::max)
    }

    fn c(&self, s: &[f64]) -> f64 {
        self.defects.iter().map(|&(x, y, n)| n * s[y] / s[x]).fold(0.0, f64::max)
    }

    fn score(&self, s: &[f64]) -> f64 {
        let b = self.b(s);
        self.c(s) * b * b
    }
}

pub fn certify_near_rep(groupoid: &FiniteGroupoid, rep: &PseudoRep, budget: usize) -> NearRepCertificate {
    let unital = rep.is_unital(groupoid, UNITAL_TOL);
    let orbits = groupoid.orbits();
    let records: Vec<OrbitCertificate> = orbits
        .orbits
        .iter()
        .enumerate()
        .map(|(index, objects)| {
            let subset = InvariantSubset::new(groupoid, objects.iter().copied()).expect("orbits are invariant");
            let r = groupoid.full_restriction(&subset);
            let local = rep.restrict(&r);
            certify_orbit(index, objects.clone(), &r.groupoid, &local, budget.max(1))
        })
        .collect();
    let pass = unital && records.iter().all(|o| o.pass);
    NearRepCertificate { unital, orbits: records, pass }
}

fn certify_orbit(
    index: usize,
    objects: Vec<ObjectId>,
    groupoid: &FiniteGroupoid,
    rep: &PseudoRep,
    budget: usize,
) -> OrbitCertificate {
    let table = NormTable {
        arrows: groupoid.arrows().map(|g| (groupoid.src(g), groupoid.tgt(g), linalg::op_norm(rep.mat(g)))).collect(),
        defects: groupoid
            .composable_pairs()
            .map(|(later, earlier, comp)| {
                let d = rep.mat(comp) - rep.mat(later) * rep.mat(earlier);
                (groupoid.src(earlier), groupoid.tgt(later), linalg::op_norm(&d))
            })
            .collect(),
    };
    let n = groupoid.num_objects();
    let ones = vec![1.0; n];
    let identity_b = table.b(&ones);
    let identity_c = table.c(&ones);
    let scales = search(&table, n, budget);
    let b = table.b(&scales);
    let c = table.c(&scales);
    let threshold = 1.0 / (9.0 * b * b);
    OrbitCertificate { orbit: index, objects, b, c, threshold, pass: c <= threshold, scales, identity_b, identity_c }
}

/// Minimizes `c b^2` over scale vectors with the first scale pinned to 1.
/// Exhaustive when the grid fits in the budget, coordinate sweeps otherwise.
fn search(table: &NormTable, n: usize, budget: usize) -> Vec<f64> {
    let mut best = vec![1.0; n];
    let mut best_score = table.score(&best);
    if n <= 1 {
        return best;
    }
    let free = n - 1;
    let full = GRID.len().checked_pow(free as u32).filter(|&total| total <= budget);
    if let Some(total) = full {
        let mut s = vec![1.0; n];
        for code in 0..total {
            let mut rest = code;
            for slot in s.iter_mut().skip(1) {
                *slot = GRID[rest % GRID.len()];
                rest /= GRID.len();
            }
            let score = table.score(&s);
            if score < best_score {
                best_score = score;
                best.copy_from_slice(&s);
            }
        }
        return best;
    }
    let mut spent = 1;
    loop {
        let mut improved = false;
        for x in 1..n {
            for &v in &GRID {
                if spent >= budget {
                    return best;
                }
                let mut s = best.clone();
                s[x] = v;
                spent += 1;
                let score = table.score(&s);
                if score < best_score {
                    best_score = score;
                    best = s;
                    improved = true;
                }
            }
        }
        if !improved {
            return best;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn grid_is_logarithmic() {
        for (j, &v) in GRID.iter().enumerate() {
            assert!((v - 4f64.powf((j as f64 - 4.0) / 4.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn exact_representation_passes() {
        let inst = fixtures::s3_standard();
        let cert = certify_near_rep(&inst.groupoid, &inst.rep, DEFAULT_SEARCH_BUDGET);
        assert!(cert.pass);
        assert!(cert.orbits.iter().all(|o| o.c <= 1e-15));
    }

    #[test]
    fn scalar_z2_examples() {
        let inst = fixtures::z2_scalar(1.01);
        let cert = certify_near_rep(&inst.groupoid, &inst.rep, DEFAULT_SEARCH_BUDGET);
        let o = &cert.orbits[0];
        assert!((o.b - 1.01).abs() < 1e-15);
        assert!((o.c - 0.0201).abs() < 1e-15);
        assert!((o.threshold - 1.0 / (9.0 * 1.01 * 1.01)).abs() < 1e-15);
        assert!((o.threshold - 0.1089).abs() < 1e-4);
        assert!(cert.pass);

        let inst = fixtures::z2_scalar(2.0);
        let cert = certify_near_rep(&inst.groupoid, &inst.rep, DEFAULT_SEARCH_BUDGET);
        assert!((cert.orbits[0].c - 3.0).abs() < 1e-15);
        assert!(!cert.pass);
    }

    #[test]
    fn scaling_search_helps_a_gauged_rep() {
        // gauged away from orthogonal, so b > 1 under the identity metric
        let inst = fixtures::pair_perturbed(0.01, 1);
        let cert = certify_near_rep(&inst.groupoid, &inst.rep, DEFAULT_SEARCH_BUDGET);
        let o = &cert.orbits[0];
        assert!(o.identity_b > 1.0);
        assert!(o.c * o.b * o.b <= o.identity_c * o.identity_b * o.identity_b);
        assert_eq!(o.pass, o.c <= o.threshold);
    }

    #[test]
    fn coordinate_search_respects_budget() {
        let inst = fixtures::two_orbit(0.01, 2);
        let wide = certify_near_rep(&inst.groupoid, &inst.rep, DEFAULT_SEARCH_BUDGET);
        let narrow = certify_near_rep(&inst.groupoid, &inst.rep, 5);
        for (w, n) in wide.orbits.iter().zip(&narrow.orbits) {
            assert!(w.c * w.b * w.b <= n.c * n.b * n.b);
            assert!(n.c * n.b * n.b <= n.identity_c * n.identity_b * n.identity_b);
        }
    }

    #[test]
    fn non_unital_input_fails() {
        let mut inst = fixtures::z2_scalar(1.0);
        inst.rep = crate::pseudo_rep::PseudoRep::new(
            &inst.groupoid,
            &inst.rep.bundle(),
            vec![nalgebra::DMatrix::from_element(1, 1, 1.5), nalgebra::DMatrix::from_element(1, 1, 1.0)],
        )
        .unwrap();
        let cert = certify_near_rep(&inst.groupoid, &inst.rep, 10);
        assert!(!cert.unital);
        assert!(!cert.pass);
    }
}
