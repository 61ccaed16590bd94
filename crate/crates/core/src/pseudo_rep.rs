//! Matrix pseudo-representations of finite groupoids and their defects.
//!
//! A pseudo-representation assigns to every arrow `g` a linear map
//! `E_{src g} -> E_{tgt g}` with no composition law imposed. Two defects
//! measure how far it is from a representation:
//!
//! * `b = max_g |lambda(g)|`
//! * `c = max_{(g', g) composable} |lambda(g' g) - lambda(g') lambda(g)|`
//!
//! where `|.|` is the operator norm between the fiber metrics at the source
//! and target.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::groupoid::{ArrowId, FiniteGroupoid, ObjectId, Restriction};
use crate::linalg::{self, SINGULAR_FLOOR};

/// Smallest eigenvalue accepted for a fiber metric.
pub const METRIC_EIGEN_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RepError {
    #[error("expected {expected} entries, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("rank is not constant on the orbit of object {object}: {a} vs {b}")]
    RankNotOrbitConstant { object: ObjectId, a: usize, b: usize },
    #[error("matrix of arrow {arrow} is {got:?}, expected {expected:?}")]
    Shape { arrow: ArrowId, expected: (usize, usize), got: (usize, usize) },
    #[error("metric at object {object} is {got}x{got}, expected rank {expected}")]
    MetricShape { object: ObjectId, expected: usize, got: usize },
    #[error("metric at object {object} is not symmetric positive-definite: {detail}")]
    MetricNotSpd { object: ObjectId, detail: String },
}

/// Fiber dimension per object; constant along orbits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiberBundle {
    ranks: Vec<usize>,
}

impl FiberBundle {
    pub fn new(groupoid: &FiniteGroupoid, ranks: Vec<usize>) -> Result<Self, RepError> {
        if ranks.len() != groupoid.num_objects() {
            return Err(RepError::WrongLength { expected: groupoid.num_objects(), got: ranks.len() });
        }
        for g in groupoid.arrows() {
            let (s, t) = (groupoid.src(g), groupoid.tgt(g));
            if ranks[s] != ranks[t] {
                return Err(RepError::RankNotOrbitConstant { object: s, a: ranks[s], b: ranks[t] });
            }
        }
        Ok(FiberBundle { ranks })
    }

    pub fn constant(groupoid: &FiniteGroupoid, rank: usize) -> Self {
        FiberBundle { ranks: vec![rank; groupoid.num_objects()] }
    }

    pub fn rank(&self, x: ObjectId) -> usize {
        self.ranks[x]
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }
}

/// A symmetric positive-definite inner product on every fiber.
#[derive(Debug, Clone)]
pub struct FiberMetric {
    mats: Vec<DMatrix<f64>>,
    // (sqrt, inverse sqrt); None for the identity metric
    roots: Option<Vec<(DMatrix<f64>, DMatrix<f64>)>>,
}

impl FiberMetric {
    pub fn identity(bundle: &FiberBundle) -> Self {
        let mats = bundle.ranks.iter().map(|&r| DMatrix::identity(r, r)).collect();
        FiberMetric { mats, roots: None }
    }

    pub fn new(bundle: &FiberBundle, mats: Vec<DMatrix<f64>>) -> Result<Self, RepError> {
        if mats.len() != bundle.ranks.len() {
            return Err(RepError::WrongLength { expected: bundle.ranks.len(), got: mats.len() });
        }
        for (x, m) in mats.iter().enumerate() {
            let r = bundle.rank(x);
            if m.nrows() != r || m.ncols() != r {
                return Err(RepError::MetricShape { object: x, expected: r, got: m.nrows() });
            }
            let asym = linalg::max_abs_diff(m, &m.transpose());
            if asym > 1e-12 * m.amax().max(1.0) {
                return Err(RepError::MetricNotSpd { object: x, detail: format!("asymmetry {asym:e}") });
            }
            if r > 0 {
                let lmin = m.clone().symmetric_eigen().eigenvalues.min();
                if !(lmin > METRIC_EIGEN_FLOOR) {
                    return Err(RepError::MetricNotSpd { object: x, detail: format!("smallest eigenvalue {lmin:e}") });
                }
            }
        }
        let roots = mats.iter().map(linalg::spd_sqrt_pair).collect();
        Ok(FiberMetric { mats, roots: Some(roots) })
    }

    /// `phi_x = s_x^2 I`, so that `|v|_x = s_x |v|`.
    pub fn scalar(bundle: &FiberBundle, scales: &[f64]) -> Result<Self, RepError> {
        let mats = bundle.ranks.iter().zip(scales).map(|(&r, &s)| DMatrix::identity(r, r) * (s * s)).collect();
        Self::new(bundle, mats)
    }

    pub fn matrix(&self, x: ObjectId) -> &DMatrix<f64> {
        &self.mats[x]
    }

    pub fn is_identity(&self) -> bool {
        self.roots.is_none()
    }

    /// Operator norm of `a: (E_src, phi) -> (E_tgt, phi)`.
    pub fn norm(&self, a: &DMatrix<f64>, src: ObjectId, tgt: ObjectId) -> f64 {
        match &self.roots {
            None => linalg::op_norm(a),
            Some(roots) => linalg::op_norm(&(&roots[tgt].0 * a * &roots[src].1)),
        }
    }

    fn check(&self, ranks: &[usize]) -> Result<(), RepError> {
        for (x, (&r, m)) in ranks.iter().zip(&self.mats).enumerate() {
            if m.nrows() != r {
                return Err(RepError::MetricShape { object: x, expected: r, got: m.nrows() });
            }
        }
        if self.mats.len() != ranks.len() {
            return Err(RepError::WrongLength { expected: ranks.len(), got: self.mats.len() });
        }
        Ok(())
    }
}

/// A defect value with the arrow (or composable pair) attaining it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Defect<W> {
    pub value: f64,
    pub witness: Option<W>,
}

/// Outcome of [`PseudoRep::is_representation`].
#[derive(Debug, Clone, PartialEq)]
pub struct RepresentationCheck {
    pub holds: bool,
    pub unital_deviation: f64,
    pub worst_pair: Option<(ArrowId, ArrowId)>,
    pub defect: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PseudoRep {
    ranks: Vec<usize>,
    mats: Vec<DMatrix<f64>>,
}

impl PseudoRep {
    pub fn new(groupoid: &FiniteGroupoid, bundle: &FiberBundle, mats: Vec<DMatrix<f64>>) -> Result<Self, RepError> {
        if mats.len() != groupoid.num_arrows() {
            return Err(RepError::WrongLength { expected: groupoid.num_arrows(), got: mats.len() });
        }
        if bundle.ranks.len() != groupoid.num_objects() {
            return Err(RepError::WrongLength { expected: groupoid.num_objects(), got: bundle.ranks.len() });
        }
        for (g, m) in mats.iter().enumerate() {
            let expected = (bundle.rank(groupoid.tgt(g)), bundle.rank(groupoid.src(g)));
            if m.shape() != expected {
                return Err(RepError::Shape { arrow: g, expected, got: m.shape() });
            }
        }
        Ok(PseudoRep { ranks: bundle.ranks.clone(), mats })
    }

    pub fn from_fn<F>(groupoid: &FiniteGroupoid, bundle: &FiberBundle, f: F) -> Result<Self, RepError>
    where
        F: FnMut(ArrowId) -> DMatrix<f64>,
    {
        Self::new(groupoid, bundle, groupoid.arrows().map(f).collect())
    }

    pub(crate) fn from_parts(ranks: Vec<usize>, mats: Vec<DMatrix<f64>>) -> Self {
        PseudoRep { ranks, mats }
    }

    pub fn bundle(&self) -> FiberBundle {
        FiberBundle { ranks: self.ranks.clone() }
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    pub fn mat(&self, g: ArrowId) -> &DMatrix<f64> {
        &self.mats[g]
    }

    pub fn mats(&self) -> &[DMatrix<f64>] {
        &self.mats
    }

    /// `max_x |lambda(1_x) - I|_F`.
    pub fn unital_deviation(&self, groupoid: &FiniteGroupoid) -> f64 {
        groupoid
            .objects()
            .map(|x| {
                let r = self.ranks[x];
                (self.mat(groupoid.unit(x)) - DMatrix::identity(r, r)).norm()
            })
            .fold(0.0, f64::max)
    }

    pub fn is_unital(&self, groupoid: &FiniteGroupoid, tol: f64) -> bool {
        self.unital_deviation(groupoid) <= tol
    }

    /// Every matrix has smallest singular value above [`SINGULAR_FLOOR`].
    pub fn is_invertible(&self) -> bool {
        self.first_singular_arrow().is_none()
    }

    pub fn first_singular_arrow(&self) -> Option<ArrowId> {
        self.mats.iter().position(|m| !(linalg::min_singular(m) > SINGULAR_FLOOR))
    }

    pub fn defect_b(&self, groupoid: &FiniteGroupoid, metric: &FiberMetric) -> Result<Defect<ArrowId>, RepError> {
        metric.check(&self.ranks)?;
        let norms: Vec<f64> = groupoid
            .arrows()
            .into_par_iter()
            .map(|g| metric.norm(&self.mats[g], groupoid.src(g), groupoid.tgt(g)))
            .collect();
        Ok(argmax(norms.into_iter().enumerate()))
    }

    pub fn defect_c(
        &self,
        groupoid: &FiniteGroupoid,
        metric: &FiberMetric,
    ) -> Result<Defect<(ArrowId, ArrowId)>, RepError> {
        metric.check(&self.ranks)?;
        let pairs: Vec<(ArrowId, ArrowId, ArrowId)> = groupoid.composable_pairs().collect();
        let norms: Vec<f64> = pairs
            .par_iter()
            .map(|&(later, earlier, composite)| {
                let d = &self.mats[composite] - &self.mats[later] * &self.mats[earlier];
                metric.norm(&d, groupoid.src(earlier), groupoid.tgt(later))
            })
            .collect();
        Ok(argmax(pairs.iter().map(|&(l, e, _)| (l, e)).zip(norms)))
    }

    /// Unital within `tol` and multiplicative within `tol` under identity
    /// metrics.
    pub fn is_representation(&self, groupoid: &FiniteGroupoid, tol: f64) -> RepresentationCheck {
        let unital_deviation = self.unital_deviation(groupoid);
        let c = self
            .defect_c(groupoid, &FiberMetric::identity(&self.bundle()))
            .expect("identity metric matches its own bundle");
        RepresentationCheck {
            holds: unital_deviation <= tol && c.value <= tol,
            unital_deviation,
            worst_pair: c.witness,
            defect: c.value,
        }
    }

    /// Matrices of the surviving arrows of a full restriction.
    pub fn restrict(&self, restriction: &Restriction) -> PseudoRep {
        PseudoRep {
            ranks: restriction.objects.iter().map(|&x| self.ranks[x]).collect(),
            mats: restriction.arrows.iter().map(|&g| self.mats[g].clone()).collect(),
        }
    }

    /// `(1 - t) self + t other`.
    pub fn interpolate(&self, other: &PseudoRep, t: f64) -> PseudoRep {
        PseudoRep {
            ranks: self.ranks.clone(),
            mats: self.mats.iter().zip(&other.mats).map(|(a, b)| a * (1.0 - t) + b * t).collect(),
        }
    }

    /// `base(g) + amplitude * N(g)` with seeded noise entries uniform in
    /// `[-1, 1]`, zero on unit arrows.
    pub fn perturbed(groupoid: &FiniteGroupoid, base: &PseudoRep, amplitude: f64, seed: u64) -> PseudoRep {
        assert!(amplitude >= 0.0, "amplitude must be non-negative");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mats = groupoid
            .arrows()
            .map(|g| {
                let b = &base.mats[g];
                let noise = DMatrix::from_fn(b.nrows(), b.ncols(), |_, _| rng.gen_range(-1.0..=1.0));
                if groupoid.is_unit(g) {
                    b.clone()
                } else {
                    b + noise * amplitude
                }
            })
            .collect();
        PseudoRep { ranks: base.ranks.clone(), mats }
    }
}

/// First maximum in iteration order, so ties go to the smallest id.
fn argmax<W: Copy>(values: impl Iterator<Item = (W, f64)>) -> Defect<W> {
    let mut best = Defect { value: 0.0, witness: None };
    for (w, v) in values {
        if best.witness.is_none() || v > best.value || v.is_nan() {
            best = Defect { value: v, witness: Some(w) };
            if v.is_nan() {
                break;
            }
        }
    }
    best
}
