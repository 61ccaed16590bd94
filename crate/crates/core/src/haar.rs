//! Normalized Haar systems on finite groupoids.
//!
//! On a finite groupoid every left-invariant system of fiber measures has the
//! form `nu(h) = w(src h)` for a positive weight `w` on objects, so a system is
//! stored as that weight. Left invariance `nu(g h) = nu(h)` then holds
//! structurally and normalization reads `sum_{h in fiber(x)} w(src h) = 1`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::groupoid::{ArrowId, FiniteGroupoid, ObjectId, Restriction};
use crate::report::{Axiom, ValidationReport};

/// Absolute tolerance on fiber sums.
pub const NORMALIZATION_TOL: f64 = 1e-12;

const RANDOM_RETRIES: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HaarError {
    #[error("expected {expected} weights, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("invalid haar system: {0}")]
    Invalid(String),
    #[error("integrand has no value on arrow {0}")]
    MissingArrow(ArrowId),
    #[error("integrand value on arrow {arrow} has dimension {got}, expected {expected}")]
    DimensionMismatch { arrow: ArrowId, expected: usize, got: usize },
    #[error("unknown object {0}")]
    UnknownObject(ObjectId),
    #[error("no normalized weights found after {0} samples")]
    Infeasible(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct HaarSystem {
    weights: Vec<f64>,
}

/// A vector-valued function on the target fiber over `object`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberIntegrand {
    pub object: ObjectId,
    pub values: BTreeMap<ArrowId, DVector<f64>>,
}

impl HaarSystem {
    /// Wraps weights after checking positivity and normalization.
    pub fn from_weights(groupoid: &FiniteGroupoid, weights: Vec<f64>) -> Result<Self, HaarError> {
        let haar = Self::from_weights_unchecked(groupoid, weights)?;
        match haar.validate(groupoid).first() {
            None => Ok(haar),
            Some(v) => Err(HaarError::Invalid(v.to_string())),
        }
    }

    /// Wraps weights checking only their count.
    pub fn from_weights_unchecked(groupoid: &FiniteGroupoid, weights: Vec<f64>) -> Result<Self, HaarError> {
        if weights.len() != groupoid.num_objects() {
            return Err(HaarError::WrongLength { expected: groupoid.num_objects(), got: weights.len() });
        }
        Ok(HaarSystem { weights })
    }

    /// `w(x) = 1 / |fiber(x)|`; fiber sizes are constant along orbits.
    pub fn uniform(groupoid: &FiniteGroupoid) -> Self {
        let weights = groupoid.objects().map(|x| 1.0 / groupoid.target_fiber(x).unwrap().len() as f64).collect();
        HaarSystem { weights }
    }

    /// Positive weights drawn from `seed`, rescaled orbit by orbit onto the
    /// normalization constraint.
    pub fn random(groupoid: &FiniteGroupoid, seed: u64) -> Result<Self, HaarError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let orbits = groupoid.orbits();
        for _ in 0..RANDOM_RETRIES {
            let mut weights: Vec<f64> = groupoid.objects().map(|_| rng.gen_range(0.05..1.0)).collect();
            for orbit in &orbits.orbits {
                let x = orbit[0];
                let sum: f64 = groupoid.target_fiber(x).unwrap().iter().map(|&h| weights[groupoid.src(h)]).sum();
                for &y in orbit {
                    weights[y] /= sum;
                }
            }
            let haar = HaarSystem { weights };
            if haar.validate(groupoid).is_empty() {
                return Ok(haar);
            }
        }
        Err(HaarError::Infeasible(RANDOM_RETRIES))
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, x: ObjectId) -> f64 {
        self.weights[x]
    }

    /// The measure of the single arrow `h` in its target fiber.
    pub fn arrow_weight(&self, groupoid: &FiniteGroupoid, h: ArrowId) -> f64 {
        self.weights[groupoid.src(h)]
    }

    /// Checks positivity, per-fiber normalization to [`NORMALIZATION_TOL`] and
    /// exact left invariance of the induced arrow measure.
    pub fn validate(&self, groupoid: &FiniteGroupoid) -> ValidationReport {
        let mut report = ValidationReport::default();
        for (x, &w) in self.weights.iter().enumerate() {
            if !(w > 0.0 && w.is_finite()) {
                report.push(Axiom::HaarPositivity, vec![x], format!("weight {w}"));
            }
        }
        for x in groupoid.objects() {
            let sum: f64 = groupoid.target_fiber(x).unwrap().iter().map(|&h| self.arrow_weight(groupoid, h)).sum();
            if !((sum - 1.0).abs() <= NORMALIZATION_TOL) {
                report.push(Axiom::HaarNormalization, vec![x], format!("fiber over {x} has total mass {sum}"));
            }
        }
        for (g, h, gh) in groupoid.composable_pairs() {
            if self.arrow_weight(groupoid, gh) != self.arrow_weight(groupoid, h) {
                report.push(Axiom::HaarInvariance, vec![g, h], format!("nu({gh}) differs from nu({h})"));
            }
        }
        report
    }

    /// `sum_{h in fiber(x)} nu(h) f(h)`, summed in ascending arrow order.
    pub fn integrate_fiber(
        &self,
        groupoid: &FiniteGroupoid,
        integrand: &FiberIntegrand,
    ) -> Result<DVector<f64>, HaarError> {
        let fiber = groupoid.target_fiber(integrand.object).map_err(|_| HaarError::UnknownObject(integrand.object))?;
        let dim = match fiber.first() {
            Some(&h) => integrand.values.get(&h).ok_or(HaarError::MissingArrow(h))?.len(),
            None => 0,
        };
        let mut acc = DVector::zeros(dim);
        for &h in fiber {
            let v = integrand.values.get(&h).ok_or(HaarError::MissingArrow(h))?;
            if v.len() != dim {
                return Err(HaarError::DimensionMismatch { arrow: h, expected: dim, got: v.len() });
            }
            acc.axpy(self.arrow_weight(groupoid, h), v, 1.0);
        }
        Ok(acc)
    }

    /// Matrix-valued fiber integral used by the averaging operator.
    pub(crate) fn integrate_fiber_with<F>(
        &self,
        groupoid: &FiniteGroupoid,
        x: ObjectId,
        shape: (usize, usize),
        mut f: F,
    ) -> DMatrix<f64>
    where
        F: FnMut(ArrowId) -> DMatrix<f64>,
    {
        let mut acc = DMatrix::zeros(shape.0, shape.1);
        for &h in groupoid.target_fiber(x).unwrap() {
            acc += f(h) * self.arrow_weight(groupoid, h);
        }
        acc
    }

    /// Weights carried over to a full restriction.
    pub fn restrict(&self, restriction: &Restriction) -> HaarSystem {
        HaarSystem { weights: restriction.objects.iter().map(|&x| self.weights[x]).collect() }
    }
}
