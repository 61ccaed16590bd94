use std::collections::BTreeMap;

use nalgebra::{RowVector2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CircleActionGroupoid, CircleError, Connection};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FourierBasis {
    Sin,
    Cos,
    /// `cos(k theta) - 1`, vanishing at `theta = 0`.
    CosMinusOne,
}

/// `coef * basis(freq theta) * m1^p m2^q` with `monomial = [p, q]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierTerm {
    pub freq: u32,
    pub basis: FourierBasis,
    pub monomial: [u32; 2],
    pub coef: [f64; 2],
}

impl FourierTerm {
    fn eval(&self, theta: f64, m: &Vector2<f64>) -> RowVector2<f64> {
        let k = self.freq as f64 * theta;
        let angular = match self.basis {
            FourierBasis::Sin => k.sin(),
            FourierBasis::Cos => k.cos(),
            FourierBasis::CosMinusOne => k.cos() - 1.0,
        };
        let mono = m[0].powi(self.monomial[0] as i32) * m[1].powi(self.monomial[1] as i32);
        RowVector2::new(self.coef[0], self.coef[1]) * (angular * mono)
    }
}

/// A covector field given as a truncated Fourier series in `theta` with
/// polynomial coefficients in `m`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnalyticField {
    pub terms: Vec<FourierTerm>,
}

impl AnalyticField {
    pub fn new(terms: Vec<FourierTerm>) -> Result<Self, CircleError> {
        if let Some(t) = terms.iter().find(|t| !t.coef.iter().all(|c| c.is_finite())) {
            return Err(CircleError::InvalidField(format!("non-finite coefficient in {t:?}")));
        }
        Ok(AnalyticField { terms })
    }

    pub fn zero() -> Self {
        AnalyticField::default()
    }

    pub fn eval(&self, theta: f64, m: &Vector2<f64>) -> RowVector2<f64> {
        self.terms.iter().fold(RowVector2::zeros(), |acc, t| acc + t.eval(theta, m))
    }

    /// Highest frequency present.
    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|t| t.freq).max().unwrap_or(0)
    }

    /// Whether `a(0, m)` vanishes identically: the `cos` terms must cancel
    /// monomial by monomial.
    pub fn is_unital(&self) -> bool {
        let mut at_zero: BTreeMap<[u32; 2], [f64; 2]> = BTreeMap::new();
        for t in self.terms.iter().filter(|t| t.basis == FourierBasis::Cos) {
            let e = at_zero.entry(t.monomial).or_insert([0.0; 2]);
            e[0] += t.coef[0];
            e[1] += t.coef[1];
        }
        at_zero.values().all(|c| c[0] == 0.0 && c[1] == 0.0)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let terms =
            self.terms.iter().map(|t| FourierTerm { coef: [t.coef[0] * factor, t.coef[1] * factor], ..*t }).collect();
        AnalyticField { terms }
    }

    /// A unital field with one `sin` and one `cos - 1` term per frequency
    /// `1..=degree` and monomial of total degree at most `mono_degree`,
    /// coefficients uniform in `[-amplitude, amplitude]`.
    pub fn random(degree: u32, mono_degree: u32, amplitude: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut terms = Vec::new();
        for freq in 1..=degree {
            for basis in [FourierBasis::Sin, FourierBasis::CosMinusOne] {
                for total in 0..=mono_degree {
                    for p in 0..=total {
                        let coef = [rng.gen_range(-amplitude..=amplitude), rng.gen_range(-amplitude..=amplitude)];
                        terms.push(FourierTerm { freq, basis, monomial: [p, total - p], coef });
                    }
                }
            }
        }
        AnalyticField { terms }
    }

    /// `eps` times a fixed unital degree-2 field, the connection fixture.
    pub fn degree_two(eps: f64) -> Self {
        let t = |freq, basis, monomial, coef| FourierTerm { freq, basis, monomial, coef };
        AnalyticField {
            terms: vec![
                t(1, FourierBasis::Sin, [0, 0], [1.0, 0.0]),
                t(1, FourierBasis::CosMinusOne, [1, 0], [0.0, 1.0]),
                t(2, FourierBasis::Sin, [0, 1], [0.5, -0.3]),
                t(2, FourierBasis::CosMinusOne, [1, 1], [0.2, 0.4]),
            ],
        }
        .scaled(eps)
    }
}

impl Connection for AnalyticField {
    fn covector(&self, _: &CircleActionGroupoid, theta: f64, m: &Vector2<f64>) -> Result<RowVector2<f64>, CircleError> {
        Ok(self.eval(theta, m))
    }
}
