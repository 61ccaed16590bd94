use nalgebra::{RowVector2, Vector2};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{CircleActionGroupoid, CircleError, Connection};

/// Truncated two-dimensional Fourier series of one orbit's samples, in the
/// arrow angle and the base angle.
#[derive(Debug, Clone, PartialEq)]
struct Refit {
    degree: usize,
    /// Base-angle degree: `degree` on rotation orbits, 0 on fixed points.
    base_degree: usize,
    /// Row-major over `(k1 + degree, k2 + base_degree)`, one table per
    /// covector component.
    coeffs: [Vec<Complex64>; 2],
    residual: f64,
}

impl Refit {
    fn eval(&self, theta: f64, psi: f64) -> RowVector2<f64> {
        let cols = 2 * self.base_degree + 1;
        let phase = |d: usize, angle: f64| -> Vec<Complex64> {
            (0..=2 * d).map(|k| Complex64::from_polar(1.0, (k as f64 - d as f64) * angle)).collect()
        };
        let et = phase(self.degree, theta);
        let ep = phase(self.base_degree, psi);
        let mut out = [0.0; 2];
        for (comp, table) in self.coeffs.iter().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (r, a) in et.iter().enumerate() {
                let row = &table[r * cols..(r + 1) * cols];
                let inner: Complex64 = row.iter().zip(&ep).map(|(c, b)| c * b).sum();
                acc += a * inner;
            }
            out[comp] = acc.re;
        }
        RowVector2::new(out[0], out[1])
    }
}

/// In-place two-dimensional DFT of a row-major `rows x cols` array.
fn fft2(data: &mut [Complex64], rows: usize, cols: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let mut plan = |n| if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    if cols > 1 {
        plan(cols).process(data);
    }
    let col_fft = plan(rows);
    let mut column = vec![Complex64::new(0.0, 0.0); rows];
    for l in 0..cols {
        for i in 0..rows {
            column[i] = data[i * cols + l];
        }
        col_fft.process(&mut column);
        for i in 0..rows {
            data[i * cols + l] = column[i];
        }
    }
}

fn refit_orbit(values: &[RowVector2<f64>], rows: usize, cols: usize) -> Refit {
    let degree = rows / 4;
    let base_degree = if cols > 1 { cols / 4 } else { 0 };
    let wrap = |k: isize, n: usize| k.rem_euclid(n as isize) as usize;
    let scale = 1.0 / (rows * cols) as f64;
    let mut coeffs: [Vec<Complex64>; 2] = [Vec::new(), Vec::new()];
    let mut fitted = vec![[0.0; 2]; rows * cols];
    for comp in 0..2 {
        let mut grid: Vec<Complex64> = values.iter().map(|v| Complex64::new(v[comp], 0.0)).collect();
        fft2(&mut grid, rows, cols, false);
        let mut kept = vec![Complex64::new(0.0, 0.0); rows * cols];
        let mut table = Vec::with_capacity((2 * degree + 1) * (2 * base_degree + 1));
        for k1 in -(degree as isize)..=degree as isize {
            for k2 in -(base_degree as isize)..=base_degree as isize {
                let idx = wrap(k1, rows) * cols + wrap(k2, cols);
                let c = grid[idx] * scale;
                kept[idx] = c;
                table.push(c);
            }
        }
        fft2(&mut kept, rows, cols, true);
        for (f, k) in fitted.iter_mut().zip(&kept) {
            f[comp] = k.re;
        }
        coeffs[comp] = table;
    }
    let residual =
        values.iter().zip(&fitted).map(|(v, f)| (v - RowVector2::new(f[0], f[1])).norm()).fold(0.0, f64::max);
    Refit { degree, base_degree, coeffs, residual }
}

/// Covector samples on the node arrows of every sampled orbit, with a
/// Fourier refit of degree `N/4` for evaluation between nodes.
///
/// Orbit `p` stores `a(theta_i, m_{p,l})` at index `i * L + l`, where `L`
/// is the orbit length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SampledSpec", into = "SampledSpec")]
pub struct SampledField {
    groupoid: CircleActionGroupoid,
    values: Vec<Vec<RowVector2<f64>>>,
    refits: Vec<Refit>,
}

#[derive(Serialize, Deserialize)]
struct SampledSpec {
    groupoid: CircleActionGroupoid,
    /// Per orbit, `[a1, a2]` at index `i * L + l`.
    samples: Vec<Vec<[f64; 2]>>,
}

impl TryFrom<SampledSpec> for SampledField {
    type Error = CircleError;

    fn try_from(spec: SampledSpec) -> Result<Self, Self::Error> {
        let values = spec
            .samples
            .into_iter()
            .map(|orbit| orbit.into_iter().map(|[a, b]| RowVector2::new(a, b)).collect())
            .collect();
        SampledField::from_values(spec.groupoid, values)
    }
}

impl From<SampledField> for SampledSpec {
    fn from(f: SampledField) -> Self {
        SampledSpec {
            samples: f.values.iter().map(|o| o.iter().map(|v| [v[0], v[1]]).collect()).collect(),
            groupoid: f.groupoid,
        }
    }
}

impl SampledField {
    pub fn from_values(groupoid: CircleActionGroupoid, values: Vec<Vec<RowVector2<f64>>>) -> Result<Self, CircleError> {
        let per_orbit = groupoid.order() * groupoid.orbit_len();
        if values.len() != groupoid.num_orbits() || values.iter().any(|o| o.len() != per_orbit) {
            return Err(CircleError::Mismatch(format!(
                "expected {} orbits of {} samples",
                groupoid.num_orbits(),
                per_orbit
            )));
        }
        if values.iter().flatten().any(|v| !(v[0].is_finite() && v[1].is_finite())) {
            return Err(CircleError::InvalidField("non-finite sample".into()));
        }
        let refits = values.par_iter().map(|o| refit_orbit(o, groupoid.order(), groupoid.orbit_len())).collect();
        Ok(SampledField { groupoid, values, refits })
    }

    /// Samples any connection on the node arrows.
    pub fn sample<C: Connection + Sync + ?Sized>(
        groupoid: &CircleActionGroupoid,
        field: &C,
    ) -> Result<Self, CircleError> {
        let n = groupoid.order();
        let len = groupoid.orbit_len();
        let values = (0..groupoid.num_orbits())
            .map(|p| {
                (0..n * len)
                    .into_par_iter()
                    .map(|idx| {
                        let (i, l) = (idx / len, idx % len);
                        field.covector(groupoid, groupoid.node(i), &groupoid.base_point(p, l))
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        SampledField::from_values(groupoid.clone(), values)
    }

    pub fn zero(groupoid: &CircleActionGroupoid) -> Self {
        let per_orbit = groupoid.order() * groupoid.orbit_len();
        let values = vec![vec![RowVector2::zeros(); per_orbit]; groupoid.num_orbits()];
        SampledField::from_values(groupoid.clone(), values).expect("shapes match")
    }

    pub fn groupoid(&self) -> &CircleActionGroupoid {
        &self.groupoid
    }

    /// `a(theta_i, m_{p,l})`.
    pub fn value(&self, p: usize, i: usize, l: usize) -> RowVector2<f64> {
        let n = self.groupoid.order();
        self.values[p][(i % n) * self.groupoid.orbit_len() + l]
    }

    pub fn orbit_values(&self, p: usize) -> &[RowVector2<f64>] {
        &self.values[p]
    }

    pub fn refit_degree(&self) -> usize {
        self.groupoid.order() / 4
    }

    /// Largest distance between a sample and the refit at its node.
    pub fn refit_residual(&self) -> f64 {
        self.refits.iter().map(|r| r.residual).fold(0.0, f64::max)
    }

    /// Largest `|a(theta = 0, m)|` over the samples.
    pub fn unital_deviation(&self) -> f64 {
        (0..self.groupoid.num_orbits())
            .flat_map(|p| (0..self.groupoid.orbit_len()).map(move |l| (p, l)))
            .map(|(p, l)| self.value(p, 0, l).norm())
            .fold(0.0, f64::max)
    }

    /// Largest sample-wise Euclidean distance to another field on the same
    /// groupoid.
    pub fn max_distance(&self, other: &SampledField) -> f64 {
        self.values.iter().flatten().zip(other.values.iter().flatten()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// `(1 - t) self + t other`, sample by sample.
    pub fn interpolate(&self, other: &SampledField, t: f64) -> Result<SampledField, CircleError> {
        if self.groupoid != other.groupoid {
            return Err(CircleError::Mismatch("fields live on different groupoids".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * (1.0 - t) + y * t).collect())
            .collect();
        SampledField::from_values(self.groupoid.clone(), values)
    }
}

fn node_index(angle: f64, n: usize) -> Option<usize> {
    let x = angle.rem_euclid(std::f64::consts::TAU) * n as f64 / std::f64::consts::TAU;
    let k = x.round();
    ((x - k).abs() <= 1e-9).then_some(k as usize % n)
}

impl Connection for SampledField {
    /// Exact samples at node arrows, the refit elsewhere on sampled orbits.
    fn covector(
        &self,
        groupoid: &CircleActionGroupoid,
        theta: f64,
        m: &Vector2<f64>,
    ) -> Result<RowVector2<f64>, CircleError> {
        if *groupoid != self.groupoid {
            return Err(CircleError::Mismatch("field sampled on a different groupoid".into()));
        }
        let (p, psi) = groupoid.locate(m)?;
        let n = groupoid.order();
        let base = if groupoid.orbit_len() == 1 { Some(0) } else { node_index(psi, n) };
        if let (Some(i), Some(l)) = (node_index(theta, n), base) {
            return Ok(self.value(p, i, l));
        }
        Ok(self.refits[p].eval(theta, psi))
    }
}
