use nalgebra::{Matrix2, RowVector2, Vector2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{rotation, CircleActionGroupoid, CircleError, Connection, SampledField, DEGENERACY_FLOOR};
use crate::averaging::{envelope_bound, ConvergenceTrace, TraceRow};

/// Spectral norm of a 2x2 matrix in closed form.
fn norm2(a: &Matrix2<f64>) -> f64 {
    let f = a.norm_squared();
    let det = a.determinant();
    let disc = (f * f - 4.0 * det * det).max(0.0).sqrt();
    ((f + disc) / 2.0).sqrt()
}

fn max_fold(acc: f64, v: f64) -> f64 {
    if acc.is_nan() || v.is_nan() {
        f64::NAN
    } else {
        acc.max(v)
    }
}

/// Effects at the node arrows of orbit `p`, index `i * L + l`.
fn effect_table(field: &SampledField, p: usize) -> Vec<Matrix2<f64>> {
    let g = field.groupoid();
    let len = g.orbit_len();
    (0..g.order() * len)
        .map(|idx| g.effect_at_node(&field.value(p, idx / len, idx % len), p, idx / len, idx % len))
        .collect()
}

fn inverse_table(field: &SampledField, p: usize) -> Result<Vec<Matrix2<f64>>, CircleError> {
    let g = field.groupoid();
    let len = g.orbit_len();
    (0..g.order() * len)
        .map(|idx| {
            let (i, l) = (idx / len, idx % len);
            g.inverse_effect(&field.value(p, i, l), g.node(i), &g.base_point(p, l))
        })
        .collect()
}

/// One multiplicative average on the node arrows:
///
/// ```text
/// avg(a)(theta_i, m_l) = (1/N) sum_j [a(theta_i + phi_j, m_{l-j}) - a(phi_j, m_{l-j})] lambda(phi_j, m_{l-j})^-1
/// ```
///
/// where `(phi_j, m_{l-j})` runs over the target fiber of `m_l`.
pub fn average_connection(field: &SampledField) -> Result<SampledField, CircleError> {
    let g = field.groupoid();
    let n = g.order();
    let len = g.orbit_len();
    let weight = 1.0 / n as f64;
    let values = (0..g.num_orbits())
        .map(|p| {
            let inverses = inverse_table(field, p)?;
            Ok((0..n * len)
                .into_par_iter()
                .map(|idx| {
                    let (i, l) = (idx / len, idx % len);
                    let mut acc = RowVector2::zeros();
                    for jn in 0..n {
                        let src = g.unshift(l, jn);
                        let diff = field.value(p, i + jn, src) - field.value(p, jn, src);
                        acc += diff * inverses[jn * len + src];
                    }
                    acc * weight
                })
                .collect())
        })
        .collect::<Result<Vec<_>, CircleError>>()?;
    SampledField::from_values(g.clone(), values)
}

/// `b` and `c` of the sampled effect on orbit `p`, identity metric.
fn orbit_defects(field: &SampledField, p: usize) -> (f64, f64) {
    let g = field.groupoid();
    let n = g.order();
    let len = g.orbit_len();
    let eff = effect_table(field, p);
    let b = eff.iter().map(norm2).fold(0.0, max_fold);
    let c = (0..n * len)
        .into_par_iter()
        .map(|idx| {
            let (i, l) = (idx / len, idx % len);
            let mut worst = 0.0;
            for later in 0..n {
                let composite = eff[((i + later) % n) * len + l];
                let d = composite - eff[later * len + g.shift(l, i)] * eff[idx];
                worst = max_fold(worst, norm2(&d));
            }
            worst
        })
        .reduce(|| 0.0, max_fold);
    (b, c)
}

/// `b` and `c` of the sampled effect over all orbits.
pub fn effect_defects(field: &SampledField) -> (f64, f64) {
    (0..field.groupoid().num_orbits())
        .map(|p| orbit_defects(field, p))
        .fold((0.0, 0.0), |(b, c), (pb, pc)| (max_fold(b, pb), max_fold(c, pc)))
}

/// Largest failure of `a(theta' + theta, m) = a(theta', R(theta) m) lambda(theta, m) + a(theta, m)`
/// over node pairs, as the Euclidean norm of the covector.
pub fn multiplicativity_defect(field: &SampledField) -> f64 {
    let g = field.groupoid();
    let n = g.order();
    let len = g.orbit_len();
    (0..g.num_orbits())
        .map(|p| {
            let eff = effect_table(field, p);
            (0..n * len)
                .into_par_iter()
                .map(|idx| {
                    let (i, l) = (idx / len, idx % len);
                    let a = field.value(p, i, l);
                    let moved = g.shift(l, i);
                    let mut worst = 0.0;
                    for later in 0..n {
                        let d = field.value(p, i + later, l) - field.value(p, later, moved) * eff[idx] - a;
                        worst = max_fold(worst, d.norm());
                    }
                    worst
                })
                .reduce(|| 0.0, max_fold)
        })
        .fold(0.0, max_fold)
}

/// Largest Frobenius distance, over the given arrows, between the effect of
/// the averaged connection and the Haar average of the effect,
/// `(1/N) sum_j lambda(theta + phi_j, R(-phi_j) m) lambda(phi_j, R(-phi_j) m)^-1`.
pub fn effect_commutation_check<C: Connection + Sync + ?Sized>(
    groupoid: &CircleActionGroupoid,
    field: &C,
    samples: &[(f64, Vector2<f64>)],
) -> Result<f64, CircleError> {
    let averaged = average_connection(&SampledField::sample(groupoid, field)?)?;
    let n = groupoid.order();
    samples
        .par_iter()
        .map(|(theta, m)| {
            let lhs = groupoid.effect(&averaged, *theta, m)?;
            let mut rhs = Matrix2::zeros();
            for jn in 0..n {
                let phi = groupoid.node(jn);
                let src = match groupoid.action() {
                    super::CircleAction::Rotation => rotation(-phi) * m,
                    super::CircleAction::Trivial => *m,
                };
                let a_k = field.covector(groupoid, phi, &src)?;
                let gk = groupoid.effect(field, theta + phi, &src)?;
                rhs += gk * groupoid.inverse_effect(&a_k, phi, &src)?;
            }
            rhs /= n as f64;
            Ok((lhs - rhs).norm())
        })
        .collect::<Result<Vec<f64>, CircleError>>()
        .map(|v| v.into_iter().fold(0.0, max_fold))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnulusCertificate {
    pub annulus: usize,
    pub radius: f64,
    pub b: f64,
    pub c: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Near-effectiveness per sampled orbit: `c <= b^-2 / 9` for the sampled
/// effect under the identity metric.
pub fn certify_near_effective(field: &SampledField) -> Vec<AnnulusCertificate> {
    let g = field.groupoid();
    (0..g.num_orbits())
        .map(|p| {
            let (b, c) = orbit_defects(field, p);
            let threshold = 1.0 / (9.0 * b * b);
            AnnulusCertificate { annulus: p, radius: g.radii()[p], b, c, threshold, pass: c <= threshold }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnectionOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub force: bool,
}

impl Default for ConnectionOptions {
    fn default() -> Self {
        ConnectionOptions { tol: 1e-12, max_iter: 20, force: false }
    }
}

#[derive(Debug, Clone)]
pub struct ConnectionOutcome {
    pub field: SampledField,
    pub trace: ConvergenceTrace,
    pub converged: bool,
    /// The multiplicativity defect stopped halving above `tol`.
    pub floor_reached: bool,
    pub certificates: Vec<AnnulusCertificate>,
}

/// Repeated multiplicative averaging until the multiplicativity defect is
/// at most `tol`. Stops early, flagging the floor, when the defect fails to
/// halve in a step.
pub fn iterate_connection(start: &SampledField, options: ConnectionOptions) -> Result<ConnectionOutcome, CircleError> {
    let certificates = certify_near_effective(start);
    if !options.force {
        if let Some(bad) = certificates.iter().find(|c| !c.pass) {
            return Err(CircleError::NotNearEffective { annulus: bad.annulus, c: bad.c, threshold: bad.threshold });
        }
    }
    let mut field = start.clone();
    let mut trace = ConvergenceTrace::default();
    let (mut b0, mut c0) = (0.0, 0.0);
    let mut prev = f64::INFINITY;
    for i in 0..=options.max_iter {
        let (b, c) = effect_defects(&field);
        if i == 0 {
            (b0, c0) = (b, c);
        }
        let defect = multiplicativity_defect(&field);
        trace.rows.push(TraceRow {
            iter: i,
            b,
            c,
            bound: envelope_bound(b0, c0, i),
            unital_dev: field.unital_deviation(),
            mult_defect: Some(defect),
        });
        let outcome = |field, trace, converged, floor_reached| ConnectionOutcome {
            field,
            trace,
            converged,
            floor_reached,
            certificates: certificates.clone(),
        };
        if defect <= options.tol {
            return Ok(outcome(field, trace, true, false));
        }
        if !c.is_finite() || !defect.is_finite() || (c >= 1.0 && i > 0) {
            return Err(CircleError::Diverged { iteration: i, c });
        }
        if i > 0 && defect > 0.5 * prev {
            return Ok(outcome(field, trace, false, true));
        }
        if i == options.max_iter {
            return Ok(outcome(field, trace, false, false));
        }
        prev = defect;
        field = average_connection(&field)?;
    }
    unreachable!("the loop returns on its last pass")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConnectionSegmentPoint {
    pub t: f64,
    pub b: f64,
    pub c: f64,
    /// Smallest `|det lambda|` over the node arrows.
    pub min_abs_det: f64,
}

/// Effect defects of `a + t (avg(a) - a)` at `t = j / steps`.
pub fn connection_segment(field: &SampledField, steps: usize) -> Result<Vec<ConnectionSegmentPoint>, CircleError> {
    let averaged = average_connection(field)?;
    let g = field.groupoid();
    let steps = steps.max(1);
    (0..=steps)
        .map(|j| {
            let t = j as f64 / steps as f64;
            let ft = field.interpolate(&averaged, t)?;
            let mut min_abs_det = f64::INFINITY;
            for p in 0..g.num_orbits() {
                for idx in 0..g.order() * g.orbit_len() {
                    let (i, l) = (idx / g.orbit_len(), idx % g.orbit_len());
                    let m = g.base_point(p, l);
                    let det = g.effect_det(&ft.value(p, i, l), &m);
                    if !(det.abs() >= DEGENERACY_FLOOR) {
                        return Err(CircleError::Degenerate { theta: g.node(i), m: [m[0], m[1]], det });
                    }
                    min_abs_det = min_abs_det.min(det.abs());
                }
            }
            let (b, c) = effect_defects(&ft);
            Ok(ConnectionSegmentPoint { t, b, c, min_abs_det })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle::{AnalyticField, CircleAction, FourierBasis, FourierTerm};
    use std::f64::consts::FRAC_PI_2;

    fn rotation_groupoid(order: usize) -> CircleActionGroupoid {
        CircleActionGroupoid::new(order, vec![0.5, 1.0, 1.5], CircleAction::Rotation).unwrap()
    }

    fn sin_field() -> AnalyticField {
        AnalyticField::new(vec![FourierTerm { freq: 1, basis: FourierBasis::Sin, monomial: [0, 0], coef: [1.0, 0.0] }])
            .unwrap()
    }

    #[test]
    fn zero_field_is_fixed() {
        let g = rotation_groupoid(16);
        let zero = SampledField::zero(&g);
        assert_eq!(average_connection(&zero).unwrap(), zero);
        assert_eq!(multiplicativity_defect(&zero), 0.0);
        let samples = [(0.3, Vector2::new(1.0, 0.0)), (g.node(3), g.base_point(2, 5))];
        assert!(effect_commutation_check(&g, &zero, &samples).unwrap() < 1e-15);
    }

    #[test]
    fn trivial_action_closed_form() {
        let g = CircleActionGroupoid::new(16, vec![1.0, 2.0], CircleAction::Trivial).unwrap();
        let field = AnalyticField::random(3, 1, 0.5, 2);
        let s = SampledField::sample(&g, &field).unwrap();
        let avg = average_connection(&s).unwrap();
        // direct quadrature of int [a(theta + phi, m) - a(phi, m)] dphi
        for p in 0..2 {
            let m = g.base_point(p, 0);
            for i in 0..16 {
                let theta = g.node(i);
                let mut direct = RowVector2::zeros();
                for jn in 0..16 {
                    let phi = g.node(jn);
                    direct += field.eval(theta + phi, &m) - field.eval(phi, &m);
                }
                direct /= 16.0;
                assert!((avg.value(p, i, 0) - direct).norm() < 1e-15);
                assert!(avg.value(p, i, 0).norm() < 1e-15);
            }
        }
        assert!(effect_commutation_check(&g, &field, &[(0.4, Vector2::new(2.0, 0.0))]).unwrap() == 0.0);
    }

    #[test]
    fn trivial_action_defect_of_sine() {
        let g = CircleActionGroupoid::new(16, vec![1.0], CircleAction::Trivial).unwrap();
        let s = SampledField::sample(&g, &sin_field()).unwrap();
        let phi = |i: usize| i as f64 * std::f64::consts::TAU / 16.0;
        let expected = (0..16)
            .flat_map(|i| (0..16).map(move |k| (phi(i + k).sin() - phi(i).sin() - phi(k).sin()).abs()))
            .fold(0.0, f64::max);
        assert!(expected > 2.0);
        assert!((multiplicativity_defect(&s) - expected).abs() < 1e-14);
        // theta = theta' = pi/2: |sin(pi) - 2|
        let node = (FRAC_PI_2 / std::f64::consts::TAU * 16.0) as usize;
        let d = s.value(0, 2 * node, 0) - s.value(0, node, 0) * 2.0;
        assert!((d.norm() - 2.0).abs() < 1e-15);
        let out = iterate_connection(&s, ConnectionOptions { force: true, ..Default::default() }).unwrap();
        assert!(out.converged);
        assert_eq!(out.trace.len(), 2);
        assert!(out.trace.rows[1].mult_defect.unwrap() <= 1e-10);
    }

    #[test]
    fn average_is_unital_and_commutes_with_effect() {
        let g = rotation_groupoid(128);
        let field = AnalyticField::random(4, 2, 0.005, 11);
        let s = SampledField::sample(&g, &field).unwrap();
        let avg = average_connection(&s).unwrap();
        assert!(avg.refit_residual() <= 1e-12, "{:e}", avg.refit_residual());
        assert!(avg.unital_deviation() <= 1e-15);
        for psi in [0.1, 2.0, 5.5] {
            let m = Vector2::new(f64::cos(psi), f64::sin(psi));
            assert!(avg.covector(&g, 0.0, &m).unwrap().norm() <= 1e-10);
        }
        let samples: Vec<(f64, Vector2<f64>)> = (0..12)
            .map(|k| {
                let theta = if k % 2 == 0 { g.node(7 * k) } else { 0.37 * k as f64 };
                (theta, g.base_point(k % 3, 5 * k))
            })
            .collect();
        let dev = effect_commutation_check(&g, &field, &samples).unwrap();
        assert!(dev <= 1e-8, "{dev:e}");
    }

    #[test]
    fn rotation_iteration_converges_fast() {
        let g = rotation_groupoid(64);
        let s = SampledField::sample(&g, &AnalyticField::degree_two(1e-2)).unwrap();
        let out = iterate_connection(&s, ConnectionOptions::default()).unwrap();
        let defects: Vec<f64> = out.trace.rows.iter().map(|r| r.mult_defect.unwrap()).collect();
        assert!(out.converged || out.floor_reached, "{defects:?}");
        assert!(defects[0] > 1e-3);
        assert!(out.certificates.iter().all(|c| c.pass));
        let fixed = average_connection(&out.field).unwrap();
        assert!(fixed.max_distance(&out.field) <= 1e-10);
    }

    #[test]
    fn uncertified_start_is_refused() {
        let g = rotation_groupoid(16);
        let s = SampledField::sample(&g, &AnalyticField::degree_two(1.0)).unwrap();
        let err = iterate_connection(&s, ConnectionOptions::default()).unwrap_err();
        assert!(matches!(err, CircleError::NotNearEffective { .. }));
    }

    #[test]
    fn segment_stays_non_degenerate() {
        let g = rotation_groupoid(32);
        let s = SampledField::sample(&g, &AnalyticField::degree_two(1e-2)).unwrap();
        let pts = connection_segment(&s, 10).unwrap();
        assert_eq!(pts.len(), 11);
        assert!(pts.iter().all(|p| p.c.is_finite() && p.min_abs_det > 0.5));
        assert!(pts[10].c <= pts[0].c);
    }

    #[test]
    fn degenerate_node_is_reported() {
        let g = CircleActionGroupoid::new(8, vec![1.0], CircleAction::Rotation).unwrap();
        // det = 1 + a J m = 1 - a1 m2 + a2 m1; a = (0, -1) kills it at m = (1, 0)
        let bad = AnalyticField::new(vec![FourierTerm {
            freq: 0,
            basis: FourierBasis::Cos,
            monomial: [0, 0],
            coef: [0.0, -1.0],
        }])
        .unwrap();
        let s = SampledField::sample(&g, &bad).unwrap();
        assert!(matches!(average_connection(&s), Err(CircleError::Degenerate { .. })));
    }
}
