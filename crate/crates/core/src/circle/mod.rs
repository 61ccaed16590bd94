//! Connections on the rotation groupoid `SO(2) x| R^2`.
//!
//! An arrow is a pair `(theta, m)` with source `m` and target `R(theta) m`;
//! `(theta', R(theta) m) (theta, m) = (theta' + theta, m)`. A connection is
//! a row covector field `a(theta, m)` lifting `v` at the source to the
//! tangent vector `(a v, v)` (angular part, base part). Its effect is
//!
//! ```text
//! lambda(theta, m) = R(theta) + (J R(theta) m) a(theta, m),   J = [[0, -1], [1, 0]]
//! ```
//!
//! with `det lambda = 1 + a J m`. Under the trivial action the target map is
//! the source map and every effect is the identity.
//!
//! Haar integration over a target fiber is the uniform `N`-node rule on the
//! circle. Base points are sampled on `N`-gons of fixed radius, so the node
//! arrows over one radius form a finite subgroupoid and averaging on it is
//! pure table lookup.

mod average;
mod field;
mod sampled;

use nalgebra::{Matrix2, RowVector2, Vector2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use average::{
    average_connection, certify_near_effective, connection_segment, effect_commutation_check, effect_defects,
    iterate_connection, multiplicativity_defect, AnnulusCertificate, ConnectionOptions, ConnectionOutcome,
    ConnectionSegmentPoint,
};
pub use field::{AnalyticField, FourierBasis, FourierTerm};
pub use sampled::SampledField;

/// Effects with `|det|` below this are degenerate.
pub const DEGENERACY_FLOOR: f64 = 1e-10;
/// Radius below which rotation orbits are refused.
pub const ORIGIN_EXCLUSION: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircleError {
    #[error("quadrature order {0} is below 4")]
    OrderTooSmall(usize),
    #[error("radius {0} is not allowed (must be finite, and above 1e-6 for the rotation action)")]
    BadRadius(f64),
    #[error("effect at theta = {theta}, m = ({}, {}) is degenerate: det = {det:e}", m[0], m[1])]
    Degenerate { theta: f64, m: [f64; 2], det: f64 },
    #[error("point m = ({}, {}) lies on no sampled orbit", m[0], m[1])]
    OffGrid { m: [f64; 2] },
    #[error("field does not match the groupoid: {0}")]
    Mismatch(String),
    #[error("annulus {annulus} is not nearly effective: c = {c:e} above b^-2/9 = {threshold:e}")]
    NotNearEffective { annulus: usize, c: f64, threshold: f64 },
    #[error("connection iteration diverged at step {iteration}: c = {c:e}")]
    Diverged { iteration: usize, c: f64 },
    #[error("invalid field description: {0}")]
    InvalidField(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CircleAction {
    Rotation,
    Trivial,
}

impl std::str::FromStr for CircleAction {
    type Err = CircleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rotation" => Ok(CircleAction::Rotation),
            "trivial" => Ok(CircleAction::Trivial),
            other => Err(CircleError::InvalidField(format!("unknown action {other:?}"))),
        }
    }
}

/// `SO(2)` acting on the plane, sampled with `order` angle nodes and one
/// orbit per radius. Orbit `p` is based at `(radius_p, 0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CircleSpec", into = "CircleSpec")]
pub struct CircleActionGroupoid {
    order: usize,
    radii: Vec<f64>,
    action: CircleAction,
    nodes: Vec<(f64, f64)>,
}

#[derive(Serialize, Deserialize)]
struct CircleSpec {
    order: usize,
    radii: Vec<f64>,
    action: CircleAction,
}

impl TryFrom<CircleSpec> for CircleActionGroupoid {
    type Error = CircleError;

    fn try_from(spec: CircleSpec) -> Result<Self, Self::Error> {
        CircleActionGroupoid::new(spec.order, spec.radii, spec.action)
    }
}

impl From<CircleActionGroupoid> for CircleSpec {
    fn from(g: CircleActionGroupoid) -> Self {
        CircleSpec { order: g.order, radii: g.radii, action: g.action }
    }
}

impl CircleActionGroupoid {
    pub fn new(order: usize, radii: Vec<f64>, action: CircleAction) -> Result<Self, CircleError> {
        if order < 4 {
            return Err(CircleError::OrderTooSmall(order));
        }
        for &r in &radii {
            let ok = r.is_finite() && (action == CircleAction::Trivial || r > ORIGIN_EXCLUSION);
            if !ok {
                return Err(CircleError::BadRadius(r));
            }
        }
        let nodes = (0..order).map(|i| node_angle(i, order).sin_cos()).collect();
        Ok(CircleActionGroupoid { order, radii, action, nodes })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn action(&self) -> CircleAction {
        self.action
    }

    pub fn num_orbits(&self) -> usize {
        self.radii.len()
    }

    /// Number of sampled base points per orbit.
    pub fn orbit_len(&self) -> usize {
        match self.action {
            CircleAction::Rotation => self.order,
            CircleAction::Trivial => 1,
        }
    }

    /// `2 pi i / N`.
    pub fn node(&self, i: usize) -> f64 {
        node_angle(i % self.order, self.order)
    }

    /// `R(theta_i)` from the node table.
    pub fn rotation_at(&self, i: usize) -> Matrix2<f64> {
        let (s, c) = self.nodes[i % self.order];
        Matrix2::new(c, -s, s, c)
    }

    /// Sampled base point `l` of orbit `p`.
    pub fn base_point(&self, p: usize, l: usize) -> Vector2<f64> {
        let r = self.radii[p];
        match self.action {
            CircleAction::Rotation => {
                let (s, c) = self.nodes[l % self.order];
                Vector2::new(r * c, r * s)
            }
            CircleAction::Trivial => Vector2::new(r, 0.0),
        }
    }

    /// Index of the base point reached from base point `l` by node `i`.
    pub fn shift(&self, l: usize, i: usize) -> usize {
        match self.action {
            CircleAction::Rotation => (l + i) % self.order,
            CircleAction::Trivial => 0,
        }
    }

    /// Index of the base point from which node `i` reaches base point `l`.
    pub fn unshift(&self, l: usize, i: usize) -> usize {
        match self.action {
            CircleAction::Rotation => (l + self.order - i % self.order) % self.order,
            CircleAction::Trivial => 0,
        }
    }

    /// Orbit and base angle of a point of the plane, if it is on a sampled
    /// orbit. The angle is relative to the orbit's base point.
    pub fn locate(&self, m: &Vector2<f64>) -> Result<(usize, f64), CircleError> {
        const TOL: f64 = 1e-9;
        let found = match self.action {
            CircleAction::Rotation => {
                self.radii.iter().position(|&r| (m.norm() - r).abs() <= TOL * r.max(1.0)).map(|p| (p, m[1].atan2(m[0])))
            }
            CircleAction::Trivial => self
                .radii
                .iter()
                .position(|&r| (m - Vector2::new(r, 0.0)).norm() <= TOL * r.abs().max(1.0))
                .map(|p| (p, 0.0)),
        };
        found.ok_or(CircleError::OffGrid { m: [m[0], m[1]] })
    }

    /// Target of the arrow `(theta, m)`.
    pub fn target(&self, theta: f64, m: &Vector2<f64>) -> Vector2<f64> {
        match self.action {
            CircleAction::Rotation => rotation(theta) * m,
            CircleAction::Trivial => *m,
        }
    }

    /// The effect of the covector `a` at the arrow `(theta, m)`.
    pub fn effect_of(&self, a: &RowVector2<f64>, theta: f64, m: &Vector2<f64>) -> Matrix2<f64> {
        match self.action {
            CircleAction::Rotation => {
                let r = rotation(theta);
                r + (j() * r * m) * a
            }
            CircleAction::Trivial => Matrix2::identity(),
        }
    }

    /// The effect at node `i` over base point `l` of orbit `p`, using the
    /// node tables.
    pub fn effect_at_node(&self, a: &RowVector2<f64>, p: usize, i: usize, l: usize) -> Matrix2<f64> {
        match self.action {
            CircleAction::Rotation => {
                let r = self.rotation_at(i);
                r + (j() * r * self.base_point(p, l)) * a
            }
            CircleAction::Trivial => Matrix2::identity(),
        }
    }

    /// `det lambda = 1 + a J m` for the rotation action, 1 otherwise.
    pub fn effect_det(&self, a: &RowVector2<f64>, m: &Vector2<f64>) -> f64 {
        match self.action {
            CircleAction::Rotation => 1.0 + (a * j() * m)[0],
            CircleAction::Trivial => 1.0,
        }
    }

    /// The effect of a connection field at an arbitrary arrow.
    pub fn effect<C: Connection + ?Sized>(
        &self,
        field: &C,
        theta: f64,
        m: &Vector2<f64>,
    ) -> Result<Matrix2<f64>, CircleError> {
        Ok(self.effect_of(&field.covector(self, theta, m)?, theta, m))
    }

    /// Inverse of the effect, refused below [`DEGENERACY_FLOOR`].
    pub fn inverse_effect(
        &self,
        a: &RowVector2<f64>,
        theta: f64,
        m: &Vector2<f64>,
    ) -> Result<Matrix2<f64>, CircleError> {
        let det = self.effect_det(a, m);
        if !(det.abs() >= DEGENERACY_FLOOR) {
            return Err(CircleError::Degenerate { theta, m: [m[0], m[1]], det });
        }
        self.effect_of(a, theta, m).try_inverse().ok_or(CircleError::Degenerate { theta, m: [m[0], m[1]], det })
    }

    /// The division cocycle of `g = (theta_g, m)` by `h = (theta_h, m)`.
    pub fn division_cocycle<C: Connection + ?Sized>(
        &self,
        field: &C,
        theta_g: f64,
        theta_h: f64,
        m: &Vector2<f64>,
    ) -> Result<DivisionCocycle, CircleError> {
        let a_g = field.covector(self, theta_g, m)?;
        let a_h = field.covector(self, theta_h, m)?;
        let inv = self.inverse_effect(&a_h, theta_h, m)?;
        Ok(DivisionCocycle { theta: theta_g - theta_h, base: self.target(theta_h, m), angular: (a_g - a_h) * inv })
    }
}

fn node_angle(i: usize, n: usize) -> f64 {
    std::f64::consts::TAU * i as f64 / n as f64
}

pub fn rotation(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// The circle generator.
pub fn j() -> Matrix2<f64> {
    Matrix2::new(0.0, -1.0, 1.0, 0.0)
}

/// A connection, evaluable at any arrow over a sampled orbit.
pub trait Connection {
    fn covector(
        &self,
        groupoid: &CircleActionGroupoid,
        theta: f64,
        m: &Vector2<f64>,
    ) -> Result<RowVector2<f64>, CircleError>;
}

/// A tangent vector to the arrow space: angular and base-source parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentArrowVector {
    pub theta: f64,
    pub m: Vector2<f64>,
    pub angular: f64,
    pub base: Vector2<f64>,
}

/// The linear map `u -> (angular u, u)` from the tangent space at `base`
/// into the tangent space at the arrow `(theta, base)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivisionCocycle {
    pub theta: f64,
    pub base: Vector2<f64>,
    pub angular: RowVector2<f64>,
}

impl DivisionCocycle {
    pub fn apply(&self, u: &Vector2<f64>) -> TangentArrowVector {
        TangentArrowVector { theta: self.theta, m: self.base, angular: (self.angular * u)[0], base: *u }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle::{AnalyticField, FourierBasis, FourierTerm};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn rot(order: usize) -> CircleActionGroupoid {
        CircleActionGroupoid::new(order, vec![0.5, 1.0], CircleAction::Rotation).unwrap()
    }

    #[test]
    fn construction_checks() {
        assert_eq!(CircleActionGroupoid::new(3, vec![1.0], CircleAction::Rotation), Err(CircleError::OrderTooSmall(3)));
        assert_eq!(CircleActionGroupoid::new(8, vec![1e-7], CircleAction::Rotation), Err(CircleError::BadRadius(1e-7)));
        assert!(CircleActionGroupoid::new(8, vec![0.0], CircleAction::Trivial).is_ok());
    }

    #[test]
    fn zero_field_effect_is_the_rotation() {
        let g = rot(16);
        let m = Vector2::new(0.3, -0.7);
        let zero = RowVector2::zeros();
        for &(t1, t2) in &[(0.3, 1.1), (2.0, -0.4), (PI, PI)] {
            let lhs = g.effect_of(&zero, t1, &g.target(t2, &m)) * g.effect_of(&zero, t2, &m);
            let rhs = g.effect_of(&zero, t1 + t2, &m);
            assert!((lhs - rhs).amax() < 1e-15);
        }
    }

    #[test]
    fn trivial_effect_is_identity() {
        let g = CircleActionGroupoid::new(8, vec![1.0], CircleAction::Trivial).unwrap();
        let a = RowVector2::new(3.0, -2.0);
        assert_eq!(g.effect_of(&a, 1.3, &Vector2::new(0.2, 5.0)), Matrix2::identity());
        assert_eq!(g.effect_at_node(&a, 0, 3, 0), Matrix2::identity());
    }

    #[test]
    fn determinant_lemma() {
        let g = rot(8);
        let m = Vector2::new(0.4, 1.3);
        for &(a1, a2, theta) in &[(0.2, -0.1, 0.7), (1.0, 0.0, 2.0), (-0.5, 0.9, -1.2)] {
            let a = RowVector2::new(a1, a2);
            let direct = g.effect_of(&a, theta, &m).determinant();
            // det(R + u a) = 1 + a R^-1 u with u = J R m
            let u = j() * rotation(theta) * m;
            let lemma = 1.0 + (a * rotation(-theta) * u)[0];
            assert!((direct - lemma).abs() < 1e-14);
            assert!((direct - g.effect_det(&a, &m)).abs() < 1e-14);
        }
        // (alpha, 0) at m = (0, 1): det = 1 - alpha, degenerate at alpha = 1
        let a = RowVector2::new(1.0, 0.0);
        let m = Vector2::new(0.0, 1.0);
        assert!(g.effect_det(&a, &m).abs() < 1e-15);
        assert!(matches!(g.inverse_effect(&a, 0.4, &m), Err(CircleError::Degenerate { .. })));
    }

    #[test]
    fn node_tables_match_closed_forms() {
        let g = rot(12);
        for i in 0..12 {
            assert!((g.rotation_at(i) - rotation(g.node(i))).amax() < 1e-15);
            for l in 0..12 {
                assert_eq!(g.unshift(g.shift(l, i), i), l);
                let moved = g.rotation_at(i) * g.base_point(1, l);
                assert!((moved - g.base_point(1, g.shift(l, i))).amax() < 1e-15);
            }
        }
        let (p, psi) = g.locate(&g.base_point(0, 3)).unwrap();
        assert_eq!(p, 0);
        assert!((psi - FRAC_PI_2).abs() < 1e-15);
        assert!(matches!(g.locate(&Vector2::new(0.7, 0.0)), Err(CircleError::OffGrid { .. })));
    }

    /// `q(g, h) = g h^-1` on divisible pairs, in coordinates.
    fn divide(theta_g: f64, theta_h: f64, m: &Vector2<f64>) -> (f64, Vector2<f64>) {
        (theta_g - theta_h, rotation(theta_h) * m)
    }

    #[test]
    fn division_cocycle_matches_finite_differences() {
        let g = rot(8);
        let field = AnalyticField::random(3, 2, 0.3, 5);
        let step = 1e-6;
        for &(tg, th, m1, m2) in &[(0.9, 0.2, 0.5, -0.4), (2.5, -1.0, 1.1, 0.3), (0.0, 0.0, 0.2, 0.9)] {
            let m = Vector2::new(m1, m2);
            let a_g = field.eval(tg, &m);
            let a_h = field.eval(th, &m);
            for v in [Vector2::new(1.0, 0.0), Vector2::new(0.3, -0.8)] {
                // differentiate q along the pair of horizontal lifts of v
                let point = |e: f64| {
                    let mm = m + v * e;
                    divide(tg + e * (a_g * v)[0], th + e * (a_h * v)[0], &mm)
                };
                let (tp, mp) = point(step);
                let (tm, mm) = point(-step);
                let angular_fd = (tp - tm) / (2.0 * step);
                let base_fd = (mp - mm) / (2.0 * step);

                let u = g.effect_of(&a_h, th, &m) * v;
                let w = g.division_cocycle(&field, tg, th, &m).unwrap().apply(&u);
                assert!((w.angular - angular_fd).abs() < 1e-5);
                assert!((w.base - base_fd).norm() < 1e-5);
                assert!((w.theta - (tg - th)).abs() < 1e-15);
                assert!((w.m - rotation(th) * m).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn division_cocycle_examples() {
        let g = rot(8);
        let field = AnalyticField::random(2, 1, 0.2, 1);
        let m = Vector2::new(0.7, 0.1);
        let d = g.division_cocycle(&field, 1.3, 1.3, &m).unwrap();
        let u = Vector2::new(0.4, -2.0);
        assert_eq!(d.apply(&u).angular, 0.0);
        assert_eq!(d.apply(&u).base, u);
        assert_eq!(d.theta, 0.0);

        let zero = AnalyticField::zero();
        assert_eq!(g.division_cocycle(&zero, 0.4, 2.0, &m).unwrap().angular, RowVector2::zeros());

        let sine = AnalyticField::new(vec![FourierTerm {
            freq: 1,
            basis: FourierBasis::Sin,
            monomial: [0, 0],
            coef: [1.0, 0.0],
        }])
        .unwrap();
        let d = g.division_cocycle(&sine, FRAC_PI_2, 0.0, &Vector2::new(1.0, 0.0)).unwrap();
        assert!((d.angular - RowVector2::new(1.0, 0.0)).norm() < 1e-15);
    }
}
