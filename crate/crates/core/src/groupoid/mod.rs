//! Finite groupoids stored as dense structure tables.
//!
//! Objects and arrows are dense integer ids. The composition table is a
//! dense `arrows x arrows` array indexed as `comp[later][earlier]`; an
//! absent entry means the pair is not composable.

mod build;
mod group;

use std::collections::BTreeSet;

use thiserror::Error;

use crate::report::{Axiom, ValidationReport};

pub use build::Restriction;
pub use group::FiniteGroup;

pub type ObjectId = usize;
pub type ArrowId = usize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GroupoidError {
    #[error("unknown object {0}")]
    UnknownObject(ObjectId),
    #[error("unknown arrow {0}")]
    UnknownArrow(ArrowId),
    #[error("arrows ({g}, {h}) are not divisible: sources {sg} and {sh} differ")]
    NotDivisible { g: ArrowId, h: ArrowId, sg: ObjectId, sh: ObjectId },
    #[error("malformed table: {0}")]
    MalformedTable(String),
    #[error("action map is not a group action: {0}")]
    NotAnAction(String),
    #[error("object set is not invariant: arrow {arrow} leaves it ({src} -> {tgt})")]
    NotInvariant { arrow: ArrowId, src: ObjectId, tgt: ObjectId },
    #[error("groupoid axioms fail: {0}")]
    Invalid(String),
}

/// A finite groupoid. Construction checks table shapes and id ranges only;
/// the groupoid laws are checked by [`FiniteGroupoid::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteGroupoid {
    num_objects: usize,
    src: Vec<ObjectId>,
    tgt: Vec<ObjectId>,
    unit: Vec<ArrowId>,
    inv: Vec<ArrowId>,
    comp: Vec<Option<ArrowId>>,
    fibers: Vec<Vec<ArrowId>>,
}

/// Two arrows with a common source, the domain of `g h^-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DivisiblePair {
    pub g: ArrowId,
    pub h: ArrowId,
}

/// Connected components of the object set, ordered by smallest member.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbitDecomposition {
    pub orbits: Vec<Vec<ObjectId>>,
    pub orbit_of: Vec<usize>,
}

impl OrbitDecomposition {
    pub fn len(&self) -> usize {
        self.orbits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orbits.is_empty()
    }
}

/// A set of objects closed under the orbit relation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvariantSubset {
    objects: BTreeSet<ObjectId>,
}

impl InvariantSubset {
    pub fn new(groupoid: &FiniteGroupoid, objects: impl IntoIterator<Item = ObjectId>) -> Result<Self, GroupoidError> {
        let objects: BTreeSet<ObjectId> = objects.into_iter().collect();
        if let Some(&x) = objects.iter().find(|&&x| x >= groupoid.num_objects()) {
            return Err(GroupoidError::UnknownObject(x));
        }
        for g in groupoid.arrows() {
            let (s, t) = (groupoid.src(g), groupoid.tgt(g));
            if objects.contains(&s) != objects.contains(&t) {
                return Err(GroupoidError::NotInvariant { arrow: g, src: s, tgt: t });
            }
        }
        Ok(InvariantSubset { objects })
    }

    pub fn whole(groupoid: &FiniteGroupoid) -> Self {
        InvariantSubset { objects: (0..groupoid.num_objects()).collect() }
    }

    pub fn contains(&self, x: ObjectId) -> bool {
        self.objects.contains(&x)
    }

    pub fn objects(&self) -> impl Iterator<Item = ObjectId> + '_ {
        self.objects.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }
}

impl FiniteGroupoid {
    /// Builds a groupoid from raw tables. `comp` lists `(later, earlier, result)`
    /// triples; pairs not listed are treated as non-composable.
    pub fn from_tables(
        num_objects: usize,
        src: Vec<ObjectId>,
        tgt: Vec<ObjectId>,
        unit: Vec<ArrowId>,
        inv: Vec<ArrowId>,
        comp: &[(ArrowId, ArrowId, ArrowId)],
    ) -> Result<Self, GroupoidError> {
        let n = src.len();
        if tgt.len() != n || inv.len() != n {
            return Err(GroupoidError::MalformedTable(format!(
                "src/tgt/inv lengths differ: {}, {}, {}",
                n,
                tgt.len(),
                inv.len()
            )));
        }
        if unit.len() != num_objects {
            return Err(GroupoidError::MalformedTable(format!("{} units for {} objects", unit.len(), num_objects)));
        }
        for &x in src.iter().chain(&tgt) {
            if x >= num_objects {
                return Err(GroupoidError::UnknownObject(x));
            }
        }
        for &g in unit.iter().chain(&inv) {
            if g >= n {
                return Err(GroupoidError::UnknownArrow(g));
            }
        }
        let mut table = vec![None; n * n];
        for &(later, earlier, result) in comp {
            for a in [later, earlier, result] {
                if a >= n {
                    return Err(GroupoidError::UnknownArrow(a));
                }
            }
            let slot = &mut table[later * n + earlier];
            if slot.is_some() {
                return Err(GroupoidError::MalformedTable(format!(
                    "duplicate composition entry for ({later}, {earlier})"
                )));
            }
            *slot = Some(result);
        }
        let mut fibers = vec![Vec::new(); num_objects];
        for (g, &t) in tgt.iter().enumerate() {
            fibers[t].push(g);
        }
        Ok(FiniteGroupoid { num_objects, src, tgt, unit, inv, comp: table, fibers })
    }

    pub fn num_objects(&self) -> usize {
        self.num_objects
    }

    pub fn num_arrows(&self) -> usize {
        self.src.len()
    }

    pub fn objects(&self) -> std::ops::Range<ObjectId> {
        0..self.num_objects
    }

    pub fn arrows(&self) -> std::ops::Range<ArrowId> {
        0..self.src.len()
    }

    pub fn src(&self, g: ArrowId) -> ObjectId {
        self.src[g]
    }

    pub fn tgt(&self, g: ArrowId) -> ObjectId {
        self.tgt[g]
    }

    pub fn unit(&self, x: ObjectId) -> ArrowId {
        self.unit[x]
    }

    pub fn inv(&self, g: ArrowId) -> ArrowId {
        self.inv[g]
    }

    pub fn is_unit(&self, g: ArrowId) -> bool {
        self.unit[self.src[g]] == g
    }

    /// `later . earlier`, defined when `src(later) == tgt(earlier)`.
    pub fn compose(&self, later: ArrowId, earlier: ArrowId) -> Option<ArrowId> {
        self.comp[later * self.num_arrows() + earlier]
    }

    /// All `(later, earlier)` pairs with a composition entry, in ascending
    /// lexicographic order.
    pub fn composable_pairs(&self) -> impl Iterator<Item = (ArrowId, ArrowId, ArrowId)> + '_ {
        let n = self.num_arrows();
        self.comp.iter().enumerate().filter_map(move |(i, r)| r.map(|r| (i / n, i % n, r)))
    }

    /// Arrows with target `x`, ascending.
    pub fn target_fiber(&self, x: ObjectId) -> Result<&[ArrowId], GroupoidError> {
        self.fibers.get(x).map(Vec::as_slice).ok_or(GroupoidError::UnknownObject(x))
    }

    /// Returns `g h^-1`.
    pub fn divide(&self, pair: DivisiblePair) -> Result<ArrowId, GroupoidError> {
        let DivisiblePair { g, h } = pair;
        for a in [g, h] {
            if a >= self.num_arrows() {
                return Err(GroupoidError::UnknownArrow(a));
            }
        }
        let (sg, sh) = (self.src(g), self.src(h));
        if sg != sh {
            return Err(GroupoidError::NotDivisible { g, h, sg, sh });
        }
        self.compose(g, self.inv(h))
            .ok_or_else(|| GroupoidError::Invalid(format!("composition ({g}, inv {h}) missing")))
    }

    pub fn orbits(&self) -> OrbitDecomposition {
        let mut parent: Vec<usize> = (0..self.num_objects).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for g in self.arrows() {
            let a = find(&mut parent, self.src(g));
            let b = find(&mut parent, self.tgt(g));
            if a != b {
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                parent[hi] = lo;
            }
        }
        let mut orbit_of = vec![usize::MAX; self.num_objects];
        let mut orbits: Vec<Vec<ObjectId>> = Vec::new();
        let mut root_index = vec![usize::MAX; self.num_objects];
        for x in self.objects() {
            let r = find(&mut parent, x);
            if root_index[r] == usize::MAX {
                root_index[r] = orbits.len();
                orbits.push(Vec::new());
            }
            orbit_of[x] = root_index[r];
            orbits[root_index[r]].push(x);
        }
        OrbitDecomposition { orbits, orbit_of }
    }

    /// Every invariant subset, i.e. every union of orbits, ordered by the
    /// bitmask over orbit indices. Panics above 20 orbits.
    pub fn invariant_subsets(&self) -> Vec<InvariantSubset> {
        let orbits = self.orbits();
        assert!(orbits.len() <= 20, "too many orbits to enumerate invariant subsets");
        (0u32..(1 << orbits.len()))
            .map(|mask| InvariantSubset {
                objects: orbits
                    .orbits
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .flat_map(|(_, o)| o.iter().copied())
                    .collect(),
            })
            .collect()
    }

    /// Checks every groupoid law exhaustively and reports each failure with
    /// the arrows that witness it.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        for x in self.objects() {
            let u = self.unit(x);
            if self.src(u) != x || self.tgt(u) != x {
                report.push(
                    Axiom::UnitEndpoints,
                    vec![x, u],
                    format!("unit arrow {u} of object {x} runs {} -> {}", self.src(u), self.tgt(u)),
                );
            }
        }
        for g in self.arrows() {
            let i = self.inv(g);
            if self.src(i) != self.tgt(g) || self.tgt(i) != self.src(g) {
                report.push(
                    Axiom::InverseEndpoints,
                    vec![g, i],
                    format!("inverse {i} of {g} does not reverse its endpoints"),
                );
            }
        }
        for later in self.arrows() {
            for earlier in self.arrows() {
                let composable = self.src(later) == self.tgt(earlier);
                match (composable, self.compose(later, earlier)) {
                    (true, None) => report.push(
                        Axiom::CompositionDomain,
                        vec![later, earlier],
                        "composable pair has no composition entry",
                    ),
                    (false, Some(r)) => report.push(
                        Axiom::CompositionDomain,
                        vec![later, earlier, r],
                        "non-composable pair has a composition entry",
                    ),
                    (true, Some(r)) => {
                        if self.src(r) != self.src(earlier) || self.tgt(r) != self.tgt(later) {
                            report.push(
                                Axiom::CompositionEndpoints,
                                vec![later, earlier, r],
                                "composite has wrong endpoints",
                            );
                        }
                    }
                    (false, None) => {}
                }
            }
        }
        for g in self.arrows() {
            let right = self.compose(g, self.unit(self.src(g)));
            if right != Some(g) {
                report.push(Axiom::RightUnit, vec![g, self.unit(self.src(g))], format!("g . 1 = {right:?}"));
            }
            let left = self.compose(self.unit(self.tgt(g)), g);
            if left != Some(g) {
                report.push(Axiom::LeftUnit, vec![self.unit(self.tgt(g)), g], format!("1 . g = {left:?}"));
            }
            let i = self.inv(g);
            let gi = self.compose(g, i);
            if gi != Some(self.unit(self.tgt(g))) {
                report.push(
                    Axiom::RightInverse,
                    vec![g, i],
                    format!("g . g^-1 = {gi:?}, expected unit {}", self.unit(self.tgt(g))),
                );
            }
            let ig = self.compose(i, g);
            if ig != Some(self.unit(self.src(g))) {
                report.push(
                    Axiom::LeftInverse,
                    vec![i, g],
                    format!("g^-1 . g = {ig:?}, expected unit {}", self.unit(self.src(g))),
                );
            }
        }
        for (k, g, kg) in self.composable_pairs() {
            for &h in &self.fibers[self.src(g)] {
                let Some(gh) = self.compose(g, h) else { continue };
                let lhs = self.compose(kg, h);
                let rhs = self.compose(k, gh);
                if lhs != rhs {
                    report.push(Axiom::Associativity, vec![k, g, h], format!("(kg)h = {lhs:?} but k(gh) = {rhs:?}"));
                }
            }
        }
        report
    }

    /// Fails with [`GroupoidError::Invalid`] naming the first violation.
    pub fn ensure_valid(&self) -> Result<(), GroupoidError> {
        let report = self.validate();
        match report.first() {
            None => Ok(()),
            Some(v) => Err(GroupoidError::Invalid(v.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z2() -> FiniteGroupoid {
        FiniteGroupoid::one_object_group(&[vec![0, 1], vec![1, 0]]).unwrap()
    }

    #[test]
    fn z2_and_pair_groupoid_validate() {
        assert!(z2().validate().is_empty());
        let pair = FiniteGroupoid::pair_groupoid(2);
        assert_eq!(pair.num_arrows(), 4);
        assert!(pair.validate().is_empty());
    }

    #[test]
    fn corrupted_z2_reports_inverse_failure() {
        // comp(a, a) = a instead of e
        let g = FiniteGroupoid::from_tables(
            1,
            vec![0, 0],
            vec![0, 0],
            vec![0],
            vec![0, 1],
            &[(0, 0, 0), (0, 1, 1), (1, 0, 1), (1, 1, 1)],
        )
        .unwrap();
        let report = g.validate();
        assert!(report.cites(Axiom::RightInverse));
        assert!(report.cites(Axiom::LeftInverse));
        let v = report.violations.iter().find(|v| v.axiom == Axiom::RightInverse).unwrap();
        assert_eq!(v.witness, vec![1, 1]);
    }

    #[test]
    fn missing_entry_is_a_domain_violation() {
        let g = FiniteGroupoid::from_tables(1, vec![0], vec![0], vec![0], vec![0], &[]).unwrap();
        assert!(g.validate().cites(Axiom::CompositionDomain));
    }

    #[test]
    fn out_of_range_ids_are_rejected() {
        let err = FiniteGroupoid::from_tables(1, vec![0], vec![3], vec![0], vec![0], &[]);
        assert_eq!(err.unwrap_err(), GroupoidError::UnknownObject(3));
        let err = FiniteGroupoid::from_tables(1, vec![0], vec![0], vec![0], vec![0], &[(0, 0, 5)]);
        assert_eq!(err.unwrap_err(), GroupoidError::UnknownArrow(5));
    }

    #[test]
    fn target_fibers() {
        let pair = FiniteGroupoid::pair_groupoid(2);
        let fx = pair.target_fiber(0).unwrap();
        assert_eq!(fx.len(), 2);
        // (x <- x) then (x <- y)
        assert_eq!(pair.src(fx[0]), 0);
        assert_eq!(pair.src(fx[1]), 1);
        assert!(fx.iter().all(|&g| pair.tgt(g) == 0));
        assert_eq!(z2().target_fiber(0).unwrap(), &[0, 1]);
        assert_eq!(pair.target_fiber(2).unwrap_err(), GroupoidError::UnknownObject(2));
    }

    #[test]
    fn s3_fiber_has_six_arrows() {
        let s3 = FiniteGroup::symmetric(3);
        let g = FiniteGroupoid::action_groupoid(&s3, &s3.natural_action(3)).unwrap();
        let fiber = g.target_fiber(0).unwrap();
        // brute force: all (sigma, m) with sigma(m) = 0
        let expected: Vec<ArrowId> = g.arrows().filter(|&a| g.tgt(a) == 0).collect();
        assert_eq!(fiber, expected.as_slice());
        assert_eq!(fiber.len(), 6);
    }

    #[test]
    fn divide_examples() {
        let pair = FiniteGroupoid::pair_groupoid(3);
        for g in pair.arrows() {
            let d = pair.divide(DivisiblePair { g, h: g }).unwrap();
            assert_eq!(d, pair.unit(pair.tgt(g)));
            let d = pair.divide(DivisiblePair { g, h: pair.unit(pair.src(g)) }).unwrap();
            assert_eq!(d, g);
        }
        let z = z2();
        assert_eq!(z.divide(DivisiblePair { g: 1, h: 1 }).unwrap(), 0);
        // (0 <- 1) and (0 <- 0) have different sources
        let bad = pair.divide(DivisiblePair { g: 1, h: 0 });
        assert!(matches!(bad, Err(GroupoidError::NotDivisible { .. })));
    }

    #[test]
    fn divide_inverts_composition() {
        let s3 = FiniteGroup::symmetric(3);
        let g = FiniteGroupoid::action_groupoid(&s3, &s3.natural_action(3)).unwrap();
        for (a, b, ab) in g.composable_pairs() {
            assert_eq!(g.divide(DivisiblePair { g: ab, h: b }).unwrap(), a);
        }
    }

    #[test]
    fn orbit_counts() {
        assert_eq!(FiniteGroupoid::pair_groupoid(2).orbits().orbits, vec![vec![0, 1]]);
        let two = FiniteGroupoid::disjoint_union(&z2(), &z2());
        assert_eq!(two.orbits().len(), 2);
        let s3 = FiniteGroup::symmetric(3);
        let g = FiniteGroupoid::action_groupoid(&s3, &s3.natural_action(3)).unwrap();
        let o = g.orbits();
        assert_eq!(o.len(), 1);
        assert_eq!(o.orbits[0].len(), 3);
    }

    #[test]
    fn invariant_subsets_are_orbit_unions() {
        let two = FiniteGroupoid::disjoint_union(&FiniteGroupoid::pair_groupoid(2), &z2());
        let subsets = two.invariant_subsets();
        assert_eq!(subsets.len(), 4);
        assert!(subsets[0].is_empty());
        assert_eq!(subsets[3].len(), 3);
        assert!(InvariantSubset::new(&two, [0]).is_err());
        assert!(InvariantSubset::new(&two, [0, 1]).is_ok());
        assert!(matches!(InvariantSubset::new(&two, [7]), Err(GroupoidError::UnknownObject(7))));
    }

    #[test]
    fn left_translation_is_a_fiber_bijection() {
        let s3 = FiniteGroup::symmetric(3);
        let g = FiniteGroupoid::action_groupoid(&s3, &s3.natural_action(3)).unwrap();
        for a in g.arrows() {
            let from = g.target_fiber(g.src(a)).unwrap();
            let mut image: Vec<ArrowId> = from.iter().map(|&h| g.compose(a, h).unwrap()).collect();
            image.sort_unstable();
            assert_eq!(image.as_slice(), g.target_fiber(g.tgt(a)).unwrap());
        }
    }
}
