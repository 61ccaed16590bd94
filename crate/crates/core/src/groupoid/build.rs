//! Standard constructors. Every constructor returns a groupoid that passes
//! [`FiniteGroupoid::validate`].

use super::{ArrowId, FiniteGroup, FiniteGroupoid, GroupoidError, InvariantSubset, ObjectId};

/// A full subgroupoid together with the id maps back into its parent.
#[derive(Debug, Clone)]
pub struct Restriction {
    pub groupoid: FiniteGroupoid,
    /// `objects[new] = old`, ascending.
    pub objects: Vec<ObjectId>,
    /// `arrows[new] = old`, ascending.
    pub arrows: Vec<ArrowId>,
}

impl FiniteGroupoid {
    /// The one-object groupoid of a group given by a multiplication table.
    pub fn one_object_group(table: &[Vec<usize>]) -> Result<Self, GroupoidError> {
        let group = FiniteGroup::from_table(table.to_vec())?;
        let trivial: Vec<Vec<usize>> = vec![vec![0]; group.order()];
        Self::action_groupoid(&group, &trivial)
    }

    /// The groupoid `n x n` with exactly one arrow between any two objects.
    /// Arrow `y <- x` has id `y * n + x`.
    pub fn pair_groupoid(n: usize) -> Self {
        let id = |y: usize, x: usize| y * n + x;
        let mut src = Vec::with_capacity(n * n);
        let mut tgt = Vec::with_capacity(n * n);
        let mut inv = Vec::with_capacity(n * n);
        for y in 0..n {
            for x in 0..n {
                src.push(x);
                tgt.push(y);
                inv.push(id(x, y));
            }
        }
        let unit = (0..n).map(|x| id(x, x)).collect();
        let mut comp = Vec::with_capacity(n * n * n);
        for z in 0..n {
            for y in 0..n {
                for x in 0..n {
                    comp.push((id(z, y), id(y, x), id(z, x)));
                }
            }
        }
        Self::from_tables(n, src, tgt, unit, inv, &comp).expect("pair groupoid tables")
    }

    /// The translation groupoid of a finite group acting on `0..points`,
    /// `action[g][m] = g . m`. Arrow `(g, m)` has id `g * points + m`, source
    /// `m` and target `g . m`.
    pub fn action_groupoid(group: &FiniteGroup, action: &[Vec<usize>]) -> Result<Self, GroupoidError> {
        let order = group.order();
        if action.len() != order {
            return Err(GroupoidError::NotAnAction(format!("{} rows for a group of order {order}", action.len())));
        }
        let points = action[0].len();
        for (g, row) in action.iter().enumerate() {
            if row.len() != points {
                return Err(GroupoidError::NotAnAction(format!("row {g} has the wrong length")));
            }
            if let Some(&bad) = row.iter().find(|&&m| m >= points) {
                return Err(GroupoidError::NotAnAction(format!("{g} sends a point to {bad}")));
            }
        }
        for m in 0..points {
            if action[group.identity()][m] != m {
                return Err(GroupoidError::NotAnAction(format!("identity moves point {m}")));
            }
            for a in 0..order {
                for b in 0..order {
                    if action[group.mul(a, b)][m] != action[a][action[b][m]] {
                        return Err(GroupoidError::NotAnAction(format!("({a}{b}).{m} differs from {a}.({b}.{m})")));
                    }
                }
            }
        }
        let id = |g: usize, m: usize| g * points + m;
        let mut src = Vec::with_capacity(order * points);
        let mut tgt = Vec::with_capacity(order * points);
        let mut inv = Vec::with_capacity(order * points);
        for g in 0..order {
            for m in 0..points {
                src.push(m);
                tgt.push(action[g][m]);
                inv.push(id(group.inverse(g), action[g][m]));
            }
        }
        let unit = (0..points).map(|m| id(group.identity(), m)).collect();
        let mut comp = Vec::new();
        for h in 0..order {
            for g in 0..order {
                for m in 0..points {
                    comp.push((id(h, action[g][m]), id(g, m), id(group.mul(h, g), m)));
                }
            }
        }
        Self::from_tables(points, src, tgt, unit, inv, &comp)
    }

    /// A bundle of groups, one per base point, with no arrows between points.
    pub fn group_bundle(groups: &[FiniteGroup]) -> Self {
        let mut out = Self::from_tables(0, vec![], vec![], vec![], vec![], &[]).unwrap();
        for group in groups {
            let trivial = vec![vec![0]; group.order()];
            let fiber = Self::action_groupoid(group, &trivial).expect("trivial action");
            out = Self::disjoint_union(&out, &fiber);
        }
        out
    }

    /// Objects and arrows of `b` are shifted past those of `a`.
    pub fn disjoint_union(a: &Self, b: &Self) -> Self {
        let (no, na) = (a.num_objects(), a.num_arrows());
        let src = a.src.iter().copied().chain(b.src.iter().map(|x| x + no)).collect();
        let tgt = a.tgt.iter().copied().chain(b.tgt.iter().map(|x| x + no)).collect();
        let unit = a.unit.iter().copied().chain(b.unit.iter().map(|g| g + na)).collect();
        let inv = a.inv.iter().copied().chain(b.inv.iter().map(|g| g + na)).collect();
        let comp: Vec<_> =
            a.composable_pairs().chain(b.composable_pairs().map(|(p, q, r)| (p + na, q + na, r + na))).collect();
        Self::from_tables(no + b.num_objects(), src, tgt, unit, inv, &comp).expect("union of valid tables")
    }

    /// The full subgroupoid over an invariant subset. Surviving objects and
    /// arrows keep their relative order.
    pub fn full_restriction(&self, subset: &InvariantSubset) -> Restriction {
        let objects: Vec<ObjectId> = subset.objects().collect();
        let mut new_object = vec![usize::MAX; self.num_objects()];
        for (new, &old) in objects.iter().enumerate() {
            new_object[old] = new;
        }
        let arrows: Vec<ArrowId> = self.arrows().filter(|&g| subset.contains(self.src(g))).collect();
        let mut new_arrow = vec![usize::MAX; self.num_arrows()];
        for (new, &old) in arrows.iter().enumerate() {
            new_arrow[old] = new;
        }
        let src = arrows.iter().map(|&g| new_object[self.src(g)]).collect();
        let tgt = arrows.iter().map(|&g| new_object[self.tgt(g)]).collect();
        let inv = arrows.iter().map(|&g| new_arrow[self.inv(g)]).collect();
        let unit = objects.iter().map(|&x| new_arrow[self.unit(x)]).collect();
        let mut comp = Vec::new();
        for &later in &arrows {
            for &earlier in &arrows {
                if let Some(r) = self.compose(later, earlier) {
                    comp.push((new_arrow[later], new_arrow[earlier], new_arrow[r]));
                }
            }
        }
        let groupoid = Self::from_tables(objects.len(), src, tgt, unit, inv, &comp)
            .expect("restriction of an invariant subset stays closed");
        Restriction { groupoid, objects, arrows }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z2() -> FiniteGroup {
        FiniteGroup::cyclic(2)
    }

    #[test]
    fn trivial_action_gives_the_group() {
        let g = FiniteGroupoid::action_groupoid(&z2(), &[vec![0], vec![0]]).unwrap();
        assert_eq!(g.num_objects(), 1);
        assert_eq!(g.num_arrows(), 2);
        assert!(g.validate().is_empty());
        assert_eq!(g, FiniteGroupoid::one_object_group(z2().table()).unwrap());
    }

    #[test]
    fn constructors_validate() {
        let s3 = FiniteGroup::symmetric(3);
        let cases = [
            FiniteGroupoid::pair_groupoid(1),
            FiniteGroupoid::pair_groupoid(3),
            FiniteGroupoid::action_groupoid(&s3, &s3.natural_action(3)).unwrap(),
            FiniteGroupoid::group_bundle(&[z2(), FiniteGroup::cyclic(3)]),
            FiniteGroupoid::disjoint_union(&FiniteGroupoid::pair_groupoid(2), &s3_groupoid()),
        ];
        for g in &cases {
            assert!(g.validate().is_empty(), "{}", g.validate());
        }
    }

    fn s3_groupoid() -> FiniteGroupoid {
        let s3 = FiniteGroup::symmetric(3);
        FiniteGroupoid::action_groupoid(&s3, &s3.natural_action(3)).unwrap()
    }

    #[test]
    fn action_arrow_conventions() {
        let s3 = FiniteGroup::symmetric(3);
        let action = s3.natural_action(3);
        let g = s3_groupoid();
        for a in 0..6 {
            for m in 0..3 {
                let arrow = a * 3 + m;
                assert_eq!(g.src(arrow), m);
                assert_eq!(g.tgt(arrow), action[a][m]);
                for b in 0..6 {
                    let later = b * 3 + action[a][m];
                    assert_eq!(g.compose(later, arrow), Some(s3.mul(b, a) * 3 + m));
                }
            }
        }
    }

    #[test]
    fn rejects_non_actions() {
        // swap on two points is not an action of the trivial element
        let bad = FiniteGroupoid::action_groupoid(&z2(), &[vec![1, 0], vec![1, 0]]);
        assert!(matches!(bad, Err(GroupoidError::NotAnAction(_))));
        let bad = FiniteGroupoid::action_groupoid(&z2(), &[vec![0, 1]]);
        assert!(matches!(bad, Err(GroupoidError::NotAnAction(_))));
        let bad = FiniteGroupoid::one_object_group(&[vec![0, 1], vec![1, 1]]);
        assert!(matches!(bad, Err(GroupoidError::MalformedTable(_))));
    }

    #[test]
    fn restriction_to_the_z2_orbit() {
        let z2g = FiniteGroupoid::one_object_group(z2().table()).unwrap();
        let union = FiniteGroupoid::disjoint_union(&s3_groupoid(), &z2g);
        let subset = InvariantSubset::new(&union, [3]).unwrap();
        let r = union.full_restriction(&subset);
        assert_eq!(r.groupoid, z2g);
        assert_eq!(r.objects, vec![3]);
        assert_eq!(r.arrows, vec![18, 19]);
        // brute force: arrows whose endpoints lie in the subset
        let expected: Vec<_> =
            union.arrows().filter(|&g| subset.contains(union.src(g)) && subset.contains(union.tgt(g))).collect();
        assert_eq!(r.arrows, expected);
    }

    #[test]
    fn restrictions_are_closed() {
        let union = FiniteGroupoid::disjoint_union(
            &FiniteGroupoid::pair_groupoid(2),
            &FiniteGroupoid::group_bundle(&[z2(), z2()]),
        );
        for subset in union.invariant_subsets() {
            let r = union.full_restriction(&subset);
            assert!(r.groupoid.validate().is_empty());
            assert_eq!(r.groupoid.num_objects(), subset.len());
        }
    }
}
