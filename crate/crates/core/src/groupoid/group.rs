use super::GroupoidError;

/// A finite group given by its multiplication table, `table[a][b] = a * b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteGroup {
    table: Vec<Vec<usize>>,
    identity: usize,
    inverse: Vec<usize>,
}

impl FiniteGroup {
    /// Checks closure, associativity, identity and inverses.
    pub fn from_table(table: Vec<Vec<usize>>) -> Result<Self, GroupoidError> {
        let n = table.len();
        if n == 0 {
            return Err(GroupoidError::MalformedTable("empty group table".into()));
        }
        for (a, row) in table.iter().enumerate() {
            if row.len() != n {
                return Err(GroupoidError::MalformedTable(format!("row {a} has {} entries, expected {n}", row.len())));
            }
            if let Some(&bad) = row.iter().find(|&&v| v >= n) {
                return Err(GroupoidError::MalformedTable(format!("entry {bad} in row {a} is not an element")));
            }
        }
        let identity = (0..n)
            .find(|&e| (0..n).all(|x| table[e][x] == x && table[x][e] == x))
            .ok_or_else(|| GroupoidError::MalformedTable("no identity element".into()))?;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if table[table[a][b]][c] != table[a][table[b][c]] {
                        return Err(GroupoidError::MalformedTable(format!("associativity fails at ({a}, {b}, {c})")));
                    }
                }
            }
        }
        let mut inverse = Vec::with_capacity(n);
        for a in 0..n {
            let inv = (0..n)
                .find(|&b| table[a][b] == identity && table[b][a] == identity)
                .ok_or_else(|| GroupoidError::MalformedTable(format!("{a} has no inverse")))?;
            inverse.push(inv);
        }
        Ok(FiniteGroup { table, identity, inverse })
    }

    pub fn cyclic(n: usize) -> Self {
        let table = (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect();
        FiniteGroup::from_table(table).expect("cyclic table is a group")
    }

    /// Permutations of `0..n` in lexicographic order, composed as functions:
    /// `(s * t)(i) = s(t(i))`.
    pub fn symmetric(n: usize) -> Self {
        let perms = permutations(n);
        let index = |p: &Vec<usize>| perms.iter().position(|q| q == p).unwrap();
        let table =
            perms.iter().map(|s| perms.iter().map(|t| index(&t.iter().map(|&i| s[i]).collect())).collect()).collect();
        FiniteGroup::from_table(table).expect("symmetric table is a group")
    }

    pub fn order(&self) -> usize {
        self.table.len()
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a][b]
    }

    pub fn inverse(&self, a: usize) -> usize {
        self.inverse[a]
    }

    pub fn table(&self) -> &[Vec<usize>] {
        &self.table
    }

    /// For a symmetric group built by [`FiniteGroup::symmetric`], the action
    /// `action[s][i] = s(i)` on `0..n`.
    pub fn natural_action(&self, n: usize) -> Vec<Vec<usize>> {
        let perms = permutations(n);
        assert_eq!(perms.len(), self.order(), "group is not S_{n}");
        perms
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}
