use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite commutative monoid given by its addition table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Monoid {
    name: String,
    zero: usize,
    add: Vec<Vec<usize>>,
}

/// JSON form of a monoid table: `{"size": n, "zero": z, "add": [[...]]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonoidTable {
    pub size: usize,
    pub zero: usize,
    pub add: Vec<Vec<usize>>,
}

impl Monoid {
    /// Builds a monoid, checking closure, commutativity, associativity and
    /// the unit law.
    pub fn new(name: impl Into<String>, zero: usize, add: Vec<Vec<usize>>) -> Result<Self> {
        let n = add.len();
        let name = name.into();
        if n == 0 {
            return Err(Error::InvalidMonoid(format!("{name}: empty carrier")));
        }
        if zero >= n {
            return Err(Error::InvalidMonoid(format!("{name}: zero {zero} out of range")));
        }
        for row in &add {
            if row.len() != n || row.iter().any(|&v| v >= n) {
                return Err(Error::InvalidMonoid(format!("{name}: table is not {n}×{n} over 0..{n}")));
            }
        }
        for a in 0..n {
            if add[zero][a] != a {
                return Err(Error::InvalidMonoid(format!("{name}: {zero} is not a unit at {a}")));
            }
            for b in 0..n {
                if add[a][b] != add[b][a] {
                    return Err(Error::InvalidMonoid(format!("{name}: {a}+{b} not commutative")));
                }
                for c in 0..n {
                    if add[add[a][b]][c] != add[a][add[b][c]] {
                        return Err(Error::InvalidMonoid(format!(
                            "{name}: ({a}+{b})+{c} not associative"
                        )));
                    }
                }
            }
        }
        Ok(Monoid { name, zero, add })
    }

    pub fn from_table(name: impl Into<String>, t: &MonoidTable) -> Result<Self> {
        if t.add.len() != t.size {
            return Err(Error::InvalidMonoid(format!(
                "declared size {} but table has {} rows",
                t.size,
                t.add.len()
            )));
        }
        Monoid::new(name, t.zero, t.add.clone())
    }

    pub fn to_table(&self) -> MonoidTable {
        MonoidTable {
            size: self.size(),
            zero: self.zero,
            add: self.add.clone(),
        }
    }

    /// Cyclic group `Z_n`.
    pub fn cyclic(n: usize) -> Self {
        let add = (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect();
        Monoid::new(format!("Z{n}"), 0, add).expect("cyclic group")
    }

    /// Natural numbers with addition capped at `k`.
    pub fn truncated_naturals(k: usize) -> Self {
        let add = (0..=k).map(|a| (0..=k).map(|b| (a + b).min(k)).collect()).collect();
        Monoid::new(format!("N{k}"), 0, add).expect("truncated naturals")
    }

    /// Booleans under disjunction.
    pub fn boolean() -> Self {
        Monoid::new("B", 0, vec![vec![0, 1], vec![1, 1]]).expect("boolean monoid")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn size(&self) -> usize {
        self.add.len()
    }

    pub fn zero(&self) -> usize {
        self.zero
    }

    #[inline]
    pub fn add(&self, a: usize, b: usize) -> usize {
        self.add[a][b]
    }
}

/// Named monoids available to `M[...]` expressions.
#[derive(Clone, Debug)]
pub struct MonoidRegistry {
    monoids: BTreeMap<String, Arc<Monoid>>,
}

impl Default for MonoidRegistry {
    /// Ships `B`, `Z2`, `Z3`, `N2` and `N3`.
    fn default() -> Self {
        let mut r = MonoidRegistry {
            monoids: BTreeMap::new(),
        };
        for m in [
            Monoid::boolean(),
            Monoid::cyclic(2),
            Monoid::cyclic(3),
            Monoid::truncated_naturals(2),
            Monoid::truncated_naturals(3),
        ] {
            r.register(m);
        }
        r
    }
}

impl MonoidRegistry {
    pub fn register(&mut self, m: Monoid) {
        self.monoids.insert(m.name().to_string(), Arc::new(m));
    }

    pub fn get(&self, name: &str) -> Result<Arc<Monoid>> {
        self.monoids
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownMonoid(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.monoids.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arc<Monoid>> {
        self.monoids.values()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_contents() {
        let r = MonoidRegistry::default();
        assert_eq!(r.names().collect::<Vec<_>>(), vec!["B", "N2", "N3", "Z2", "Z3"]);
        assert!(matches!(r.get("Z9"), Err(Error::UnknownMonoid(_))));
        assert_eq!(r.get("Z2").unwrap().add(1, 1), 0);
    }

    #[test]
    fn rejects_non_commutative() {
        // left-zero semigroup with an adjoined unit is not commutative
        let add = vec![vec![0, 1, 2], vec![1, 1, 1], vec![2, 2, 2]];
        assert!(Monoid::new("bad", 0, add).is_err());
    }

    #[test]
    fn json_table() {
        let t: MonoidTable = serde_json::from_str(r#"{"size":2,"zero":0,"add":[[0,1],[1,0]]}"#).unwrap();
        let m = Monoid::from_table("Z2x", &t).unwrap();
        assert_eq!(m.to_table(), t);
        let bad: MonoidTable = serde_json::from_str(r#"{"size":3,"zero":0,"add":[[0,1],[1,0]]}"#).unwrap();
        assert!(Monoid::from_table("bad", &bad).is_err());
    }
}
