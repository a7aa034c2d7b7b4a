//! Element tables for the elementary functors on a plain carrier `0..m`.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::finset::{mask, BitSet, FinFun};
use crate::functors::monoid::Monoid;

/// An elementary functor with its parameters resolved.
#[derive(Clone, Debug)]
pub enum Elementary {
    Powerset,
    BoundedPowerset(usize),
    MonoidValued(Arc<Monoid>),
    Neighbourhood,
    Monotone,
    Filter,
    Ultrafilter,
    Triples,
    Distribution(usize),
}

const DEDEKIND: [u128; 9] = [
    2,
    3,
    6,
    20,
    168,
    7581,
    7828354,
    2414682040998,
    56130437228687557907788,
];

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

impl Elementary {
    /// `|F(m)|`, or `None` when it does not fit in `u128`.
    pub fn count(&self, m: usize) -> Option<u128> {
        let m128 = m as u128;
        match self {
            Elementary::Powerset | Elementary::Filter => 1u128.checked_shl(m as u32).filter(|_| m < 128),
            Elementary::BoundedPowerset(k) => Some((0..=(*k).min(m)).map(|i| binomial(m128, i as u128)).sum()),
            Elementary::MonoidValued(mo) => (mo.size() as u128).checked_pow(m as u32),
            Elementary::Neighbourhood => {
                if m >= 7 {
                    None
                } else {
                    1u128.checked_shl(1 << m)
                }
            }
            Elementary::Monotone => DEDEKIND.get(m).copied(),
            Elementary::Ultrafilter => Some(m128),
            Elementary::Triples => Some(m128 * m128 * m128 - m128 * m128.saturating_sub(1) * m128.saturating_sub(2)),
            Elementary::Distribution(d) => {
                if m == 0 {
                    Some(0)
                } else {
                    Some(binomial(*d as u128 + m128 - 1, m128 - 1))
                }
            }
        }
    }

    /// Largest argument the table encoding supports.
    fn max_arg(&self) -> usize {
        match self {
            Elementary::Powerset | Elementary::Filter => 30,
            Elementary::BoundedPowerset(_) => 64,
            Elementary::Neighbourhood | Elementary::Monotone => 6,
            _ => usize::MAX,
        }
    }

    pub(crate) fn build(&self, m: usize) -> Result<BaseTable> {
        if m > self.max_arg() {
            return Err(Error::bound(format!("argument of {self:?}"), m, self.max_arg()));
        }
        Ok(match self {
            Elementary::Powerset => BaseTable::Powerset { m },
            Elementary::BoundedPowerset(k) => {
                let mut masks = Vec::new();
                bounded_masks(m, *k, &mut masks);
                masks.sort_unstable();
                BaseTable::Bounded { masks }
            }
            Elementary::MonoidValued(mo) => BaseTable::Monoid {
                m,
                monoid: mo.clone(),
                count: mo.size().pow(m as u32),
            },
            Elementary::Neighbourhood => BaseTable::Neighbourhood { m },
            Elementary::Monotone => {
                let systems = upsets(m);
                let index = systems.iter().enumerate().map(|(i, &s)| (s, i)).collect();
                BaseTable::Monotone { m, systems, index }
            }
            Elementary::Filter => BaseTable::Filter { m },
            Elementary::Ultrafilter => BaseTable::Ultrafilter { m },
            Elementary::Triples => {
                let mut triples = Vec::new();
                let mut index = vec![u32::MAX; m * m * m];
                for x in 0..m {
                    for y in 0..m {
                        for z in 0..m {
                            if x != y && y != z && x != z {
                                continue;
                            }
                            index[(x * m + y) * m + z] = triples.len() as u32;
                            triples.push([x as u32, y as u32, z as u32]);
                        }
                    }
                }
                BaseTable::Triples { m, triples, index }
            }
            Elementary::Distribution(d) => {
                let mut weights = Vec::new();
                if m > 0 {
                    let mut cur = vec![0u16; m];
                    compositions(*d as u16, 0, &mut cur, &mut weights);
                }
                let index = weights.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
                BaseTable::Distribution {
                    d: *d,
                    weights,
                    index,
                }
            }
        })
    }
}

fn bounded_masks(m: usize, k: usize, out: &mut Vec<u64>) {
    fn rec(start: usize, m: usize, left: usize, cur: u64, out: &mut Vec<u64>) {
        out.push(cur);
        if left == 0 {
            return;
        }
        for i in start..m {
            rec(i + 1, m, left - 1, cur | 1 << i, out);
        }
    }
    rec(0, m, k, 0, out);
}

/// All upward-closed systems of subsets of `0..m`, as masks over subset
/// indices, sorted ascending.
fn upsets(m: usize) -> Vec<u64> {
    let n_sub = 1usize << m;
    let mut order: Vec<usize> = (0..n_sub).collect();
    order.sort_by_key(|&s| std::cmp::Reverse((s as u64).count_ones()));
    let mut out = Vec::new();
    fn rec(order: &[usize], i: usize, m: usize, cur: u64, out: &mut Vec<u64>) {
        if i == order.len() {
            out.push(cur);
            return;
        }
        let s = order[i];
        rec(order, i + 1, m, cur, out);
        let supersets_in = (0..m).filter(|&e| s >> e & 1 == 0).all(|e| cur >> (s | 1 << e) & 1 == 1);
        if supersets_in {
            rec(order, i + 1, m, cur | 1 << s, out);
        }
    }
    rec(&order, 0, m, 0, &mut out);
    out.sort_unstable();
    out
}

fn compositions(left: u16, pos: usize, cur: &mut Vec<u16>, out: &mut Vec<Vec<u16>>) {
    if pos + 1 == cur.len() {
        cur[pos] = left;
        out.push(cur.clone());
        return;
    }
    for w in 0..=left {
        cur[pos] = w;
        compositions(left - w, pos + 1, cur, out);
    }
}

/// Materialized elements of `F(m)` for an elementary `F`.
#[derive(Debug)]
pub(crate) enum BaseTable {
    /// Index is the subset mask.
    Powerset { m: usize },
    Bounded { masks: Vec<u64> },
    /// Index is the coefficient vector read in base `|M|`, element 0 least significant.
    Monoid { m: usize, monoid: Arc<Monoid>, count: usize },
    /// Index is the system mask over subset indices.
    Neighbourhood { m: usize },
    Monotone { m: usize, systems: Vec<u64>, index: HashMap<u64, usize> },
    /// Index is the generator `U` of the principal filter `↑U`.
    Filter { m: usize },
    /// Index is the point `x` of `↑{x}`.
    Ultrafilter { m: usize },
    Triples { m: usize, triples: Vec<[u32; 3]>, index: Vec<u32> },
    Distribution { d: usize, weights: Vec<Vec<u16>>, index: HashMap<Vec<u16>, usize> },
}

impl BaseTable {
    pub fn len(&self) -> usize {
        match self {
            BaseTable::Powerset { m } | BaseTable::Filter { m } => 1 << m,
            BaseTable::Bounded { masks, .. } => masks.len(),
            BaseTable::Monoid { count, .. } => *count,
            BaseTable::Neighbourhood { m } => 1 << (1 << m),
            BaseTable::Monotone { systems, .. } => systems.len(),
            BaseTable::Ultrafilter { m } => *m,
            BaseTable::Triples { triples, .. } => triples.len(),
            BaseTable::Distribution { weights, .. } => weights.len(),
        }
    }

    /// Subset mask of element `i` for the powerset-like functors.
    pub fn subset(&self, i: usize) -> Option<u64> {
        match self {
            BaseTable::Powerset { .. } => Some(i as u64),
            BaseTable::Bounded { masks, .. } => Some(masks[i]),
            _ => None,
        }
    }

    /// Element `i` as a system of subsets (bit `S` set iff `S` belongs),
    /// for the neighbourhood-type functors.
    pub fn system(&self, i: usize) -> Option<BitSet> {
        match self {
            BaseTable::Neighbourhood { m } => Some(word_system(*m, i as u64)),
            BaseTable::Monotone { m, systems, .. } => Some(word_system(*m, systems[i])),
            BaseTable::Filter { m } => {
                let u = i as u64;
                Some(BitSet::from_indices(
                    1 << m,
                    (0..1u64 << m).filter(|&s| mask::is_subset(u, s)).map(|s| s as usize),
                ))
            }
            BaseTable::Ultrafilter { m } => Some(BitSet::from_indices(
                1 << m,
                (0..1usize << m).filter(|&s| s >> i & 1 == 1),
            )),
            _ => None,
        }
    }

    /// Whether the subset `set` belongs to the system of element `i`.
    pub fn system_contains(&self, i: usize, set: u64) -> Option<bool> {
        match self {
            BaseTable::Neighbourhood { .. } => Some((i as u64) >> set & 1 == 1),
            BaseTable::Monotone { systems, .. } => Some(systems[i] >> set & 1 == 1),
            BaseTable::Filter { .. } => Some(mask::is_subset(i as u64, set)),
            BaseTable::Ultrafilter { .. } => Some(set >> i & 1 == 1),
            _ => None,
        }
    }

    /// Inverse of [`BaseTable::system`]; `None` if the system is not an
    /// element of this functor.
    pub fn index_of_system(&self, sys: &BitSet) -> Option<usize> {
        match self {
            BaseTable::Neighbourhood { m } => {
                debug_assert_eq!(sys.len(), 1 << m);
                Some(sys.words().first().copied().unwrap_or(0) as usize)
            }
            BaseTable::Monotone { index, .. } => index.get(&sys.words()[0]).copied(),
            BaseTable::Filter { m } => {
                // ↑U: U is the least member, and every superset of U is a member
                let u = sys.iter().next()? as u64;
                let expected = (0..1u64 << m).filter(|&s| mask::is_subset(u, s)).count();
                (sys.count() == expected && sys.iter().all(|s| mask::is_subset(u, s as u64))).then_some(u as usize)
            }
            BaseTable::Ultrafilter { m } => {
                (0..*m).find(|&x| self.system(x).as_ref() == Some(sys))
            }
            _ => None,
        }
    }

    /// `F g : F(m) → F(m')` where `self` is the table for `m`.
    pub fn map(&self, target: &BaseTable, g: &FinFun) -> FinFun {
        let n = self.len();
        let images: Vec<usize> = match (self, target) {
            (BaseTable::Powerset { .. }, BaseTable::Powerset { .. }) => {
                (0..n).map(|i| g.image_mask(i as u64) as usize).collect()
            }
            (BaseTable::Bounded { masks, .. }, BaseTable::Bounded { masks: tm, .. }) => masks
                .iter()
                .map(|&s| tm.binary_search(&g.image_mask(s)).expect("image of bounded subset"))
                .collect(),
            (BaseTable::Monoid { m, monoid, .. }, BaseTable::Monoid { m: m2, .. }) => {
                let q = monoid.size();
                let mut digits = vec![0usize; *m];
                let mut out = vec![0usize; *m2];
                (0..n)
                    .map(|mut i| {
                        for d in digits.iter_mut() {
                            *d = i % q;
                            i /= q;
                        }
                        out.iter_mut().for_each(|c| *c = monoid.zero());
                        for (x, &c) in digits.iter().enumerate() {
                            let y = g.apply(x);
                            out[y] = monoid.add(out[y], c);
                        }
                        out.iter().rev().fold(0, |acc, &c| acc * q + c)
                    })
                    .collect()
            }
            (BaseTable::Neighbourhood { .. }, BaseTable::Neighbourhood { m: m2 }) => {
                let pre: Vec<u64> = (0..1u64 << m2).map(|b| g.preimage_mask(b)).collect();
                (0..n)
                    .map(|sys| {
                        pre.iter()
                            .enumerate()
                            .filter(|&(_, &p)| sys >> p & 1 == 1)
                            .fold(0usize, |acc, (b, _)| acc | 1 << b)
                    })
                    .collect()
            }
            (BaseTable::Monotone { systems, .. }, BaseTable::Monotone { m: m2, index, .. }) => {
                let pre: Vec<u64> = (0..1u64 << m2).map(|b| g.preimage_mask(b)).collect();
                systems
                    .iter()
                    .map(|&sys| {
                        let img = pre
                            .iter()
                            .enumerate()
                            .filter(|&(_, &p)| sys >> p & 1 == 1)
                            .fold(0u64, |acc, (b, _)| acc | 1 << b);
                        index[&img]
                    })
                    .collect()
            }
            (BaseTable::Filter { .. }, BaseTable::Filter { .. }) => {
                (0..n).map(|u| g.image_mask(u as u64) as usize).collect()
            }
            (BaseTable::Ultrafilter { .. }, BaseTable::Ultrafilter { .. }) => g.images().to_vec(),
            (BaseTable::Triples { triples, .. }, BaseTable::Triples { m: m2, index, .. }) => triples
                .iter()
                .map(|t| {
                    let [x, y, z] = t.map(|c| g.apply(c as usize));
                    index[(x * m2 + y) * m2 + z] as usize
                })
                .collect(),
            (BaseTable::Distribution { weights, .. }, BaseTable::Distribution { index, .. }) => {
                let m2 = g.cod();
                weights
                    .iter()
                    .map(|w| {
                        let mut out = vec![0u16; m2];
                        for (x, &c) in w.iter().enumerate() {
                            out[g.apply(x)] += c;
                        }
                        index[&out]
                    })
                    .collect()
            }
            _ => unreachable!("tables of different functors"),
        };
        FinFun::new_unchecked(target.len(), images)
    }

    pub fn render(&self, i: usize, label: &dyn Fn(usize) -> String) -> String {
        match self {
            BaseTable::Powerset { .. } | BaseTable::Bounded { .. } => mask::render(self.subset(i).unwrap(), label),
            BaseTable::Monoid { m, monoid, .. } => {
                let q = monoid.size();
                let mut rest = i;
                let mut terms = Vec::new();
                for x in 0..*m {
                    let c = rest % q;
                    rest /= q;
                    if c != monoid.zero() {
                        terms.push(format!("{c}·{}", label(x)));
                    }
                }
                if terms.is_empty() {
                    "0".to_string()
                } else {
                    terms.join(" + ")
                }
            }
            BaseTable::Neighbourhood { .. } | BaseTable::Monotone { .. } => {
                let sys = self.system(i).unwrap();
                let parts: Vec<String> = sys.iter().map(|s| mask::render(s as u64, label)).collect();
                format!("{{{}}}", parts.join(","))
            }
            BaseTable::Filter { .. } => format!("↑{}", mask::render(i as u64, label)),
            BaseTable::Ultrafilter { .. } => format!("↑{{{}}}", label(i)),
            BaseTable::Triples { triples, .. } => {
                let [x, y, z] = triples[i];
                format!("({},{},{})", label(x as usize), label(y as usize), label(z as usize))
            }
            BaseTable::Distribution { d, weights, .. } => {
                let terms: Vec<String> = weights[i]
                    .iter()
                    .enumerate()
                    .filter(|&(_, &w)| w > 0)
                    .map(|(x, &w)| format!("{w}/{d}·{}", label(x)))
                    .collect();
                terms.join(" + ")
            }
        }
    }
}

fn word_system(m: usize, sys: u64) -> BitSet {
    BitSet::from_indices(1 << m, mask::members(sys))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_match_tables() {
        let bases = [
            Elementary::Powerset,
            Elementary::BoundedPowerset(2),
            Elementary::MonoidValued(Arc::new(Monoid::cyclic(3))),
            Elementary::Neighbourhood,
            Elementary::Monotone,
            Elementary::Filter,
            Elementary::Ultrafilter,
            Elementary::Triples,
            Elementary::Distribution(2),
        ];
        for b in &bases {
            for m in 0..=4 {
                let t = b.build(m).unwrap();
                assert_eq!(t.len() as u128, b.count(m).unwrap(), "{b:?} on {m}");
            }
        }
    }

    #[test]
    fn monotone_systems_are_upsets() {
        for m in 0..=4 {
            for sys in upsets(m) {
                for s in mask::members(sys) {
                    for e in 0..m {
                        assert!(sys >> (s | 1 << e) & 1 == 1);
                    }
                }
            }
        }
    }

    #[test]
    fn filter_system_roundtrip() {
        let t = Elementary::Filter.build(3).unwrap();
        for u in 0..8 {
            let sys = t.system(u).unwrap();
            assert_eq!(t.index_of_system(&sys), Some(u));
        }
        let not_filter = BitSet::from_indices(8, [1, 2, 3, 5, 6, 7]);
        assert_eq!(t.index_of_system(&not_filter), None);
    }
}
