use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finset::{mask, FinFun};
use crate::functors::FunctorSpec;

/// Naturality constraints above this many are generated from a set of
/// generating maps instead of every map.
const ALL_MAPS_BUDGET: usize = 1 << 22;

/// Where a constraint comes from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Origin {
    /// `σ_n(Fη(element)) = {element}`, at output `z`.
    Unit { n: usize, element: usize, z: usize },
    /// `σ_Y(FPf(element)) = PFf(σ_X(element))`, at output `z ∈ FY`.
    Naturality { f: Vec<usize>, f_cod: usize, element: usize, z: usize },
    /// Support-bounded multiplication at `B = b ⊆ P x`, `𝔅 = element`,
    /// output `z ∈ Fx`.
    Multiplication { x: usize, b: Vec<u64>, element: usize, z: usize },
}

/// `target ↔ ⋁ᵢ ⋀ⱼ terms[i][j]`. An empty term is true; no terms is false.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constraint {
    pub target: u32,
    pub terms: Vec<Vec<u32>>,
    pub origin: Origin,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrbitRep {
    pub rep: usize,
    pub size: usize,
    /// Indices into [`FinFun::permutations`] fixing the representative.
    pub stabilizer: Vec<usize>,
}

/// Orbits of `F(P n)` under the symmetric group on `n`; the representative
/// is the least index of its orbit.
pub fn enumerate_orbit_reps(f: &FunctorSpec, n: usize) -> Result<Vec<OrbitRep>> {
    let size = f.size(1 << n)?;
    let actions = permutation_actions(f, n)?;
    let mut seen = vec![false; size];
    let mut out = Vec::new();
    for a in 0..size {
        if seen[a] {
            continue;
        }
        let mut orbit = BTreeSet::new();
        let mut stabilizer = Vec::new();
        for (i, act) in actions.iter().enumerate() {
            let b = act.apply(a);
            orbit.insert(b);
            if b == a {
                stabilizer.push(i);
            }
        }
        for &b in &orbit {
            seen[b] = true;
        }
        out.push(OrbitRep {
            rep: a,
            size: orbit.len(),
            stabilizer,
        });
    }
    Ok(out)
}

fn permutation_actions(f: &FunctorSpec, n: usize) -> Result<Vec<Arc<FinFun>>> {
    FinFun::permutations(n).iter().map(|p| f.apply_map(&image_map(p))).collect()
}

pub(crate) fn image_map(f: &FinFun) -> FinFun {
    FinFun::new_unchecked(1 << f.cod(), (0..1u64 << f.dom()).map(|s| f.image_mask(s) as usize).collect())
}

pub(crate) fn union_map(b: &[u64], n: usize) -> FinFun {
    FinFun::new_unchecked(
        1 << n,
        (0..1u64 << b.len())
            .map(|m| mask::members(m).fold(0u64, |acc, i| acc | b[i]) as usize)
            .collect(),
    )
}

/// Variables `b(n, a, y)` meaning `y ∈ σ_n(a)`, and the law constraints
/// between them.
#[derive(Clone, Debug)]
pub struct LawCSP {
    functor: Arc<FunctorSpec>,
    bound: usize,
    support: usize,
    /// First variable of carrier `n`.
    offsets: Vec<usize>,
    /// `|F(P n)|`.
    rows: Vec<usize>,
    /// `|F n|`.
    outputs: Vec<usize>,
    pub(crate) constraints: Vec<Constraint>,
    /// Variables in branching order.
    pub(crate) order: Vec<u32>,
    all_maps: bool,
}

impl LawCSP {
    /// Variables only, no constraints.
    pub fn layout(functor: Arc<FunctorSpec>, bound: usize, support: usize) -> Result<LawCSP> {
        let limit = functor.limit();
        LawCSP::layout_with_limit(functor, bound, support, limit)
    }

    pub(crate) fn layout_with_limit(functor: Arc<FunctorSpec>, bound: usize, support: usize, limit: usize) -> Result<LawCSP> {
        if bound == 0 {
            return Err(Error::usage("search bound must be at least 1"));
        }
        let mut offsets = vec![0];
        let mut rows = Vec::new();
        let mut outputs = Vec::new();
        for n in 0..=bound {
            let r = functor.size(1 << n)?;
            let o = functor.size(n)?;
            rows.push(r);
            outputs.push(o);
            let next = offsets[n] + r * o;
            if next > limit {
                return Err(Error::bound("law variables", next, limit));
            }
            offsets.push(next);
        }
        Ok(LawCSP {
            functor,
            bound,
            support,
            offsets,
            rows,
            outputs,
            constraints: Vec::new(),
            order: Vec::new(),
            all_maps: true,
        })
    }

    pub fn functor(&self) -> &Arc<FunctorSpec> {
        &self.functor
    }

    pub fn bound(&self) -> usize {
        self.bound
    }

    pub fn support(&self) -> usize {
        self.support
    }

    pub fn num_vars(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    /// Whether naturality was generated along every map (otherwise along
    /// generators: transpositions, cycles, inclusions, collapses).
    pub fn naturality_along_all_maps(&self) -> bool {
        self.all_maps
    }

    pub fn rows(&self, n: usize) -> usize {
        self.rows[n]
    }

    pub fn outputs(&self, n: usize) -> usize {
        self.outputs[n]
    }

    pub fn var(&self, n: usize, a: usize, y: usize) -> u32 {
        (self.offsets[n] + a * self.outputs[n] + y) as u32
    }

    pub fn decode(&self, v: u32) -> (usize, usize, usize) {
        let v = v as usize;
        let n = self.offsets.partition_point(|&o| o <= v) - 1;
        let local = v - self.offsets[n];
        (n, local / self.outputs[n], local % self.outputs[n])
    }

    /// Whether a full assignment satisfies every constraint.
    pub fn satisfied_by(&self, values: &[bool]) -> bool {
        self.constraints.iter().all(|c| constraint_holds(c, values))
    }

    /// First violated constraint, if any.
    pub fn first_violation(&self, values: &[bool]) -> Option<&Constraint> {
        self.constraints.iter().find(|c| !constraint_holds(c, values))
    }

    /// Regenerates the constraint a recorded origin stands for.
    pub fn constraint_for(&self, origin: &Origin) -> Result<Constraint> {
        let f = &self.functor;
        match origin {
            Origin::Unit { n, element, z } => {
                let feta = f.apply_map(&FinFun::new(1 << n, (0..*n).map(|x| 1 << x).collect())?)?;
                Ok(unit_constraint(self, *n, feta.apply(*element), *element, *z))
            }
            Origin::Naturality { f: images, f_cod, element, z } => {
                let g = FinFun::new(*f_cod, images.clone())?;
                let fpg = f.apply_map(&image_map(&g))?;
                let fg = f.apply_map(&g)?;
                Ok(naturality_constraint(self, &g, &fpg, &fg, *element, *z))
            }
            Origin::Multiplication { x, b, element, z } => {
                let j = FinFun::new(1 << x, b.iter().map(|&s| s as usize).collect())?;
                let fj = f.apply_map(&j)?;
                let fmu = f.apply_map(&union_map(b, *x))?;
                Ok(multiplication_constraint(self, *x, b, &fj, &fmu, *element, *z))
            }
        }
    }
}

pub(crate) fn constraint_holds(c: &Constraint, values: &[bool]) -> bool {
    let rhs = c.terms.iter().any(|t| t.iter().all(|&v| values[v as usize]));
    values[c.target as usize] == rhs
}

pub(super) fn unit_constraint(csp: &LawCSP, n: usize, row: usize, element: usize, z: usize) -> Constraint {
    Constraint {
        target: csp.var(n, row, z),
        terms: if z == element { vec![vec![]] } else { vec![] },
        origin: Origin::Unit { n, element, z },
    }
}

pub(super) fn naturality_constraint(csp: &LawCSP, g: &FinFun, fpg: &FinFun, fg: &FinFun, a: usize, z: usize) -> Constraint {
    let (x, y) = (g.dom(), g.cod());
    Constraint {
        target: csp.var(y, fpg.apply(a), z),
        terms: (0..fg.dom())
            .filter(|&w| fg.apply(w) == z)
            .map(|w| vec![csp.var(x, a, w)])
            .collect(),
        origin: Origin::Naturality {
            f: g.images().to_vec(),
            f_cod: y,
            element: a,
            z,
        },
    }
}

fn multiplication_constraint(
    csp: &LawCSP,
    x: usize,
    b: &[u64],
    fj: &FinFun,
    fmu: &FinFun,
    frak: usize,
    z: usize,
) -> Constraint {
    let k = b.len();
    Constraint {
        target: csp.var(x, fmu.apply(frak), z),
        terms: (0..csp.outputs[k])
            .map(|c| vec![csp.var(k, frak, c), csp.var(x, fj.apply(c), z)])
            .collect(),
        origin: Origin::Multiplication {
            x,
            b: b.to_vec(),
            element: frak,
            z,
        },
    }
}

/// Maps generating all maps between carriers `≤ n` under composition.
pub(super) fn generating_maps(n: usize) -> Vec<FinFun> {
    let mut out = Vec::new();
    for k in 0..=n {
        if k >= 2 {
            let mut swap: Vec<usize> = (0..k).collect();
            swap.swap(0, 1);
            out.push(FinFun::new_unchecked(k, swap));
        }
        if k >= 3 {
            out.push(FinFun::new_unchecked(k, (0..k).map(|i| (i + 1) % k).collect()));
        }
        if k < n {
            out.push(FinFun::new_unchecked(k + 1, (0..k).collect()));
            if k >= 1 {
                out.push(FinFun::new_unchecked(k, (0..=k).map(|i| i.saturating_sub(1)).collect()));
            }
        }
    }
    out
}

/// Sorted subsets `B ⊆ P x` with `|B| ≤ k`, one per orbit under
/// permutations of `x`.
pub(super) fn support_reps(x: usize, k: usize) -> Vec<Vec<u64>> {
    let perms: Vec<FinFun> = FinFun::permutations(x);
    let mut out = Vec::new();
    fn rec(start: u64, m: u64, left: usize, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        out.push(cur.clone());
        if left == 0 {
            return;
        }
        for i in start..m {
            cur.push(i);
            rec(i + 1, m, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut all = Vec::new();
    rec(0, 1 << x, k, &mut Vec::new(), &mut all);
    for b in all {
        let canonical = perms.iter().all(|p| {
            let mut img: Vec<u64> = b.iter().map(|&s| p.image_mask(s)).collect();
            img.sort_unstable();
            img >= b
        });
        if canonical {
            out.push(b);
        }
    }
    out.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
    out
}

/// Builds the constraint system for laws of `F` on carriers `≤ bound` with
/// multiplication instances of support `≤ support`.
pub fn build_csp(functor: Arc<FunctorSpec>, bound: usize, support: usize) -> Result<LawCSP> {
    let mut csp = LawCSP::layout(functor, bound, support)?;
    let f = csp.functor.clone();
    for n in 0..=bound {
        let feta = f.apply_map(&FinFun::new(1 << n, (0..n).map(|x| 1 << x).collect())?)?;
        for a in 0..csp.outputs[n] {
            for z in 0..csp.outputs[n] {
                let c = unit_constraint(&csp, n, feta.apply(a), a, z);
                csp.constraints.push(c);
            }
        }
    }

    let mut all: Vec<FinFun> = Vec::new();
    for x in 0..=bound {
        for y in 0..=bound {
            all.extend(FinFun::all(x, y).filter(|g| !(x == y && g.images().iter().enumerate().all(|(i, &v)| i == v))));
        }
    }
    let cost: usize = all.iter().map(|g| csp.rows[g.dom()] * csp.outputs[g.cod()]).sum();
    let maps = if cost <= ALL_MAPS_BUDGET {
        all
    } else {
        csp.all_maps = false;
        generating_maps(bound)
    };
    for g in &maps {
        let fpg = f.apply_map(&image_map(g))?;
        let fg = f.apply_map(g)?;
        for a in 0..csp.rows[g.dom()] {
            for z in 0..csp.outputs[g.cod()] {
                let c = naturality_constraint(&csp, g, &fpg, &fg, a, z);
                csp.constraints.push(c);
            }
        }
    }

    let k_max = support.min(bound);
    for x in 0..=bound {
        for b in support_reps(x, k_max) {
            let j = FinFun::new(1 << x, b.iter().map(|&s| s as usize).collect())?;
            let fj = f.apply_map(&j)?;
            let fmu = f.apply_map(&union_map(&b, x))?;
            for frak in 0..csp.rows[b.len()] {
                for z in 0..csp.outputs[x] {
                    let c = multiplication_constraint(&csp, x, &b, &fj, &fmu, frak, z);
                    csp.constraints.push(c);
                }
            }
        }
        if csp.constraints.len() > 1 << 25 {
            return Err(Error::bound("law constraints", csp.constraints.len(), 1 << 25));
        }
    }

    let mut order = Vec::with_capacity(csp.num_vars());
    let mut in_order = vec![false; csp.num_vars()];
    for n in 0..=bound {
        let mut reps = enumerate_orbit_reps(&f, n)?;
        reps.sort_by(|p, q| q.size.cmp(&p.size).then(p.rep.cmp(&q.rep)));
        for r in reps {
            for y in 0..csp.outputs[n] {
                let v = csp.var(n, r.rep, y);
                order.push(v);
                in_order[v as usize] = true;
            }
        }
    }
    order.extend((0..csp.num_vars() as u32).filter(|&v| !in_order[v as usize]));
    csp.order = order;
    Ok(csp)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(s: &str) -> Arc<FunctorSpec> {
        Arc::new(FunctorSpec::parse_default(s).unwrap())
    }

    #[test]
    fn orbit_counts() {
        // oracle: count orbits by brute force over explicit swaps of PP2
        let swap = |s: u64| (s & 1) << 1 | (s & 2) >> 1;
        let mut orbits = BTreeSet::new();
        for fam in 0..16u64 {
            let img = mask::members(fam).fold(0u64, |acc, s| acc | 1 << swap(s as u64));
            orbits.insert(fam.min(img));
        }
        assert_eq!(enumerate_orbit_reps(&spec("P(X)"), 2).unwrap().len(), orbits.len());
        assert_eq!(orbits.len(), 12);
        assert_eq!(enumerate_orbit_reps(&spec("P(X)"), 1).unwrap().len(), 4);
        assert_eq!(enumerate_orbit_reps(&spec("2"), 3).unwrap().len(), 2);
    }

    #[test]
    fn variable_count_for_powerset() {
        let csp = build_csp(spec("P(X)"), 3, 3).unwrap();
        assert_eq!(csp.num_vars(), 2 + 8 + 64 + 2048);
        assert_eq!(csp.decode(csp.var(2, 5, 3)), (2, 5, 3));
    }

    #[test]
    fn generators_produce_every_map() {
        let n = 3;
        let gens = generating_maps(n);
        let mut reached: BTreeSet<(usize, Vec<usize>)> = (0..=n).map(|k| (k, (0..k).collect())).collect();
        loop {
            let mut next = reached.clone();
            for (cod, f) in &reached {
                let f = FinFun::new(*cod, f.clone()).unwrap();
                for g in gens.iter().filter(|g| g.dom() == *cod) {
                    let h = f.then(g).unwrap();
                    next.insert((h.cod(), h.images().to_vec()));
                }
            }
            if next.len() == reached.len() {
                break;
            }
            reached = next;
        }
        for x in 0..=n {
            for y in 0..=n {
                for f in FinFun::all(x, y) {
                    assert!(reached.contains(&(y, f.images().to_vec())), "{x} -> {y}: {:?}", f.images());
                }
            }
        }
    }

    #[test]
    fn support_reps_are_orbit_reps() {
        // P 2 = {∅,{0},{1},{0,1}} with the swap exchanging {0} and {1}:
        // 1 + 3 + 4 orbits of subsets of size 0, 1, 2
        assert_eq!(support_reps(2, 2).len(), 8);
    }
}
