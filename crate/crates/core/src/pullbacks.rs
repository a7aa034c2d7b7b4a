//! Weak-pullback and inverse-image preservation, and the monoid conditions
//! governing monoid-valued functors.

use std::collections::{BTreeSet, HashSet};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::finset::{mask, FinFun, Span};
use crate::functors::{BaseFunctor, FunctorSpec, Monoid};
use crate::report::{Report, Witness};

/// A cospan `B → D ← C`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cospan {
    pub f: FinFun,
    pub g: FinFun,
}

impl Cospan {
    pub fn new(f: FinFun, g: FinFun) -> Result<Self> {
        if f.cod() != g.cod() {
            return Err(Error::usage(format!(
                "cospan legs have codomains {} and {}",
                f.cod(),
                g.cod()
            )));
        }
        Ok(Cospan { f, g })
    }

    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.f.dom(), self.g.dom(), self.f.cod())
    }
}

impl std::fmt::Display for Cospan {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let (b, c, d) = self.sizes();
        write!(fm, "f: {b}→{d} {}, g: {c}→{d} {}", self.f, self.g)
    }
}

/// The canonical pullback: apex `{(b,c) | f b = g c}` row-major.
pub fn pullback(c: &Cospan) -> Span {
    let mut left = Vec::new();
    let mut right = Vec::new();
    for b in 0..c.f.dom() {
        for x in 0..c.g.dom() {
            if c.f.apply(b) == c.g.apply(x) {
                left.push(b);
                right.push(x);
            }
        }
    }
    Span {
        apex: left.len(),
        left: FinFun::new(c.f.dom(), left).expect("projection"),
        right: FinFun::new(c.g.dom(), right).expect("projection"),
    }
}

/// A pair `(𝔟, 𝔠) ∈ FB × FC` over a cospan with no mediating element.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WpbWitness {
    pub cospan: Cospan,
    pub b: usize,
    pub c: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WpbVerdict {
    pub holds: bool,
    pub witness: Option<WpbWitness>,
    pub cospans_checked: u64,
}

/// Cospans with all carriers at most `n`, one per isomorphism class of
/// `(B, C, D, f, g)`, ordered by `(b+c+d, d, b, c, f, g)`.
pub fn cospans_upto(n: usize) -> Vec<Cospan> {
    let mut out = Vec::new();
    for total in 0..=3 * n {
        for d in 0..=n {
            for b in 0..=n {
                let Some(c) = total.checked_sub(b + d) else { continue };
                if c > n {
                    continue;
                }
                let perms = FinFun::permutations(d);
                let fs = sorted_vectors(b, d);
                let gs = sorted_vectors(c, d);
                for f in &fs {
                    for g in &gs {
                        if is_canonical(f, g, &perms) {
                            out.push(Cospan {
                                f: FinFun::new(d, f.clone()).unwrap(),
                                g: FinFun::new(d, g.clone()).unwrap(),
                            });
                        }
                    }
                }
            }
        }
    }
    out
}

/// Non-decreasing vectors of length `len` over `0..d`: one representative
/// of each map up to permutation of its domain.
fn sorted_vectors(len: usize, d: usize) -> Vec<Vec<usize>> {
    fn go(len: usize, d: usize, lo: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        for v in lo..d {
            cur.push(v);
            go(len, d, v, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(len, d, 0, &mut Vec::new(), &mut out);
    out
}

fn is_canonical(f: &[usize], g: &[usize], perms: &[FinFun]) -> bool {
    perms.iter().all(|p| {
        let mut pf: Vec<usize> = f.iter().map(|&y| p.apply(y)).collect();
        let mut pg: Vec<usize> = g.iter().map(|&y| p.apply(y)).collect();
        pf.sort_unstable();
        pg.sort_unstable();
        (f, g) <= (&pf[..], &pg[..])
    })
}

/// How mediating elements are searched for.
pub(crate) enum FillIn<'a> {
    /// Enumerate `F(apex)`.
    Generic,
    /// Closed-form criteria for the powerset and neighbourhood-type functors.
    Criterion(&'a BaseFunctor),
}

pub(crate) fn fill_in_route(spec: &FunctorSpec) -> FillIn<'_> {
    match spec.base_on_var() {
        Some(
            b @ (BaseFunctor::Powerset
            | BaseFunctor::Neighbourhood
            | BaseFunctor::Monotone
            | BaseFunctor::Filter
            | BaseFunctor::Ultrafilter),
        ) => FillIn::Criterion(b),
        _ => FillIn::Generic,
    }
}

/// All pairs `(𝔟, 𝔠)` with `Ff 𝔟 = Fg 𝔠`, lexicographically.
fn agreeing_pairs(spec: &FunctorSpec, c: &Cospan) -> Result<Vec<(usize, usize)>> {
    let ff = spec.apply_map(&c.f)?;
    let fg = spec.apply_map(&c.g)?;
    let mut by_image: Vec<Vec<usize>> = vec![Vec::new(); ff.cod()];
    for (y, &img) in fg.images().iter().enumerate() {
        by_image[img].push(y);
    }
    let mut out = Vec::new();
    for (x, &img) in ff.images().iter().enumerate() {
        out.extend(by_image[img].iter().map(|&y| (x, y)));
    }
    Ok(out)
}

/// Pairs `(Fπ₁ 𝔭, Fπ₂ 𝔭)` for `𝔭 ∈ F(apex)`, with multiplicity.
pub(crate) fn projected_pairs(spec: &FunctorSpec, span: &Span) -> Result<Vec<(usize, usize)>> {
    let l = spec.apply_map(&span.left)?;
    let r = spec.apply_map(&span.right)?;
    Ok(l.images().iter().copied().zip(r.images().iter().copied()).collect())
}

/// Whether some `𝔭 ∈ F(apex)` has `Fπ₁ 𝔭 = b` and `Fπ₂ 𝔭 = x`, by a
/// closed-form criterion for an elementary functor applied to `X`.
pub(crate) fn criterion_fill_in(spec: &FunctorSpec, base: &BaseFunctor, span: &Span, b: usize, x: usize) -> Result<bool> {
    let tb = spec.base_table(span.left.cod())?;
    let tc = spec.base_table(span.right.cod())?;
    if let BaseFunctor::Powerset = base {
        let (sb, sc) = (tb.subset(b).unwrap(), tc.subset(x).unwrap());
        let cand = (0..span.apex)
            .filter(|&p| sb >> span.left.apply(p) & 1 == 1 && sc >> span.right.apply(p) & 1 == 1)
            .fold(0u64, |m, p| m | 1 << p);
        return Ok(span.left.image_mask(cand) == sb && span.right.image_mask(cand) == sc);
    }
    let mut ins = Vec::new();
    let mut outs = Vec::new();
    for (t, proj, i) in [(&tb, &span.left, b), (&tc, &span.right, x)] {
        let sys = t.system(i).expect("neighbourhood-type table");
        for u in 0..1u64 << proj.cod() {
            let pre = proj.preimage_mask(u);
            if sys.contains(u as usize) {
                ins.push(pre);
            } else {
                outs.push(pre);
            }
        }
    }
    Ok(match base {
        BaseFunctor::Neighbourhood => {
            let ins: HashSet<u64> = ins.into_iter().collect();
            outs.iter().all(|o| !ins.contains(o))
        }
        BaseFunctor::Monotone => ins.iter().all(|&i| outs.iter().all(|&o| !mask::is_subset(i, o))),
        BaseFunctor::Filter => {
            let u = ins.iter().fold(mask::full(span.apex), |a, &i| a & i);
            outs.iter().all(|&o| !mask::is_subset(u, o))
        }
        BaseFunctor::Ultrafilter => (0..span.apex).any(|p| {
            ins.iter().all(|&i| i >> p & 1 == 1) && outs.iter().all(|&o| o >> p & 1 == 0)
        }),
        _ => unreachable!("criterion route"),
    })
}

/// First agreeing pair over `c` without a mediating element.
fn wpb_failure(spec: &FunctorSpec, c: &Cospan) -> Result<Option<(usize, usize)>> {
    let span = pullback(c);
    let pairs = agreeing_pairs(spec, c)?;
    match fill_in_route(spec) {
        FillIn::Criterion(base) => {
            for (b, x) in pairs {
                if !criterion_fill_in(spec, base, &span, b, x)? {
                    return Ok(Some((b, x)));
                }
            }
            Ok(None)
        }
        FillIn::Generic => {
            let hit: HashSet<(usize, usize)> = projected_pairs(spec, &span)?.into_iter().collect();
            Ok(pairs.into_iter().find(|p| !hit.contains(p)))
        }
    }
}

/// Whether `F` preserves weak pullbacks on all cospans with carriers at
/// most `n`; the witness is the first failure in canonical order.
pub fn check_wpb(spec: &FunctorSpec, n: usize) -> Result<WpbVerdict> {
    let cospans = cospans_upto(n);
    // surface resource errors before the parallel sweep
    spec.size(n)?;
    let found = cospans
        .par_iter()
        .enumerate()
        .map(|(i, c)| wpb_failure(spec, c).map(|w| w.map(|p| (i, p))))
        .find_map_first(|r| match r {
            Ok(None) => None,
            other => Some(other),
        });
    verdict_from(found, &cospans)
}

fn verdict_from(
    found: Option<Result<Option<(usize, (usize, usize))>>>,
    cospans: &[Cospan],
) -> Result<WpbVerdict> {
    match found {
        Some(Err(e)) => Err(e),
        Some(Ok(Some((i, (b, c))))) => Ok(WpbVerdict {
            holds: false,
            witness: Some(WpbWitness {
                cospan: cospans[i].clone(),
                b,
                c,
            }),
            cospans_checked: i as u64 + 1,
        }),
        _ => Ok(WpbVerdict {
            holds: true,
            witness: None,
            cospans_checked: cospans.len() as u64,
        }),
    }
}

/// First agreeing pair over `c` whose mediating element is missing or not
/// unique.
fn inverse_image_failure(spec: &FunctorSpec, c: &Cospan) -> Result<Option<(usize, usize)>> {
    let span = pullback(c);
    let pairs = agreeing_pairs(spec, c)?;
    let mut count = std::collections::HashMap::<(usize, usize), usize>::new();
    for p in projected_pairs(spec, &span)? {
        *count.entry(p).or_default() += 1;
    }
    Ok(pairs.into_iter().find(|p| count.get(p).copied() != Some(1)))
}

/// Whether `F` maps pullbacks along injections to pullbacks, for cospans
/// with carriers at most `n` and `g` injective.
pub fn check_inverse_images(spec: &FunctorSpec, n: usize) -> Result<WpbVerdict> {
    let cospans: Vec<Cospan> = cospans_upto(n).into_iter().filter(|c| c.g.is_injective()).collect();
    spec.size(n)?;
    let found = cospans
        .par_iter()
        .enumerate()
        .map(|(i, c)| inverse_image_failure(spec, c).map(|w| w.map(|p| (i, p))))
        .find_map_first(|r| match r {
            Ok(None) => None,
            other => Some(other),
        });
    verdict_from(found, &cospans)
}

/// Re-checks a weak-pullback witness by enumerating `F(apex)` when it fits
/// the resource bound, and by the closed-form criterion otherwise.
pub fn recheck_wpb_witness(spec: &FunctorSpec, w: &WpbWitness) -> Result<bool> {
    let c = &w.cospan;
    let ff = spec.apply_map(&c.f)?;
    let fg = spec.apply_map(&c.g)?;
    if w.b >= ff.dom() || w.c >= fg.dom() || ff.apply(w.b) != fg.apply(w.c) {
        return Ok(false);
    }
    let span = pullback(c);
    match spec.size(span.apex) {
        Ok(_) => Ok(!projected_pairs(spec, &span)?.contains(&(w.b, w.c))),
        Err(Error::Bound { .. }) => match fill_in_route(spec) {
            FillIn::Criterion(base) => Ok(!criterion_fill_in(spec, base, &span, w.b, w.c)?),
            FillIn::Generic => Err(Error::bound("F(apex)", "too large", spec.limit())),
        },
        Err(e) => Err(e),
    }
}

/// Re-checks an inverse-image witness.
pub fn recheck_inverse_image_witness(spec: &FunctorSpec, w: &WpbWitness) -> Result<bool> {
    if !w.cospan.g.is_injective() {
        return Ok(false);
    }
    let ff = spec.apply_map(&w.cospan.f)?;
    let fg = spec.apply_map(&w.cospan.g)?;
    if w.b >= ff.dom() || w.c >= fg.dom() || ff.apply(w.b) != fg.apply(w.c) {
        return Ok(false);
    }
    let span = pullback(&w.cospan);
    let n = projected_pairs(spec, &span)?.iter().filter(|&&p| p == (w.b, w.c)).count();
    Ok(n != 1)
}

pub fn wpb_witness_json(spec: &FunctorSpec, w: &WpbWitness) -> Witness {
    let (b, c, _) = w.cospan.sizes();
    let text = format!(
        "{}; 𝔟 = {}, 𝔠 = {} have no fill-in",
        w.cospan,
        spec.render(b, w.b),
        spec.render(c, w.c)
    );
    Witness::new("wpb", text, json!({"functor": spec.expr().to_string(), "witness": w}))
}

pub fn wpb_report(spec: &FunctorSpec, n: usize, inverse_images: bool) -> Result<Report> {
    let start = Instant::now();
    let v = if inverse_images {
        check_inverse_images(spec, n)?
    } else {
        check_wpb(spec, n)?
    };
    let mut w = v.witness.as_ref().map(|w| wpb_witness_json(spec, w));
    if let Some(w) = &mut w {
        if inverse_images {
            w.kind = "inverse-image".into();
            w.text = w.text.replace("have no fill-in", "have no unique fill-in");
        }
    }
    Ok(Report::from_witness(if inverse_images { "inverse-images" } else { "wpb" }, w)
        .with_instances(v.cospans_checked)
        .counter("cospans_checked", v.cospans_checked)
        .with_details(json!({
            "functor": spec.expr().to_string(),
            "max_size": n,
            "holds": v.holds,
            "witness": v.witness,
            "cospans_checked": v.cospans_checked,
        }))
        .timed(start))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonoidConditions {
    pub positive: bool,
    pub refinable: bool,
    /// `(a, b)` with `a + b = 0` and not both zero.
    pub positive_witness: Option<(usize, usize)>,
    /// `(a₁, a₂, b₁, b₂)` with equal sums and no refinement matrix.
    pub refinable_witness: Option<[usize; 4]>,
}

/// Positivity and 2×2 refinability of a finite commutative monoid.
pub fn check_monoid_conditions(m: &Monoid) -> MonoidConditions {
    let n = m.size();
    let z = m.zero();
    let positive_witness = (0..n)
        .flat_map(|a| (0..n).map(move |b| (a, b)))
        .find(|&(a, b)| m.add(a, b) == z && (a != z || b != z));
    let mut refinable_witness = None;
    'outer: for a1 in 0..n {
        for a2 in 0..n {
            for b1 in 0..n {
                for b2 in 0..n {
                    if m.add(a1, a2) != m.add(b1, b2) {
                        continue;
                    }
                    if !has_refinement(m, [a1, a2, b1, b2]) {
                        refinable_witness = Some([a1, a2, b1, b2]);
                        break 'outer;
                    }
                }
            }
        }
    }
    MonoidConditions {
        positive: positive_witness.is_none(),
        refinable: refinable_witness.is_none(),
        positive_witness,
        refinable_witness,
    }
}

/// `∃ c₁₁ c₁₂ c₂₁ c₂₂` with row sums `a₁, a₂` and column sums `b₁, b₂`.
fn has_refinement(m: &Monoid, [a1, a2, b1, b2]: [usize; 4]) -> bool {
    let n = m.size();
    (0..n).any(|c11| {
        (0..n).any(|c12| {
            m.add(c11, c12) == a1
                && (0..n).any(|c21| {
                    m.add(c11, c21) == b1 && (0..n).any(|c22| m.add(c21, c22) == a2 && m.add(c12, c22) == b2)
                })
        })
    })
}

pub fn monoid_report(m: &Monoid) -> Report {
    let c = check_monoid_conditions(m);
    let mut ws = Vec::new();
    if let Some((a, b)) = c.positive_witness {
        ws.push(Witness::new("positive", format!("{a} + {b} = {}", m.zero()), json!([a, b])));
    }
    if let Some([a1, a2, b1, b2]) = c.refinable_witness {
        ws.push(Witness::new(
            "refinable",
            format!("{a1} + {a2} = {b1} + {b2} has no refinement"),
            json!([a1, a2, b1, b2]),
        ));
    }
    let mut r = Report::from_witness("monoid", None);
    if !ws.is_empty() {
        r.verdict = crate::report::Verdict::Fail;
    }
    r.witnesses = ws;
    r.with_details(json!({"monoid": m.name(), "positive": c.positive, "refinable": c.refinable}))
        .with_instances((m.size() as u64).pow(4))
}

/// Distinct orbit keys of the cospans, for testing the deduplication.
pub fn cospan_class_key(c: &Cospan) -> (usize, usize, usize, BTreeSet<(Vec<usize>, Vec<usize>)>) {
    let (b, x, d) = c.sizes();
    let mut forms = BTreeSet::new();
    for p in FinFun::permutations(d) {
        let mut pf: Vec<usize> = c.f.images().iter().map(|&y| p.apply(y)).collect();
        let mut pg: Vec<usize> = c.g.images().iter().map(|&y| p.apply(y)).collect();
        pf.sort_unstable();
        pg.sort_unstable();
        forms.insert((pf, pg));
    }
    (b, x, d, forms)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(s: &str) -> FunctorSpec {
        FunctorSpec::parse_default(s).unwrap()
    }

    #[test]
    fn pullback_over_point_is_product() {
        let c = Cospan::new(FinFun::constant(2, 1, 0).unwrap(), FinFun::constant(3, 1, 0).unwrap()).unwrap();
        let s = pullback(&c);
        assert_eq!(s.apex, 6);
        assert_eq!(s.left.images(), &[0, 0, 0, 1, 1, 1]);
        assert_eq!(s.right.images(), &[0, 1, 2, 0, 1, 2]);
    }

    #[test]
    fn pullback_of_identities_is_diagonal() {
        let c = Cospan::new(FinFun::identity(3), FinFun::identity(3)).unwrap();
        let s = pullback(&c);
        assert_eq!(s.apex, 3);
        assert_eq!(s.left, FinFun::identity(3));
    }

    #[test]
    fn cospan_classes_are_distinct_and_complete() {
        let all = cospans_upto(2);
        let keys: HashSet<_> = all.iter().map(cospan_class_key).collect();
        assert_eq!(keys.len(), all.len());
        let mut brute = HashSet::new();
        for d in 0..=2 {
            for b in 0..=2 {
                for c in 0..=2 {
                    for f in FinFun::all(b, d) {
                        for g in FinFun::all(c, d) {
                            brute.insert(cospan_class_key(&Cospan { f: f.clone(), g }));
                        }
                    }
                }
            }
        }
        assert_eq!(brute, keys);
    }

    #[test]
    fn routes_agree_on_small_apex() {
        for name in ["P(X)", "Nb(X)", "Mono(X)", "Filt(X)", "Ultra(X)"] {
            let s = spec(name);
            let base = s.base_on_var().unwrap().clone();
            for c in cospans_upto(2) {
                let span = pullback(&c);
                let hit: HashSet<_> = projected_pairs(&s, &span).unwrap().into_iter().collect();
                for (b, x) in agreeing_pairs(&s, &c).unwrap() {
                    let crit = criterion_fill_in(&s, &base, &span, b, x).unwrap();
                    assert_eq!(crit, hit.contains(&(b, x)), "{name} {c} {b} {x}");
                }
            }
        }
    }

    #[test]
    fn monoid_examples() {
        let b = check_monoid_conditions(&Monoid::boolean());
        assert!(b.positive && b.refinable);
        let z2 = check_monoid_conditions(&Monoid::cyclic(2));
        assert!(!z2.positive);
        assert_eq!(z2.positive_witness, Some((1, 1)));
    }
}
