use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::finset::{mask, FinFun, FinSet};
use crate::functors::{inclusion, FunctorSpec};
use crate::report::{Report, Verdict, Witness};

/// A choice of copy-set size `|K_X|` for each carrier size, all at least 2.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundedFamily {
    default: usize,
    per_size: BTreeMap<usize, usize>,
}

impl BoundedFamily {
    pub fn constant(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::usage(format!("copy-set size {k} is below 2")));
        }
        Ok(BoundedFamily {
            default: k,
            per_size: BTreeMap::new(),
        })
    }

    pub fn with_size(mut self, n: usize, k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::usage(format!("copy-set size {k} is below 2")));
        }
        self.per_size.insert(n, k);
        Ok(self)
    }

    pub fn k_for(&self, n: usize) -> usize {
        self.per_size.get(&n).copied().unwrap_or(self.default)
    }
}

/// Union of the images of `F i_A` over the given subsets `A` of `0..n`.
fn covered(spec: &FunctorSpec, n: usize, subsets: impl IntoIterator<Item = u64>) -> Result<Vec<bool>> {
    let mut hit = vec![false; spec.size(n)?];
    for a in subsets {
        for &e in spec.apply_map(&inclusion(n, a))?.images() {
            hit[e] = true;
        }
    }
    Ok(hit)
}

/// For every `|X| ≤ n` and `𝔞 ∈ F(X × K_X)`, looks for `A ⊆ X × K_X` with
/// `𝔞 ∈ F A` that omits at least one copy of every `x`. Membership grows
/// with `A`, so only the maximal such sets (one omitted copy per `x`) are
/// tried.
pub fn check_elementwise_bounded(spec: &FunctorSpec, family: &BoundedFamily, n: usize) -> Result<Report> {
    let start = Instant::now();
    let mut instances = 0u64;
    let mut witness = None;
    for x in 0..=n {
        let k = family.k_for(x);
        let cells = x * k;
        if cells > 63 {
            return Err(Error::bound("X × K", cells, 63));
        }
        let choices = (k as u64)
            .checked_pow(x as u32)
            .filter(|&c| c <= 1 << 20)
            .ok_or_else(|| Error::bound("omitted-copy choices", format!("{k}^{x}"), 1 << 20))?;
        let maximal = (0..choices).map(|mut c| {
            let mut a = mask::full(cells);
            for row in 0..x {
                let omit = (c % k as u64) as usize;
                c /= k as u64;
                a &= !(1u64 << (row * k + omit));
            }
            a
        });
        let hit = covered(spec, cells, maximal)?;
        instances += hit.len() as u64;
        if let Some(e) = hit.iter().position(|&h| !h) {
            let labels = (0..cells).map(|i| format!("({},{})", i / k, i % k)).collect();
            let carrier = FinSet::with_labels(labels)?;
            witness = Some(Witness::new(
                "elementwise-bounded",
                format!(
                    "|X| = {x}, K = {k}: {} needs every copy of some element",
                    spec.render_in(&carrier, e)?
                ),
                json!({"x": x, "k": k, "element": e}),
            ));
            break;
        }
    }
    Ok(Report::from_witness("ewb", witness)
        .with_instances(instances)
        .with_details(json!({"functor": spec.expr().to_string(), "max_size": n, "family": family}))
        .timed(start))
}

/// Whether every `𝔞 ∈ Fκ` lies in `F A` for some proper subset `A ⊊ κ`.
pub fn check_ewb_witness_set(spec: &FunctorSpec, kappa: usize) -> Result<Report> {
    let start = Instant::now();
    if kappa < 2 {
        return Err(Error::usage(format!("witness set must have at least 2 elements, got {kappa}")));
    }
    let full = mask::full(kappa);
    let hit = covered(spec, kappa, (0..kappa).map(|i| full & !(1 << i)))?;
    let failing: Vec<usize> = (0..hit.len()).filter(|&e| !hit[e]).collect();
    let rendered: Vec<String> = failing.iter().map(|&e| spec.render(kappa, e)).collect();
    let mut r = Report::new("ewb-witness", if failing.is_empty() { Verdict::Pass } else { Verdict::Fail });
    if let Some(&e) = failing.first() {
        r.witnesses.push(Witness::new(
            "witness-set",
            format!("{} is in the image of no proper subset of κ = {kappa}", rendered[0]),
            json!({"kappa": kappa, "element": e}),
        ));
    }
    Ok(r.with_instances(hit.len() as u64)
        .counter("failing_elements", failing.len() as u64)
        .with_details(json!({
            "functor": spec.expr().to_string(),
            "kappa": kappa,
            "failing": failing,
            "failing_rendered": rendered,
        }))
        .timed(start))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodiagonalVerdict {
    /// `Fe ≥ ⋁ (Fρ₁)°·Ff`.
    pub geq: bool,
    pub equal: bool,
    /// Number of `f : Y → X + X` with `e · f° = ∇`.
    pub factorizations: usize,
    /// A pair of the join outside `Fe`, or a pair of `Fe` outside the join.
    pub witness: Option<(usize, usize)>,
}

/// Functions `f : Y → X + X` with `e · f° = ∇_X`: each `y` goes to a copy of
/// `e(y)` and every copy of every `x` is hit.
pub fn codiagonal_factorizations(e: &FinFun) -> Result<Vec<FinFun>> {
    let (y, x) = (e.dom(), e.cod());
    if y > 20 {
        return Err(Error::bound("2^|Y| codiagonal choices", format!("2^{y}"), 1 << 20));
    }
    let mut out = Vec::new();
    for side in 0..1u64 << y {
        let mut seen = vec![[false; 2]; x];
        let images: Vec<usize> = (0..y)
            .map(|i| {
                let s = (side >> i & 1) as usize;
                seen[e.apply(i)][s] = true;
                e.apply(i) + s * x
            })
            .collect();
        if seen.iter().all(|s| s[0] && s[1]) {
            out.push(FinFun::new(2 * x, images)?);
        }
    }
    Ok(out)
}

/// Compares `Fe` with `⋁{(Fρ₁)° · Ff | e · f° = ∇_X}`.
pub fn check_codiagonal_formula(spec: &FunctorSpec, e: &FinFun) -> Result<(CodiagonalVerdict, Report)> {
    let start = Instant::now();
    let x = e.cod();
    let fe = spec.apply_map(e)?;
    spec.size(2 * x)?;
    let rho1 = spec.apply_map(&FinFun::new(2 * x, (0..x).collect())?)?;
    let mut preimage_rho1: Vec<Vec<usize>> = vec![Vec::new(); rho1.cod()];
    for (a, &b) in rho1.images().iter().enumerate() {
        preimage_rho1[b].push(a);
    }
    let fs = codiagonal_factorizations(e)?;
    let mut join = crate::finset::Rel::empty(fe.dom(), fe.cod());
    for f in &fs {
        let ff = spec.apply_map(f)?;
        for (a, &b) in ff.images().iter().enumerate() {
            for &c in &preimage_rho1[b] {
                join.insert(a, c);
            }
        }
    }
    let graph = crate::finset::Rel::graph(&fe);
    let over = join.first_not_in(&graph);
    let under = graph.first_not_in(&join);
    let v = CodiagonalVerdict {
        geq: over.is_none(),
        equal: over.is_none() && under.is_none(),
        factorizations: fs.len(),
        witness: over.or(under),
    };
    let mut r = Report::new("codiagonal", if v.geq { Verdict::Pass } else { Verdict::Fail });
    if let Some((a, b)) = over {
        r.witnesses.push(Witness::new(
            "codiagonal",
            format!("({}, {}) is in the join but not in Fe", spec.render(e.dom(), a), spec.render(x, b)),
            json!({"pair": [a, b]}),
        ));
    }
    let r = r
        .with_instances(fs.len() as u64)
        .with_details(json!({
            "functor": spec.expr().to_string(),
            "e": e.images(),
            "geq": v.geq,
            "equal": v.equal,
            "factorizations": v.factorizations,
            "missing_from_join": under.map(|(a, b)| [a, b]),
        }))
        .timed(start);
    Ok((v, r))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(s: &str) -> FunctorSpec {
        FunctorSpec::parse_default(s).unwrap()
    }

    #[test]
    fn family_rejects_small_k() {
        assert!(BoundedFamily::constant(1).is_err());
        assert_eq!(BoundedFamily::constant(2).unwrap().with_size(3, 4).unwrap().k_for(3), 4);
    }

    #[test]
    fn factorization_count_by_brute_force() {
        let e = FinFun::new(2, vec![0, 0, 1, 1]).unwrap();
        let fast = codiagonal_factorizations(&e).unwrap();
        let brute: Vec<FinFun> = FinFun::all(4, 4)
            .filter(|f| {
                // e·f° = ∇: for each z the set {e(y) | f(y) = z} is {∇z}
                (0..4).all(|z| {
                    let ys: Vec<usize> = (0..4).filter(|&y| f.apply(y) == z).collect();
                    !ys.is_empty() && ys.iter().all(|&y| e.apply(y) == z % 2)
                })
            })
            .collect();
        assert_eq!(fast.len(), brute.len());
        assert_eq!(fast.len(), 4);
    }

    #[test]
    fn witness_set_examples() {
        let p = check_ewb_witness_set(&spec("P(X)"), 3).unwrap();
        assert!(!p.passed());
        assert_eq!(p.witnesses[0].data["element"], 7);
        assert!(check_ewb_witness_set(&spec("2"), 2).unwrap().passed());
        assert!(check_ewb_witness_set(&spec("P(X)"), 1).is_err());
    }
}
