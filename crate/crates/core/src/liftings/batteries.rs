use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{LiftCache, RelationLifting};
use crate::error::Result;
use crate::finset::{mask, FinFun, Rel};
use crate::report::{Report, Verdict, Witness};

fn rel_json(r: &Rel) -> serde_json::Value {
    serde_json::to_value(r.to_json()).expect("relation serializes")
}

fn graph_of(l: &dyn RelationLifting, f: &FinFun) -> Result<Rel> {
    Ok(Rel::graph(&*l.functor().apply_map(f)?))
}

fn carrier_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..=n).flat_map(|x| (0..=n).map(move |y| (x, y))).collect()
}

/// First map `f` within the bound with `Ē(graph f) ≠ graph(Ff)`.
fn graph_violation(cache: &LiftCache, n: usize, instances: &mut u64) -> Result<Option<Witness>> {
    let l = cache.lifting();
    for (x, y) in carrier_pairs(n) {
        for f in FinFun::all(x, y) {
            *instances += 1;
            let g = Rel::graph(&f);
            if cache.get(&g)? != &graph_of(l, &f)? {
                return Ok(Some(Witness::new(
                    "graph",
                    format!("Ē(graph {f}) ≠ graph(F {f})"),
                    json!({"f": f.images(), "cod": f.cod()}),
                )));
            }
        }
    }
    Ok(None)
}

/// Checks `Ē f = F f` for all maps and `Ē(s·r) = Ēs·Ēr` for all composable
/// relations between carriers of size at most `n`.
pub fn check_extension_axioms(l: &dyn RelationLifting, n: usize) -> Result<Report> {
    let start = Instant::now();
    let cache = LiftCache::new(l, n)?;
    let mut instances = 0;
    let mut witness = graph_violation(&cache, n, &mut instances)?;
    if witness.is_none() {
        let tasks: Vec<(usize, usize, usize, u64)> = (0..=n)
            .flat_map(|x| (0..=n).flat_map(move |y| (0..=n).map(move |z| (x, y, z))))
            .flat_map(|(x, y, z)| (0..1u64 << (x * y)).map(move |c| (x, y, z, c)))
            .collect();
        instances += tasks.iter().map(|&(_, y, z, _)| 1u64 << (y * z)).sum::<u64>();
        let found = tasks
            .par_iter()
            .map(|&(x, y, z, rc)| -> Result<Option<Witness>> {
                let r = Rel::from_code(x, y, rc);
                let lr = cache.get(&r)?;
                for sc in 0..1u64 << (y * z) {
                    let s = Rel::from_code(y, z, sc);
                    let lhs = cache.get(&r.then(&s)?)?;
                    let rhs = lr.then(cache.get(&s)?)?;
                    if lhs != &rhs {
                        let (kind, pair) = match rhs.first_not_in(lhs) {
                            Some(p) => ("Ēs·Ēr ⊄ Ē(s·r)", p),
                            None => ("Ē(s·r) ⊄ Ēs·Ēr", lhs.first_not_in(&rhs).unwrap()),
                        };
                        let f = cache.functor();
                        return Ok(Some(Witness::new(
                            "composition",
                            format!(
                                "r = {r}, s = {s}: {kind} at ({}, {})",
                                f.render(x, pair.0),
                                f.render(z, pair.1)
                            ),
                            json!({"r": rel_json(&r), "s": rel_json(&s), "pair": [pair.0, pair.1]}),
                        )));
                    }
                }
                Ok(None)
            })
            .find_map_first(|r| match r {
                Ok(None) => None,
                other => Some(other),
            });
        if let Some(w) = found {
            witness = w?;
        }
    }
    Ok(Report::from_witness("ext-check", witness)
        .with_instances(instances)
        .with_details(json!({"extension": l.describe(), "max_size": n}))
        .timed(start))
}

/// First covering pair `r ⊂ r ∪ {p}` with `Ē r ⊄ Ē(r ∪ {p})`.
fn monotonicity_violation(cache: &LiftCache, n: usize, instances: &mut u64) -> Result<Option<Witness>> {
    let tasks: Vec<(usize, usize, u64)> = carrier_pairs(n)
        .into_iter()
        .flat_map(|(x, y)| (0..1u64 << (x * y)).map(move |c| (x, y, c)))
        .collect();
    *instances += tasks.iter().map(|&(x, y, c)| (x * y) as u64 - c.count_ones() as u64).sum::<u64>();
    let found = tasks
        .par_iter()
        .map(|&(x, y, rc)| -> Result<Option<Witness>> {
            let r = Rel::from_code(x, y, rc);
            let lr = cache.get(&r)?;
            for bit in mask::members(!rc & mask::full(x * y)) {
                let r2 = Rel::from_code(x, y, rc | 1 << bit);
                let lr2 = cache.get(&r2)?;
                if let Some((a, b)) = lr.first_not_in(lr2) {
                    let f = cache.functor();
                    return Ok(Some(Witness::new(
                        "monotonicity",
                        format!(
                            "{r} ≤ {r2} but ({}, {}) ∈ Ē r is missing from Ē r′",
                            f.render(x, a),
                            f.render(y, b)
                        ),
                        json!({"r": rel_json(&r), "r_prime": rel_json(&r2), "pair": [a, b]}),
                    )));
                }
            }
            Ok(None)
        })
        .find_map_first(|r| match r {
            Ok(None) => None,
            other => Some(other),
        });
    found.transpose().map(Option::flatten)
}

/// Checks `r ≤ r′ ⟹ Ē r ≤ Ē r′` for relations between carriers of size at
/// most `n`.
pub fn check_local_monotonicity(l: &dyn RelationLifting, n: usize) -> Result<Report> {
    let start = Instant::now();
    let cache = LiftCache::new(l, n)?;
    let mut instances = 0;
    let w = monotonicity_violation(&cache, n, &mut instances)?;
    Ok(Report::from_witness("monotone-check", w)
        .with_instances(instances)
        .with_details(json!({"extension": l.describe(), "max_size": n}))
        .timed(start))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct InequalityOutcome {
    holds: bool,
    equal: bool,
}

/// `(Fi)° ≤ Ē(i°)` over injections, or `Ē(e°) ≤ (Fe)°` over surjections.
fn converse_comparison(
    l: &dyn RelationLifting,
    n: usize,
    injective: bool,
    instances: &mut u64,
) -> Result<(InequalityOutcome, Option<Witness>, Option<Witness>)> {
    let mut out = InequalityOutcome { holds: true, equal: true };
    let mut ineq_witness = None;
    let mut eq_witness = None;
    for (x, y) in carrier_pairs(n) {
        let maps: Vec<FinFun> = if injective {
            FinFun::injections(x, y).collect()
        } else {
            FinFun::surjections(x, y).collect()
        };
        for m in maps {
            *instances += 1;
            let lifted = l.lift(&Rel::graph(&m).converse())?;
            let fconv = graph_of(l, &m)?.converse();
            let (small, big) = if injective { (&fconv, &lifted) } else { (&lifted, &fconv) };
            let name = if injective { "injection" } else { "surjection" };
            if let Some((a, b)) = small.first_not_in(big) {
                out.holds = false;
                ineq_witness.get_or_insert_with(|| {
                    Witness::new(
                        name,
                        format!("{name} {m}: inequality fails at ({a}, {b})"),
                        json!({"map": m.images(), "cod": m.cod(), "pair": [a, b]}),
                    )
                });
            }
            if lifted != fconv {
                out.equal = false;
                eq_witness.get_or_insert_with(|| {
                    Witness::new(
                        format!("{name}-equality"),
                        format!("{name} {m}: Ē(m°) ≠ (Fm)°"),
                        json!({"map": m.images(), "cod": m.cod()}),
                    )
                });
            }
        }
    }
    Ok((out, ineq_witness, eq_witness))
}

/// `(Fi)° ≤ Ē(i°)` for injections and `Ē(e°) ≤ (Fe)°` for surjections
/// between carriers of size at most `n`.
pub fn lemma1_battery(l: &dyn RelationLifting, n: usize) -> Result<Report> {
    let start = Instant::now();
    let mut instances = 0;
    let (inj, wi, _) = converse_comparison(l, n, true, &mut instances)?;
    let (sur, ws, _) = converse_comparison(l, n, false, &mut instances)?;
    let mut r = Report::new("lemma1", if inj.holds && sur.holds { Verdict::Pass } else { Verdict::Fail });
    r.witnesses.extend(wi);
    r.witnesses.extend(ws);
    Ok(r.with_instances(instances)
        .with_details(json!({
            "extension": l.describe(),
            "max_size": n,
            "injections": {"holds": inj.holds, "equality": inj.equal},
            "surjections": {"holds": sur.holds, "equality": sur.equal},
        }))
        .timed(start))
}

/// The six conditions characterizing local monotonicity, each evaluated on
/// all instances within the bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma6 {
    pub locally_monotone: bool,
    pub below_identity: bool,
    pub above_identity: bool,
    pub injection_equality: bool,
    pub surjection_equality: bool,
    pub codiagonal: bool,
    pub witnesses: Vec<Witness>,
}

impl Lemma6 {
    pub fn values(&self) -> [bool; 6] {
        [
            self.locally_monotone,
            self.below_identity,
            self.above_identity,
            self.injection_equality,
            self.surjection_equality,
            self.codiagonal,
        ]
    }

    pub fn all_equal(&self) -> bool {
        let v = self.values();
        v.iter().all(|&b| b == v[0])
    }

    pub fn to_report(&self, describe: &str, n: usize, instances: u64) -> Report {
        let mut r = Report::new("lemma6", if self.all_equal() { Verdict::Pass } else { Verdict::Fail });
        if !self.all_equal() {
            r.witnesses = self.witnesses.clone();
        }
        r.with_instances(instances).with_details(json!({
            "extension": describe,
            "max_size": n,
            "conditions": self.values(),
            "all_equal": self.all_equal(),
            "violations": self.witnesses,
        }))
    }
}

/// Evaluates the six conditions on carriers of size at most `n`; the
/// codiagonal condition uses carriers `X` with `2|X| ≤ n`.
pub fn lemma6_battery(l: &dyn RelationLifting, n: usize) -> Result<(Lemma6, u64)> {
    let cache = LiftCache::new(l, n)?;
    let mut instances = 0;
    let mut witnesses = Vec::new();

    let w1 = monotonicity_violation(&cache, n, &mut instances)?;
    let locally_monotone = w1.is_none();
    witnesses.extend(w1);

    let mut below_identity = true;
    let mut above_identity = true;
    for x in 0..=n {
        let diag = Rel::identity(x).code();
        let fx = l.functor().size(x)?;
        let id = Rel::identity(fx);
        for sub in mask::submasks(diag) {
            instances += 1;
            let lr = cache.get(&Rel::from_code(x, x, sub))?;
            if below_identity && !lr.is_subset(&id) {
                below_identity = false;
                witnesses.push(Witness::new(
                    "below-identity",
                    format!("r = {} ≤ 1 but Ē r ≰ 1", Rel::from_code(x, x, sub)),
                    json!({"r": rel_json(&Rel::from_code(x, x, sub))}),
                ));
            }
        }
        let off = mask::full(x * x) & !diag;
        for extra in mask::submasks(off) {
            instances += 1;
            let r = Rel::from_code(x, x, diag | extra);
            let lr = cache.get(&r)?;
            if above_identity && !id.is_subset(lr) {
                above_identity = false;
                witnesses.push(Witness::new(
                    "above-identity",
                    format!("r = {r} ≥ 1 but Ē r ≱ 1"),
                    json!({"r": rel_json(&r)}),
                ));
            }
        }
    }

    let (inj, _, wi) = converse_comparison(l, n, true, &mut instances)?;
    let (sur, _, ws) = converse_comparison(l, n, false, &mut instances)?;
    witnesses.extend(wi);
    witnesses.extend(ws);

    let mut codiagonal = true;
    for x in (0..=n).take_while(|x| 2 * x <= n) {
        instances += 1;
        let nabla = FinFun::new(x, (0..2 * x).map(|i| i % x).collect())?;
        let rho1 = FinFun::new(2 * x, (0..x).collect())?;
        let lifted = cache.get(&Rel::graph(&nabla).converse())?;
        let g = graph_of(l, &rho1)?;
        if let Some((a, b)) = g.first_not_in(lifted) {
            codiagonal = false;
            witnesses.push(Witness::new(
                "codiagonal",
                format!("Fρ₁ ≰ Ē(∇°) on |X| = {x} at ({a}, {b})"),
                json!({"x": x, "pair": [a, b]}),
            ));
            break;
        }
    }

    Ok((
        Lemma6 {
            locally_monotone,
            below_identity,
            above_identity,
            injection_equality: inj.equal,
            surjection_equality: sur.equal,
            codiagonal,
            witnesses,
        },
        instances,
    ))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::functors::FunctorSpec;
    use crate::liftings::{Extension, ExtensionKind, Tabulated};

    fn ext(kind: ExtensionKind, f: &str) -> Extension {
        Extension::new(kind, Arc::new(FunctorSpec::parse_default(f).unwrap())).unwrap()
    }

    #[test]
    fn barr_over_powerset_passes() {
        let e = ext(ExtensionKind::Barr, "P(X)");
        assert!(check_extension_axioms(&e, 2).unwrap().passed());
        assert!(check_local_monotonicity(&e, 2).unwrap().passed());
    }

    #[test]
    fn image_is_not_monotone() {
        let e = ext(ExtensionKind::Image, "P(X)");
        let r = check_local_monotonicity(&e, 3).unwrap();
        assert!(!r.passed());
        let w = &r.witnesses[0].data;
        assert_eq!(w["r"]["dom"], 1);
        assert_eq!(w["r"]["pairs"].as_array().unwrap().len(), 0);
        assert_eq!(w["r_prime"]["pairs"], json!([[0, 0]]));
        assert_eq!(w["pair"], json!([1, 0]));
    }

    #[test]
    fn lemma1_negative_control() {
        let p = Arc::new(FunctorSpec::parse_default("P(X)").unwrap());
        let barr = ext(ExtensionKind::Barr, "P(X)");
        let t = Tabulated::from_lifting(&barr, p.clone(), 2).unwrap();
        assert!(lemma1_battery(&t, 2).unwrap().passed());
        // converse of the injection 1 → 2 hitting 0
        let i_conv = Rel::from_pairs(2, 1, [(0, 0)]).unwrap();
        let broken = t.with_entry(&i_conv, Rel::empty(4, 2)).unwrap();
        let r = lemma1_battery(&broken, 2).unwrap();
        assert!(!r.passed());
        assert_eq!(r.witnesses[0].kind, "injection");
    }

    #[test]
    fn lemma6_extremes() {
        let (b, _) = lemma6_battery(&ext(ExtensionKind::Barr, "P(X)"), 3).unwrap();
        assert_eq!(b.values(), [true; 6]);
        let (i, _) = lemma6_battery(&ext(ExtensionKind::Image, "P(X)"), 3).unwrap();
        assert_eq!(i.values(), [false; 6]);
    }
}
