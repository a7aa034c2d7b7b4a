//! Monads on finite carriers, monad morphisms out of the powerset monad, and
//! Kleisli laws `FP → PF`.

mod law;
mod morphism;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::json;

use crate::error::{Error, Result};
use crate::finset::{mask, BitSet, FinFun};
use crate::functors::FunctorSpec;
use crate::report::{Report, Witness};

pub use law::{
    check_distlaw_axioms, extension_to_law, kleisli_from_monad_morphism, law_to_extension, AxiomVerdict, DistLaw,
    direct_multiplication_sides, multiplication_sides, naturality_instance, recheck_law_witness, LawAxiomReport,
    LawExtension, LawRule, LawTable,
};
pub use morphism::{monad_morphism_check, MonadMorphism, MorphismKind};

/// A monad in Kleisli form: a unit and a bind `m ↦ μ_X(T h (m))`.
pub trait Monad: Sync {
    fn functor(&self) -> &FunctorSpec;
    fn name(&self) -> String;
    /// `e_X : X → T X`.
    fn unit(&self, n: usize) -> Result<FinFun>;
    /// `μ_X(T h (m))` for `m ∈ T S` and `h : S → T X` with `S = h.dom()`;
    /// `None` when the result is not an element of `T X`.
    fn bind(&self, m: usize, h: &FinFun, x: usize) -> Result<Option<usize>>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MonadKind {
    Powerset,
    Neighbourhood,
    Monotone,
    Filter,
    Terminal,
}

impl MonadKind {
    pub const ALL: [MonadKind; 5] = [
        MonadKind::Powerset,
        MonadKind::Filter,
        MonadKind::Monotone,
        MonadKind::Neighbourhood,
        MonadKind::Terminal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MonadKind::Powerset => "P",
            MonadKind::Neighbourhood => "Nb",
            MonadKind::Monotone => "Mono",
            MonadKind::Filter => "Filt",
            MonadKind::Terminal => "1",
        }
    }

    fn functor_text(self) -> &'static str {
        match self {
            MonadKind::Powerset => "P(X)",
            MonadKind::Neighbourhood => "Nb(X)",
            MonadKind::Monotone => "Mono(X)",
            MonadKind::Filter => "Filt(X)",
            MonadKind::Terminal => "1",
        }
    }
}

impl fmt::Display for MonadKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MonadKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "P" | "P(X)" | "powerset" => Ok(MonadKind::Powerset),
            "Nb" | "Nb(X)" => Ok(MonadKind::Neighbourhood),
            "Mono" | "Mono(X)" => Ok(MonadKind::Monotone),
            "Filt" | "Filt(X)" => Ok(MonadKind::Filter),
            "1" | "terminal" => Ok(MonadKind::Terminal),
            _ => Err(Error::usage(format!("unknown monad `{s}` (expected P, Filt, Mono, Nb or 1)"))),
        }
    }
}

/// One of the registry monads. The neighbourhood-type monads share the
/// multiplication `Φ ↦ {A | {U | A ∈ U} ∈ Φ}` and the principal-ultrafilter
/// unit.
#[derive(Debug)]
pub struct MonadSpec {
    kind: MonadKind,
    functor: Arc<FunctorSpec>,
}

impl MonadSpec {
    pub fn new(kind: MonadKind) -> Self {
        let functor = FunctorSpec::parse_default(kind.functor_text()).expect("registry functor parses");
        MonadSpec {
            kind,
            functor: Arc::new(functor),
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        Ok(MonadSpec::new(name.parse()?))
    }

    pub fn kind(&self) -> MonadKind {
        self.kind
    }

    pub fn functor_arc(&self) -> &Arc<FunctorSpec> {
        &self.functor
    }

    /// `μ_X : T T X → T X`.
    pub fn mult(&self, n: usize) -> Result<FinFun> {
        let tn = self.functor.size(n)?;
        let ttn = self.functor.size(tn)?;
        let id = FinFun::identity(tn);
        let images = (0..ttn)
            .map(|m| {
                self.bind(m, &id, n)?
                    .ok_or_else(|| Error::usage(format!("{} multiplication leaves T X", self.kind)))
            })
            .collect::<Result<Vec<_>>>()?;
        FinFun::new(tn, images)
    }
}

impl Monad for MonadSpec {
    fn functor(&self) -> &FunctorSpec {
        &self.functor
    }

    fn name(&self) -> String {
        self.kind.name().to_string()
    }

    fn unit(&self, n: usize) -> Result<FinFun> {
        let size = self.functor.size(n)?;
        let images = match self.kind {
            MonadKind::Terminal => vec![0; n],
            MonadKind::Powerset | MonadKind::Filter => (0..n).map(|x| 1 << x).collect(),
            MonadKind::Neighbourhood | MonadKind::Monotone => {
                let t = self.functor.base_table(n)?;
                (0..n)
                    .map(|x| {
                        let sys = BitSet::from_indices(1 << n, (0..1usize << n).filter(|s| s >> x & 1 == 1));
                        t.index_of_system(&sys).expect("principal ultrafilter is monotone")
                    })
                    .collect()
            }
        };
        FinFun::new(size, images)
    }

    fn bind(&self, m: usize, h: &FinFun, x: usize) -> Result<Option<usize>> {
        let s = h.dom();
        match self.kind {
            MonadKind::Terminal => Ok(Some(0)),
            MonadKind::Powerset => Ok(Some(mask::members(m as u64).fold(0, |acc, i| acc | h.apply(i)))),
            _ => {
                if s > 63 {
                    return Err(Error::bound("bind domain", s, 63));
                }
                let ts = self.functor.base_table(s)?;
                let tx = self.functor.base_table(x)?;
                let mut sys = BitSet::new(1 << x);
                for a in 0..1u64 << x {
                    let hits = (0..s)
                        .filter(|&i| tx.system_contains(h.apply(i), a).unwrap_or(false))
                        .fold(0u64, |acc, i| acc | 1 << i);
                    if ts.system_contains(m, hits).unwrap_or(false) {
                        sys.insert(a as usize);
                    }
                }
                Ok(tx.index_of_system(&sys))
            }
        }
    }
}

/// Functions `dom → cod`: all of them when there are at most `budget`,
/// otherwise `budget` seeded random ones.
fn maps_or_sample(dom: usize, cod: usize, budget: usize, rng: &mut StdRng) -> (Vec<FinFun>, bool) {
    let total = (cod as u128).checked_pow(dom as u32).unwrap_or(u128::MAX);
    if total <= budget as u128 {
        return (FinFun::all(dom, cod).collect(), false);
    }
    let maps = (0..budget)
        .map(|_| FinFun::new_unchecked(cod, (0..dom).map(|_| rng.gen_range(0..cod)).collect()))
        .collect();
    (maps, true)
}

fn elements_or_sample(size: usize, budget: usize, rng: &mut StdRng) -> (Vec<usize>, bool) {
    if size <= budget {
        ((0..size).collect(), false)
    } else {
        ((0..budget).map(|_| rng.gen_range(0..size)).collect(), true)
    }
}

const SAMPLE_SEED: u64 = 0x5eed;

fn monad_witness(t: &dyn Monad, law: &str, text: String, data: serde_json::Value) -> Witness {
    let mut data = data;
    data["monad"] = json!(t.name());
    data["law"] = json!(law);
    Witness::new("monad-law", format!("{}: {law}: {text}", t.name()), data)
}

/// Unit naturality, `T f = bind(-, e ∘ f)`, both unit laws and associativity
/// of bind at carriers `≤ n`. Function spaces too large to enumerate are
/// sampled with a fixed seed; the report says so.
pub fn monad_axiom_check(t: &dyn Monad, n: usize) -> Result<Report> {
    let start = Instant::now();
    let f = t.functor();
    let mut rng = StdRng::seed_from_u64(SAMPLE_SEED);
    let mut sampled = false;
    let mut instances = 0u64;
    let witness = (|| -> Result<Option<Witness>> {
        let units: Vec<FinFun> = (0..=n).map(|k| t.unit(k)).collect::<Result<_>>()?;
        for x in 0..=n {
            for y in 0..=n {
                for g in FinFun::all(x, y) {
                    let tg = f.apply_map(&g)?;
                    for a in 0..x {
                        instances += 1;
                        if tg.apply(units[x].apply(a)) != units[y].apply(g.apply(a)) {
                            return Ok(Some(monad_witness(
                                t,
                                "unit-naturality",
                                format!("T f (e {a}) ≠ e (f {a})"),
                                json!({"f": g.images(), "f_cod": y, "element": a}),
                            )));
                        }
                    }
                    let eg = g.then(&units[y])?;
                    let (ms, sm) = elements_or_sample(tg.dom(), 256, &mut rng);
                    sampled |= sm;
                    for m in ms {
                        instances += 1;
                        if t.bind(m, &eg, y)? != Some(tg.apply(m)) {
                            return Ok(Some(monad_witness(
                                t,
                                "map-coherence",
                                format!("T f ({}) differs from bind with e ∘ f", f.render(x, m)),
                                json!({"f": g.images(), "f_cod": y, "element": m}),
                            )));
                        }
                    }
                }
            }
        }
        for s in 0..=n {
            let ts = f.size(s)?;
            for x in 0..=n {
                let tx = f.size(x)?;
                let (hs, sh) = maps_or_sample(s, tx, 64, &mut rng);
                sampled |= sh;
                for h in &hs {
                    for i in 0..s {
                        instances += 1;
                        if t.bind(units[s].apply(i), h, x)? != Some(h.apply(i)) {
                            return Ok(Some(monad_witness(
                                t,
                                "left-unit",
                                format!("bind(e {i}, h) ≠ h({i})"),
                                json!({"s": s, "x": x, "h": h.images(), "element": i}),
                            )));
                        }
                    }
                }
                if x == s {
                    for m in 0..ts.min(4096) {
                        instances += 1;
                        if t.bind(m, &units[s], s)? != Some(m) {
                            return Ok(Some(monad_witness(
                                t,
                                "right-unit",
                                format!("bind({}, e) ≠ itself", f.render(s, m)),
                                json!({"s": s, "element": m}),
                            )));
                        }
                    }
                    sampled |= ts > 4096;
                }
                let (ms, sm) = elements_or_sample(ts, 16, &mut rng);
                sampled |= sm;
                let hs: Vec<&FinFun> = hs.iter().take(32).collect();
                for z in 0..=n {
                    let (ks, sk) = maps_or_sample(x, f.size(z)?, 32, &mut rng);
                    sampled |= sk;
                    for h in &hs {
                        for k in &ks {
                            let Some(hk) = (0..s)
                                .map(|i| t.bind(h.apply(i), k, z))
                                .collect::<Result<Option<Vec<usize>>>>()?
                            else {
                                return Ok(Some(closure_witness(t, s, x, z, h, k)));
                            };
                            let hk = FinFun::new(f.size(z)?, hk)?;
                            for &m in &ms {
                                instances += 1;
                                let Some(mh) = t.bind(m, h, x)? else {
                                    return Ok(Some(closure_witness(t, s, x, z, h, k)));
                                };
                                if t.bind(mh, k, z)? != t.bind(m, &hk, z)? {
                                    return Ok(Some(monad_witness(
                                        t,
                                        "associativity",
                                        format!("bind(bind({}, h), k) ≠ bind(m, bind(h, k))", f.render(s, m)),
                                        json!({"s": s, "x": x, "z": z, "element": m, "h": h.images(), "k": k.images()}),
                                    )));
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(None)
    })()?;
    Ok(Report::from_witness("monad-check", witness)
        .with_instances(instances)
        .counter("sampled", sampled as u64)
        .with_details(json!({"monad": t.name(), "max_size": n, "sampled": sampled, "seed": SAMPLE_SEED}))
        .timed(start))
}

fn closure_witness(t: &dyn Monad, s: usize, x: usize, z: usize, h: &FinFun, k: &FinFun) -> Witness {
    monad_witness(
        t,
        "closure",
        "bind leaves T X".to_string(),
        json!({"s": s, "x": x, "z": z, "h": h.images(), "k": k.images()}),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Powerset with union replaced by intersection.
    struct Meet(MonadSpec);

    impl Monad for Meet {
        fn functor(&self) -> &FunctorSpec {
            self.0.functor()
        }
        fn name(&self) -> String {
            "P-meet".into()
        }
        fn unit(&self, n: usize) -> Result<FinFun> {
            self.0.unit(n)
        }
        fn bind(&self, m: usize, h: &FinFun, x: usize) -> Result<Option<usize>> {
            let full = mask::full(x) as usize;
            Ok(Some(mask::members(m as u64).fold(full, |acc, i| acc & h.apply(i))))
        }
    }

    #[test]
    fn registry_monads_pass_at_small_sizes() {
        for kind in [MonadKind::Powerset, MonadKind::Filter, MonadKind::Terminal] {
            let r = monad_axiom_check(&MonadSpec::new(kind), 3).unwrap();
            assert!(r.passed(), "{kind}: {:?}", r.witnesses);
        }
        for kind in [MonadKind::Monotone, MonadKind::Neighbourhood] {
            let r = monad_axiom_check(&MonadSpec::new(kind), 2).unwrap();
            assert!(r.passed(), "{kind}: {:?}", r.witnesses);
        }
    }

    #[test]
    fn intersection_mult_fails() {
        let r = monad_axiom_check(&Meet(MonadSpec::new(MonadKind::Powerset)), 2).unwrap();
        assert!(!r.passed());
    }

    #[test]
    fn powerset_mult_is_union() {
        let p = MonadSpec::new(MonadKind::Powerset);
        let mu = p.mult(2).unwrap();
        // {{0},{1}} has mask 0b0110 over subset indices
        assert_eq!(mu.apply(0b0110), 0b11);
        assert_eq!(mu.apply(0), 0);
    }

    #[test]
    fn filter_unit_and_mult() {
        let t = MonadSpec::new(MonadKind::Filter);
        assert_eq!(t.unit(3).unwrap().images(), &[1, 2, 4]);
        let mu = t.mult(2).unwrap();
        // ↑{↑{0}} flattens to ↑{0}
        assert_eq!(mu.apply(1 << 1), 1);
    }
}
