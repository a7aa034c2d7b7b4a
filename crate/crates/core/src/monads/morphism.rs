use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use serde_json::json;

use super::{Monad, MonadKind, MonadSpec};
use crate::error::{Error, Result};
use crate::finset::{mask, BitSet, FinFun};
use crate::report::{Report, Witness};

/// The monad morphisms out of the powerset monad that the registry knows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MorphismKind {
    Identity,
    Terminal,
    /// `U ↦ {A | U ⊆ A}` into filters.
    BoxFilt,
    /// `U ↦ {A | U ⊆ A}` into monotone systems.
    BoxMono,
    /// `U ↦ {A | U ∩ A ≠ ∅}` into monotone systems.
    DiamondMono,
    /// The diamond systems read as filters; not a monad morphism.
    DiamondFilt,
}

impl MorphismKind {
    pub const ALL: [MorphismKind; 6] = [
        MorphismKind::Identity,
        MorphismKind::Terminal,
        MorphismKind::BoxFilt,
        MorphismKind::BoxMono,
        MorphismKind::DiamondMono,
        MorphismKind::DiamondFilt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MorphismKind::Identity => "identity",
            MorphismKind::Terminal => "terminal",
            MorphismKind::BoxFilt => "box-filt",
            MorphismKind::BoxMono => "box-mono",
            MorphismKind::DiamondMono => "diamond-mono",
            MorphismKind::DiamondFilt => "diamond-filt",
        }
    }

    pub fn target(self) -> MonadKind {
        match self {
            MorphismKind::Identity => MonadKind::Powerset,
            MorphismKind::Terminal => MonadKind::Terminal,
            MorphismKind::BoxFilt | MorphismKind::DiamondFilt => MonadKind::Filter,
            MorphismKind::BoxMono | MorphismKind::DiamondMono => MonadKind::Monotone,
        }
    }
}

impl fmt::Display for MorphismKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MorphismKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.chars().filter(|c| c.is_alphanumeric()).collect::<String>().to_lowercase();
        MorphismKind::ALL
            .into_iter()
            .find(|k| k.name().replace('-', "") == key)
            .ok_or_else(|| {
                let names: Vec<&str> = MorphismKind::ALL.iter().map(|k| k.name()).collect();
                Error::usage(format!("unknown monad morphism `{s}` (expected one of {})", names.join(", ")))
            })
    }
}

/// A natural transformation `λ : P → T` given componentwise.
#[derive(Debug)]
pub struct MonadMorphism {
    kind: MorphismKind,
    source: MonadSpec,
    target: Arc<MonadSpec>,
}

impl MonadMorphism {
    pub fn new(kind: MorphismKind) -> Self {
        MonadMorphism {
            kind,
            source: MonadSpec::new(MonadKind::Powerset),
            target: Arc::new(MonadSpec::new(kind.target())),
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        Ok(MonadMorphism::new(name.parse()?))
    }

    pub fn kind(&self) -> MorphismKind {
        self.kind
    }

    pub fn source(&self) -> &MonadSpec {
        &self.source
    }

    pub fn target(&self) -> &MonadSpec {
        &self.target
    }

    /// `λ_X(U)` for every `U ⊆ X`; `None` where the system is not in `T X`.
    pub fn raw_component(&self, n: usize) -> Result<Vec<Option<usize>>> {
        let subsets = 0..1u64 << n;
        Ok(match self.kind {
            MorphismKind::Identity | MorphismKind::BoxFilt => subsets.map(|u| Some(u as usize)).collect(),
            MorphismKind::Terminal => subsets.map(|_| Some(0)).collect(),
            MorphismKind::BoxMono | MorphismKind::DiamondMono | MorphismKind::DiamondFilt => {
                let t = self.target.functor().base_table(n)?;
                let boxed = self.kind == MorphismKind::BoxMono;
                subsets
                    .map(|u| {
                        let sys = BitSet::from_indices(
                            1 << n,
                            (0..1u64 << n)
                                .filter(|&a| if boxed { mask::is_subset(u, a) } else { u & a != 0 })
                                .map(|a| a as usize),
                        );
                        t.index_of_system(&sys)
                    })
                    .collect()
            }
        })
    }

    /// `λ_X : P X → T X`.
    pub fn component(&self, n: usize) -> Result<FinFun> {
        let raw = self.raw_component(n)?;
        let images = raw
            .iter()
            .enumerate()
            .map(|(u, c)| {
                c.ok_or_else(|| {
                    Error::usage(format!(
                        "{}: the image of {} is not an element of {}",
                        self.kind,
                        mask::render(u as u64, |i| i.to_string()),
                        self.target.kind()
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        FinFun::new(self.target.functor().size(n)?, images)
    }
}

fn morphism_witness(l: &MonadMorphism, law: &str, text: String, data: serde_json::Value) -> Witness {
    let mut data = data;
    data["morphism"] = json!(l.kind.name());
    data["law"] = json!(law);
    Witness::new("monad-morphism", format!("{}: {law}: {text}", l.kind), data)
}

/// Well-definedness, naturality, the unit square and the multiplication
/// square (in Kleisli form) at carriers `≤ n`.
pub fn monad_morphism_check(l: &MonadMorphism, n: usize) -> Result<Report> {
    let start = Instant::now();
    let mut instances = 0u64;
    let witness = (|| -> Result<Option<Witness>> {
        let t = l.target();
        let p = l.source();
        let mut comps = Vec::new();
        for k in 0..=n {
            let raw = l.raw_component(k)?;
            instances += raw.len() as u64;
            if let Some(u) = raw.iter().position(Option::is_none) {
                return Ok(Some(morphism_witness(
                    l,
                    "component",
                    format!(
                        "the image of {} is not an element of {}",
                        mask::render(u as u64, |i| i.to_string()),
                        t.kind()
                    ),
                    json!({"size": k, "element": u}),
                )));
            }
            comps.push(l.component(k)?);
        }
        for x in 0..=n {
            for y in 0..=n {
                for f in FinFun::all(x, y) {
                    let pf = p.functor().apply_map(&f)?;
                    let tf = t.functor().apply_map(&f)?;
                    for u in 0..pf.dom() {
                        instances += 1;
                        if comps[y].apply(pf.apply(u)) != tf.apply(comps[x].apply(u)) {
                            return Ok(Some(morphism_witness(
                                l,
                                "naturality",
                                format!("λ ∘ P f ≠ T f ∘ λ at {}", mask::render(u as u64, |i| i.to_string())),
                                json!({"f": f.images(), "f_cod": y, "element": u}),
                            )));
                        }
                    }
                }
            }
        }
        for x in 0..=n {
            let ep = p.unit(x)?;
            let et = t.unit(x)?;
            for a in 0..x {
                instances += 1;
                if comps[x].apply(ep.apply(a)) != et.apply(a) {
                    return Ok(Some(morphism_witness(
                        l,
                        "unit",
                        format!("λ{{{a}}} ≠ e({a})"),
                        json!({"size": x, "element": a}),
                    )));
                }
            }
        }
        for s in 0..=n {
            for x in 0..=n {
                for h in FinFun::all(s, 1 << x) {
                    let lh = h.then(&comps[x])?;
                    for m in 0..1usize << s {
                        instances += 1;
                        let lhs = p.bind(m, &h, x)?.map(|u| comps[x].apply(u));
                        let rhs = t.bind(comps[s].apply(m), &lh, x)?;
                        if lhs != rhs {
                            return Ok(Some(morphism_witness(
                                l,
                                "multiplication",
                                format!(
                                    "λ(⋃ h[{}]) ≠ bind(λ m, λ ∘ h)",
                                    mask::render(m as u64, |i| i.to_string())
                                ),
                                json!({"s": s, "x": x, "element": m, "h": h.images()}),
                            )));
                        }
                    }
                }
            }
        }
        Ok(None)
    })()?;
    Ok(Report::from_witness("morphism-check", witness)
        .with_instances(instances)
        .with_details(json!({
            "morphism": l.kind.name(),
            "source": "P",
            "target": l.target.kind().name(),
            "max_size": n,
        }))
        .timed(start))
}
