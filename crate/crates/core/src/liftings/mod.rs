//! Extensions of set functors to relations.

mod batteries;
mod bounded;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use rayon::prelude::*;

pub use batteries::{
    check_extension_axioms, check_local_monotonicity, lemma1_battery, lemma6_battery, Lemma6,
};
pub use bounded::{
    check_codiagonal_formula, check_elementwise_bounded, check_ewb_witness_set, BoundedFamily,
    CodiagonalVerdict,
};

use crate::error::{Error, Result};
use crate::finset::{mask, FinFun, Rel, Span};
use crate::functors::{BaseFunctor, FunctorSpec};
use crate::pullbacks::{criterion_fill_in, fill_in_route, projected_pairs, FillIn};

/// Largest `|F(apex)|` for which the Barr lift enumerates the apex when a
/// closed-form criterion is also available.
const ENUMERATE_APEX_LIMIT: usize = 1 << 12;

/// An assignment `r ↦ Ē r` of relations between `F`-carriers.
pub trait RelationLifting: Sync {
    fn functor(&self) -> &FunctorSpec;

    /// `Ē r : F X ⇸ F Y`.
    fn lift(&self, r: &Rel) -> Result<Rel>;

    fn describe(&self) -> String;

    /// Largest carrier on which the lifting is defined, if limited.
    fn carrier_bound(&self) -> Option<usize> {
        None
    }
}

/// `F̄ r = Fπ₂ · (Fπ₁)°` over the canonical span of `r`.
pub fn barr_lift(spec: &FunctorSpec, r: &Rel) -> Result<Rel> {
    barr_lift_span(spec, &r.span_factorize())
}

/// `Fg · (Ff)°` for an arbitrary span `X ← S → Y`.
pub fn barr_lift_span(spec: &FunctorSpec, span: &Span) -> Result<Rel> {
    let fx = spec.size(span.left.cod())?;
    let fy = spec.size(span.right.cod())?;
    let route = fill_in_route(spec);
    let apex_size = spec.size(span.apex);
    let enumerate = match (&route, &apex_size) {
        (FillIn::Generic, _) => true,
        (FillIn::Criterion(_), Ok(n)) => *n <= ENUMERATE_APEX_LIMIT,
        (FillIn::Criterion(_), Err(_)) => false,
    };
    let mut out = Rel::empty(fx, fy);
    if enumerate {
        apex_size?;
        for (a, b) in projected_pairs(spec, span)? {
            out.insert(a, b);
        }
        return Ok(out);
    }
    let FillIn::Criterion(base) = route else { unreachable!() };
    for a in 0..fx {
        for b in 0..fy {
            if criterion_fill_in(spec, base, span, a, b)? {
                out.insert(a, b);
            }
        }
    }
    Ok(out)
}

/// Barr lift by the closed-form criterion only, for cross-checking.
pub fn barr_lift_by_criterion(spec: &FunctorSpec, r: &Rel) -> Result<Option<Rel>> {
    let FillIn::Criterion(base) = fill_in_route(spec) else {
        return Ok(None);
    };
    let span = r.span_factorize();
    let (fx, fy) = (spec.size(r.dom())?, spec.size(r.cod())?);
    let mut out = Rel::empty(fx, fy);
    for a in 0..fx {
        for b in 0..fy {
            if criterion_fill_in(spec, base, &span, a, b)? {
                out.insert(a, b);
            }
        }
    }
    Ok(Some(out))
}

/// The named rule-based extensions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExtensionKind {
    Barr,
    Image,
    RestrictedImage,
    BoxFilt,
    BoxMono,
    DiamondMono,
}

impl ExtensionKind {
    pub const ALL: [ExtensionKind; 6] = [
        ExtensionKind::Barr,
        ExtensionKind::Image,
        ExtensionKind::RestrictedImage,
        ExtensionKind::BoxFilt,
        ExtensionKind::BoxMono,
        ExtensionKind::DiamondMono,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExtensionKind::Barr => "barr",
            ExtensionKind::Image => "image",
            ExtensionKind::RestrictedImage => "restricted-image",
            ExtensionKind::BoxFilt => "box-filt",
            ExtensionKind::BoxMono => "box-mono",
            ExtensionKind::DiamondMono => "diamond-mono",
        }
    }

    fn required_base(self) -> Option<BaseFunctor> {
        match self {
            ExtensionKind::Barr => None,
            ExtensionKind::Image | ExtensionKind::RestrictedImage => Some(BaseFunctor::Powerset),
            ExtensionKind::BoxFilt => Some(BaseFunctor::Filter),
            ExtensionKind::BoxMono | ExtensionKind::DiamondMono => Some(BaseFunctor::Monotone),
        }
    }
}

impl fmt::Display for ExtensionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExtensionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.to_ascii_lowercase().chars().filter(|c| c.is_ascii_alphanumeric()).collect();
        Ok(match key.as_str() {
            "barr" => ExtensionKind::Barr,
            "image" => ExtensionKind::Image,
            "restrictedimage" => ExtensionKind::RestrictedImage,
            "boxfilt" => ExtensionKind::BoxFilt,
            "boxmono" => ExtensionKind::BoxMono,
            "diamondmono" => ExtensionKind::DiamondMono,
            _ => return Err(Error::usage(format!("unknown extension kind `{s}`"))),
        })
    }
}

/// `Ē r` for one of the named extensions.
pub fn named_extension(kind: ExtensionKind, spec: &FunctorSpec, r: &Rel) -> Result<Rel> {
    if let Some(b) = kind.required_base() {
        if !spec.is_base(&b) {
            return Err(Error::usage(format!("extension {kind} is not defined for {}", spec.expr())));
        }
    }
    let (x, y) = (r.dom(), r.cod());
    match kind {
        ExtensionKind::Barr => barr_lift(spec, r),
        ExtensionKind::Image | ExtensionKind::RestrictedImage => {
            let (fx, fy) = (spec.size(x)?, spec.size(y)?);
            let mut out = Rel::empty(fx, fy);
            for a in 0..fx {
                let b = r.image_mask(a as u64) as usize;
                if kind == ExtensionKind::Image || b != 0 || a == 0 {
                    out.insert(a, b);
                }
            }
            Ok(out)
        }
        ExtensionKind::BoxFilt => {
            // ↑{r[A] | A ⊇ U} = ↑r[U]
            let fx = spec.size(x)?;
            let mut out = Rel::empty(fx, spec.size(y)?);
            for u in 0..fx {
                out.insert(u, r.image_mask(u as u64) as usize);
            }
            Ok(out)
        }
        ExtensionKind::BoxMono | ExtensionKind::DiamondMono => {
            let tx = spec.base_table(x)?;
            let ty = spec.base_table(y)?;
            let conv = r.converse();
            let mut out = Rel::empty(tx.len(), ty.len());
            for a in 0..tx.len() {
                let sys = tx.system(a).expect("monotone table");
                let mut img = crate::finset::BitSet::new(1 << y);
                for b in 0..1u64 << y {
                    let member = if kind == ExtensionKind::BoxMono {
                        sys.iter().any(|s| mask::is_subset(r.image_mask(s as u64), b))
                    } else {
                        sys.contains(conv.image_mask(b) as usize)
                    };
                    if member {
                        img.insert(b as usize);
                    }
                }
                let idx = ty
                    .index_of_system(&img)
                    .ok_or_else(|| Error::usage(format!("{kind} produced a non-monotone system")))?;
                out.insert(a, idx);
            }
            Ok(out)
        }
    }
}

/// A rule-based extension of a functor.
#[derive(Clone, Debug)]
pub struct Extension {
    functor: Arc<FunctorSpec>,
    kind: ExtensionKind,
}

impl Extension {
    pub fn new(kind: ExtensionKind, functor: Arc<FunctorSpec>) -> Result<Self> {
        if let Some(b) = kind.required_base() {
            if !functor.is_base(&b) {
                return Err(Error::usage(format!("extension {kind} is not defined for {}", functor.expr())));
            }
        }
        Ok(Extension { functor, kind })
    }

    pub fn kind(&self) -> ExtensionKind {
        self.kind
    }

    pub fn functor_arc(&self) -> &Arc<FunctorSpec> {
        &self.functor
    }
}

impl RelationLifting for Extension {
    fn functor(&self) -> &FunctorSpec {
        &self.functor
    }

    fn lift(&self, r: &Rel) -> Result<Rel> {
        named_extension(self.kind, &self.functor, r)
    }

    fn describe(&self) -> String {
        format!("{} over {}", self.kind, self.functor.expr())
    }
}

/// An extension stored relation by relation for carrier pairs up to a
/// bound.
#[derive(Clone, Debug)]
pub struct Tabulated {
    functor: Arc<FunctorSpec>,
    bound: usize,
    table: HashMap<(usize, usize, u64), Rel>,
    name: String,
}

impl Tabulated {
    /// Builds a table, checking `Ē(graph f) = graph(Ff)` for every map
    /// within the bound.
    pub fn new(
        functor: Arc<FunctorSpec>,
        bound: usize,
        table: HashMap<(usize, usize, u64), Rel>,
        name: impl Into<String>,
    ) -> Result<Self> {
        let t = Tabulated {
            functor,
            bound,
            table,
            name: name.into(),
        };
        t.check_graphs()?;
        Ok(t)
    }

    /// Tabulates another lifting on all relations between carriers of size
    /// at most `bound`.
    pub fn from_lifting(source: &dyn RelationLifting, functor: Arc<FunctorSpec>, bound: usize) -> Result<Self> {
        if bound > 8 {
            return Err(Error::bound("tabulated carrier", bound, 8));
        }
        let keys: Vec<(usize, usize, u64)> = (0..=bound)
            .flat_map(|x| (0..=bound).map(move |y| (x, y)))
            .flat_map(|(x, y)| (0..1u64 << (x * y)).map(move |c| (x, y, c)))
            .collect();
        let table = keys
            .par_iter()
            .map(|&(x, y, c)| source.lift(&Rel::from_code(x, y, c)).map(|l| ((x, y, c), l)))
            .collect::<Result<HashMap<_, _>>>()?;
        Tabulated::new(functor, bound, table, format!("tabulated {}", source.describe()))
    }

    /// A copy with one entry replaced; the graph axiom is re-checked.
    pub fn with_entry(&self, r: &Rel, lifted: Rel) -> Result<Self> {
        let mut t = self.clone();
        t.table.insert((r.dom(), r.cod(), r.code()), lifted);
        t.name = format!("{} (modified)", self.name);
        t.check_graphs()?;
        Ok(t)
    }

    pub fn bound(&self) -> usize {
        self.bound
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(usize, usize, u64), &Rel)> {
        self.table.iter()
    }

    fn check_graphs(&self) -> Result<()> {
        for x in 0..=self.bound {
            for y in 0..=self.bound {
                for f in FinFun::all(x, y) {
                    let g = Rel::graph(&f);
                    let expected = Rel::graph(&*self.functor.apply_map(&f)?);
                    match self.table.get(&(x, y, g.code())) {
                        Some(l) if *l == expected => {}
                        Some(_) => {
                            return Err(Error::usage(format!("tabulated lift of graph {f} is not the graph of Ff")))
                        }
                        None => return Err(Error::usage(format!("table has no entry for {x}⇸{y}"))),
                    }
                }
            }
        }
        Ok(())
    }
}

impl RelationLifting for Tabulated {
    fn functor(&self) -> &FunctorSpec {
        &self.functor
    }

    fn lift(&self, r: &Rel) -> Result<Rel> {
        self.table
            .get(&(r.dom(), r.cod(), r.code()))
            .cloned()
            .ok_or_else(|| Error::bound("tabulated carrier", r.dom().max(r.cod()), self.bound))
    }

    fn describe(&self) -> String {
        self.name.clone()
    }

    fn carrier_bound(&self) -> Option<usize> {
        Some(self.bound)
    }
}

/// Lazily computed lifts of every relation between carriers up to `n`.
pub(crate) struct LiftCache<'a> {
    lifting: &'a dyn RelationLifting,
    n: usize,
    slots: Vec<Vec<OnceLock<Rel>>>,
}

impl<'a> LiftCache<'a> {
    pub fn new(lifting: &'a dyn RelationLifting, n: usize) -> Result<Self> {
        if let Some(b) = lifting.carrier_bound() {
            if n > b {
                return Err(Error::bound("carrier for tabulated extension", n, b));
            }
        }
        if n > 4 {
            return Err(Error::bound("relation sweep carrier", n, 4));
        }
        lifting.functor().size(n)?;
        let slots = (0..=n)
            .flat_map(|x| (0..=n).map(move |y| (x, y)))
            .map(|(x, y)| (0..1usize << (x * y)).map(|_| OnceLock::new()).collect())
            .collect();
        Ok(LiftCache { lifting, n, slots })
    }

    pub fn get(&self, r: &Rel) -> Result<&Rel> {
        let slot = &self.slots[r.dom() * (self.n + 1) + r.cod()][r.code() as usize];
        if let Some(l) = slot.get() {
            return Ok(l);
        }
        let l = self.lifting.lift(r)?;
        Ok(slot.get_or_init(|| l))
    }

    pub fn lifting(&self) -> &dyn RelationLifting {
        self.lifting
    }

    pub fn functor(&self) -> &FunctorSpec {
        self.lifting.functor()
    }
}
