use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, RwLock};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::{Monad, MonadMorphism};
use crate::error::{Error, Result};
use crate::finset::{mask, BitSet, FinFun, FinSet, Rel};
use crate::functors::{BaseFunctor, FunctorSpec};
use crate::liftings::{barr_lift, RelationLifting};
use crate::report::{Report, Verdict, Witness};

/// Largest carrier on which a law component `F(PX) → P(FX)` is computed.
const MAX_LAW_CARRIER: usize = 5;

#[derive(Clone)]
pub enum LawRule {
    Barr,
    Image,
    RestrictedImage,
    FromMorphism(Arc<MonadMorphism>),
    FromExtension(Arc<dyn RelationLifting + Send>),
}

impl fmt::Debug for LawRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LawRule::Barr => f.write_str("Barr"),
            LawRule::Image => f.write_str("Image"),
            LawRule::RestrictedImage => f.write_str("RestrictedImage"),
            LawRule::FromMorphism(l) => write!(f, "FromMorphism({})", l.kind()),
            LawRule::FromExtension(e) => write!(f, "FromExtension({})", e.describe()),
        }
    }
}

/// Components `σ_n : F(P n) → P(F n)` for every `n ≤ bound`. Row `a` of
/// carrier `n` is indexed by `F` on the carrier `2^n` of subset masks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LawTable {
    bound: usize,
    rows: Vec<Arc<Vec<BitSet>>>,
}

impl LawTable {
    pub fn new(functor: &FunctorSpec, rows: Vec<Vec<BitSet>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::usage("a law table needs at least the empty carrier"));
        }
        for (n, r) in rows.iter().enumerate() {
            let dom = functor.size(1 << n)?;
            let cod = functor.size(n)?;
            if r.len() != dom || r.iter().any(|s| s.len() != cod) {
                return Err(Error::usage(format!(
                    "law table for carrier {n} must have {dom} rows over {cod} outputs"
                )));
            }
        }
        Ok(LawTable {
            bound: rows.len() - 1,
            rows: rows.into_iter().map(Arc::new).collect(),
        })
    }

    pub fn bound(&self) -> usize {
        self.bound
    }

    pub fn rows(&self, n: usize) -> &[BitSet] {
        &self.rows[n]
    }
}

#[derive(Clone, Debug)]
enum LawForm {
    Rule(LawRule),
    Table(LawTable),
}

/// A Kleisli law `σ : FP → PF`.
#[derive(Debug)]
pub struct DistLaw {
    functor: Arc<FunctorSpec>,
    form: LawForm,
    name: String,
    cache: RwLock<HashMap<usize, Arc<Vec<BitSet>>>>,
}

impl DistLaw {
    pub fn rule(functor: Arc<FunctorSpec>, rule: LawRule) -> Result<Self> {
        let name = match &rule {
            LawRule::Barr => "barr".to_string(),
            LawRule::Image | LawRule::RestrictedImage => {
                if !functor.is_base(&BaseFunctor::Powerset) {
                    return Err(Error::usage(format!("{rule:?} law is defined for P(X) only")));
                }
                if matches!(rule, LawRule::Image) { "image" } else { "restricted-image" }.to_string()
            }
            LawRule::FromMorphism(l) => {
                if l.target().functor().expr() != functor.expr() {
                    return Err(Error::usage(format!(
                        "morphism {} lands in {}, not {}",
                        l.kind(),
                        l.target().functor().expr(),
                        functor.expr()
                    )));
                }
                format!("from-morphism:{}", l.kind())
            }
            LawRule::FromExtension(e) => format!("from-extension:{}", e.describe()),
        };
        Ok(DistLaw {
            functor,
            form: LawForm::Rule(rule),
            name,
            cache: RwLock::default(),
        })
    }

    pub fn table(functor: Arc<FunctorSpec>, table: LawTable, name: impl Into<String>) -> Self {
        DistLaw {
            functor,
            form: LawForm::Table(table),
            name: name.into(),
            cache: RwLock::default(),
        }
    }

    /// `barr | image | restricted-image | from-morphism:<name>`.
    pub fn by_name(name: &str, functor: Arc<FunctorSpec>) -> Result<Self> {
        let rule = match name {
            "barr" => LawRule::Barr,
            "image" => LawRule::Image,
            "restricted-image" => LawRule::RestrictedImage,
            _ => match name.strip_prefix("from-morphism:") {
                Some(m) => LawRule::FromMorphism(Arc::new(MonadMorphism::by_name(m)?)),
                None => {
                    return Err(Error::usage(format!(
                        "unknown law `{name}` (expected barr, image, restricted-image or from-morphism:<name>)"
                    )))
                }
            },
        };
        DistLaw::rule(functor, rule)
    }

    pub fn functor(&self) -> &FunctorSpec {
        &self.functor
    }

    pub fn functor_arc(&self) -> &Arc<FunctorSpec> {
        &self.functor
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_table(&self) -> bool {
        matches!(self.form, LawForm::Table(_))
    }

    pub fn rule_kind(&self) -> Option<&LawRule> {
        match &self.form {
            LawForm::Rule(r) => Some(r),
            LawForm::Table(_) => None,
        }
    }

    /// Largest carrier with a defined component.
    pub fn carrier_bound(&self) -> usize {
        match &self.form {
            LawForm::Table(t) => t.bound,
            LawForm::Rule(LawRule::FromExtension(e)) => match e.carrier_bound() {
                Some(b) => (usize::BITS - 1 - b.max(1).leading_zeros()) as usize,
                None => MAX_LAW_CARRIER,
            },
            LawForm::Rule(_) => MAX_LAW_CARRIER,
        }
    }

    /// All rows of `σ_n`.
    pub fn components(&self, n: usize) -> Result<Arc<Vec<BitSet>>> {
        if n > self.carrier_bound() {
            return Err(Error::bound("law carrier", n, self.carrier_bound()));
        }
        if let LawForm::Table(t) = &self.form {
            return Ok(t.rows[n].clone());
        }
        if let Some(c) = self.cache.read().unwrap().get(&n) {
            return Ok(c.clone());
        }
        let rows = Arc::new(self.compute_rule(n)?);
        self.cache.write().unwrap().insert(n, rows.clone());
        Ok(rows)
    }

    pub fn component(&self, n: usize, a: usize) -> Result<BitSet> {
        if let LawForm::Table(t) = &self.form {
            if n <= t.bound {
                return Ok(t.rows[n][a].clone());
            }
        }
        Ok(self.components(n)?[a].clone())
    }

    fn compute_rule(&self, n: usize) -> Result<Vec<BitSet>> {
        let LawForm::Rule(rule) = &self.form else {
            unreachable!()
        };
        let f = &self.functor;
        let dom = f.size(1 << n)?;
        let cod = f.size(n)?;
        let powerset = f.is_base(&BaseFunctor::Powerset);
        match rule {
            LawRule::Barr if powerset => Ok((0..dom).into_par_iter().map(|a| barr_powerset(n, a as u64)).collect()),
            LawRule::Barr => {
                let lifted = barr_lift(f, &membership(n))?;
                Ok((0..dom).map(|a| lifted.row_set(a)).collect())
            }
            LawRule::Image | LawRule::RestrictedImage => {
                let restricted = matches!(rule, LawRule::RestrictedImage);
                Ok((0..dom)
                    .map(|a| {
                        let a = a as u64;
                        let union = mask::members(a).fold(0, |acc, s| acc | s);
                        if restricted && a != 0 && union == 0 {
                            BitSet::new(cod)
                        } else {
                            BitSet::from_indices(cod, [union])
                        }
                    })
                    .collect())
            }
            LawRule::FromMorphism(l) => {
                let comp = l.component(n)?;
                (0..dom)
                    .into_par_iter()
                    .map(|t| {
                        let out = l
                            .target()
                            .bind(t, &comp, n)?
                            .ok_or_else(|| Error::usage(format!("{}: bind leaves T X", l.kind())))?;
                        Ok(BitSet::from_indices(cod, [out]))
                    })
                    .collect()
            }
            LawRule::FromExtension(e) => {
                let lifted = e.lift(&membership(n))?;
                Ok((0..dom).map(|a| lifted.row_set(a)).collect())
            }
        }
    }

    /// Whether components are computed row by row from a formula rather than
    /// by lifting the membership relation.
    pub fn has_closed_form(&self) -> bool {
        match &self.form {
            LawForm::Table(_) => true,
            LawForm::Rule(LawRule::Barr) => self.functor.is_base(&BaseFunctor::Powerset),
            LawForm::Rule(LawRule::FromExtension(_)) => false,
            LawForm::Rule(_) => true,
        }
    }

    /// Restriction to carriers `≤ bound`.
    pub fn to_table(&self, bound: usize) -> Result<LawTable> {
        let rows = (0..=bound)
            .map(|n| Ok(self.components(n)?.as_ref().clone()))
            .collect::<Result<Vec<_>>>()?;
        LawTable::new(&self.functor, rows)
    }

    /// Whether both laws agree on every carrier `≤ bound`.
    pub fn agrees_with(&self, other: &DistLaw, bound: usize) -> Result<bool> {
        for n in 0..=bound {
            if self.components(n)? != other.components(n)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn render_input(&self, n: usize, a: usize) -> Result<String> {
        self.functor.render_in(&subset_carrier(n)?, a)
    }

    pub fn render_output(&self, n: usize, out: &BitSet) -> String {
        let parts: Vec<String> = out.iter().map(|y| self.functor.render(n, y)).collect();
        format!("{{{}}}", parts.join(","))
    }

    /// `input ↦ output` lines for carrier `n`.
    pub fn table_lines(&self, n: usize) -> Result<Vec<String>> {
        let rows = self.components(n)?;
        rows.iter()
            .enumerate()
            .map(|(a, out)| Ok(format!("{} ↦ {}", self.render_input(n, a)?, self.render_output(n, out))))
            .collect()
    }

    /// Looks up the input whose rendering is `text` on carrier `n`.
    pub fn find_input(&self, n: usize, text: &str) -> Result<Option<usize>> {
        let carrier = subset_carrier(n)?;
        let dom = self.functor.size(1 << n)?;
        let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        for a in 0..dom {
            if self.functor.render_in(&carrier, a)? == compact {
                return Ok(Some(a));
            }
        }
        Ok(None)
    }

    /// JSON table `{carrier: {input: [outputs]}}` for carriers `≤ bound`.
    pub fn to_json_table(&self, bound: usize) -> Result<Value> {
        let mut out = serde_json::Map::new();
        for n in 0..=bound {
            let rows = self.components(n)?;
            let mut m = serde_json::Map::new();
            for (a, s) in rows.iter().enumerate() {
                m.insert(a.to_string(), json!(s.iter().collect::<Vec<_>>()));
            }
            out.insert(n.to_string(), Value::Object(m));
        }
        Ok(Value::Object(out))
    }

    pub fn from_json_table(functor: Arc<FunctorSpec>, v: &Value, name: impl Into<String>) -> Result<Self> {
        let obj = v.as_object().ok_or_else(|| Error::usage("law table must be a JSON object"))?;
        let mut rows = Vec::new();
        for n in 0..obj.len() {
            let carrier = obj
                .get(&n.to_string())
                .and_then(Value::as_object)
                .ok_or_else(|| Error::usage(format!("law table is missing carrier {n}")))?;
            let dom = functor.size(1 << n)?;
            let cod = functor.size(n)?;
            let mut r = vec![BitSet::new(cod); dom];
            for (k, outs) in carrier {
                let a: usize = k.parse().map_err(|_| Error::usage(format!("bad input index `{k}`")))?;
                let outs = outs.as_array().ok_or_else(|| Error::usage("outputs must be an array"))?;
                if a >= dom {
                    return Err(Error::usage(format!("input index {a} out of range")));
                }
                for y in outs {
                    let y = y.as_u64().filter(|&y| (y as usize) < cod).ok_or_else(|| Error::usage("bad output index"))?;
                    r[a].insert(y as usize);
                }
            }
            rows.push(r);
        }
        Ok(DistLaw::table(functor.clone(), LawTable::new(&functor, rows)?, name))
    }
}

/// The carrier `P n`, labelled by rendered subsets.
fn subset_carrier(n: usize) -> Result<FinSet> {
    FinSet::with_labels((0..1u64 << n).map(|s| mask::render(s, |i| i.to_string())).collect())
}

/// `∋ : P n ⇸ n`.
fn membership(n: usize) -> Rel {
    let mut r = Rel::empty(1 << n, n);
    for s in 0..1usize << n {
        for x in mask::members(s as u64) {
            r.insert(s, x);
        }
    }
    r
}

/// `{Y ⊆ ⋃𝒜 | ∀A ∈ 𝒜. Y ∩ A ≠ ∅}` with `𝒜` a mask over subsets of `n`.
fn barr_powerset(n: usize, a: u64) -> BitSet {
    let union = mask::members(a).fold(0u64, |acc, s| acc | s as u64);
    let mut out = BitSet::new(1 << n);
    for y in mask::submasks(union) {
        if mask::members(a).all(|s| s as u64 & y != 0) {
            out.insert(y as usize);
        }
    }
    out
}

/// `P n → P m`, direct image along `f`.
fn image_map(f: &FinFun) -> FinFun {
    FinFun::new_unchecked(1 << f.cod(), (0..1u64 << f.dom()).map(|s| f.image_mask(s) as usize).collect())
}

/// `μ ∘ P j : P k → P n` for `j(i) = b[i]`.
fn union_map(b: &[u64], n: usize) -> FinFun {
    FinFun::new_unchecked(
        1 << n,
        (0..1u64 << b.len())
            .map(|m| mask::members(m).fold(0u64, |acc, i| acc | b[i]) as usize)
            .collect(),
    )
}

/// `η : n → P n`.
fn singleton_map(n: usize) -> FinFun {
    FinFun::new_unchecked(1 << n, (0..n).map(|x| 1 << x).collect())
}

fn image_of(f: &FinFun, s: &BitSet) -> BitSet {
    BitSet::from_indices(f.cod(), s.iter().map(|y| f.apply(y)))
}

/// Both sides of the support-bounded multiplication instance for
/// `B = {b₀ < b₁ < …} ⊆ P x` and `𝔅 ∈ F(P B)`.
pub fn multiplication_sides(law: &DistLaw, x: usize, b: &[u64], frak: usize) -> Result<(BitSet, BitSet)> {
    let f = law.functor();
    let j = FinFun::new(1 << x, b.iter().map(|&s| s as usize).collect())?;
    let fj = f.apply_map(&j)?;
    let fmu = f.apply_map(&union_map(b, x))?;
    let sigma_x = law.components(x)?;
    let lhs = sigma_x[fmu.apply(frak)].clone();
    let mut rhs = BitSet::new(f.size(x)?);
    for c in law.component(b.len(), frak)?.iter() {
        rhs.union_with(&sigma_x[fj.apply(c)]);
    }
    Ok((lhs, rhs))
}

/// Both sides of `σ_X · Fμ = μ · Pσ_X · σ_{PX}` at `𝔄 ∈ F(PPX)`.
pub fn direct_multiplication_sides(law: &DistLaw, x: usize, frak: usize) -> Result<(BitSet, BitSet)> {
    let all: Vec<u64> = (0..1u64 << x).collect();
    let f = law.functor();
    let fmu = f.apply_map(&union_map(&all, x))?;
    let sigma_x = law.components(x)?;
    let lhs = sigma_x[fmu.apply(frak)].clone();
    let mut rhs = BitSet::new(f.size(x)?);
    for c in law.components(1 << x)?[frak].iter() {
        rhs.union_with(&sigma_x[c]);
    }
    Ok((lhs, rhs))
}

#[derive(Clone, Debug, Serialize)]
pub struct AxiomVerdict {
    pub holds: bool,
    pub witness: Option<Witness>,
    pub instances: u64,
}

impl AxiomVerdict {
    fn from(witness: Option<Witness>, instances: u64) -> Self {
        AxiomVerdict {
            holds: witness.is_none(),
            witness,
            instances,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LawAxiomReport {
    pub law: String,
    pub functor: String,
    pub max_size: usize,
    pub support: usize,
    pub naturality: AxiomVerdict,
    pub unit: AxiomVerdict,
    pub multiplication: AxiomVerdict,
    /// Carriers where the multiplication law was checked directly.
    pub direct_sizes: Vec<usize>,
    /// Carriers where the support-bounded instances were checked.
    pub support_sizes: Vec<usize>,
}

impl LawAxiomReport {
    pub fn passed(&self) -> bool {
        self.naturality.holds && self.unit.holds && self.multiplication.holds
    }

    pub fn to_report(&self, start: Instant) -> Report {
        let mut r = Report::new("law-check", if self.passed() { Verdict::Pass } else { Verdict::Fail });
        for v in [&self.naturality, &self.unit, &self.multiplication] {
            r.witnesses.extend(v.witness.clone());
        }
        r.with_instances(self.naturality.instances + self.unit.instances + self.multiplication.instances)
            .counter("naturality_instances", self.naturality.instances)
            .counter("unit_instances", self.unit.instances)
            .counter("multiplication_instances", self.multiplication.instances)
            .with_details(json!({
                "law": self.law,
                "functor": self.functor,
                "max_size": self.max_size,
                "support": self.support,
                "naturality": self.naturality.holds,
                "unit": self.unit.holds,
                "multiplication": self.multiplication.holds,
                "direct_sizes": self.direct_sizes,
                "support_sizes": self.support_sizes,
            }))
            .timed(start)
    }
}

fn law_witness(law: &DistLaw, axiom: &str, text: String, data: Value) -> Witness {
    let mut data = data;
    data["law"] = json!(law.name());
    data["functor"] = json!(law.functor().expr().to_string());
    data["axiom"] = json!(axiom);
    Witness::new("law-axiom", format!("{}: {axiom}: {text}", law.name()), data)
}

/// Subsets of `0..m` with at most `k` elements, by size then lexicographically.
fn small_subsets(m: usize, k: usize) -> Vec<Vec<u64>> {
    let mut out = Vec::new();
    fn rec(start: u64, m: u64, left: usize, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            cur.push(i);
            rec(i + 1, m, left - 1, cur, out);
            cur.pop();
        }
    }
    for size in 0..=k.min(m) {
        rec(0, m as u64, size, &mut Vec::new(), &mut out);
    }
    out
}

pub fn naturality_witness(law: &DistLaw, n: usize) -> Result<(Option<Witness>, u64)> {
    let f = law.functor();
    let mut maps = Vec::new();
    for x in 0..=n {
        law.components(x)?;
        for y in 0..=n {
            maps.extend(FinFun::all(x, y));
        }
    }
    let results: Vec<(Option<Witness>, u64)> = maps
        .par_iter()
        .map(|g| -> Result<(Option<Witness>, u64)> {
            let (x, y) = (g.dom(), g.cod());
            let fpg = f.apply_map(&image_map(g))?;
            let fg = f.apply_map(g)?;
            let sx = law.components(x)?;
            let sy = law.components(y)?;
            for (a, out) in sx.iter().enumerate() {
                let lhs = &sy[fpg.apply(a)];
                let rhs = image_of(&fg, out);
                if *lhs != rhs {
                    return Ok((
                        Some(law_witness(
                            law,
                            "naturality",
                            format!(
                                "σ(FPf {}) = {} but PFf σ = {}",
                                law.render_input(x, a)?,
                                law.render_output(y, lhs),
                                law.render_output(y, &rhs)
                            ),
                            json!({"f": g.images(), "f_cod": y, "element": a}),
                        )),
                        a as u64 + 1,
                    ));
                }
            }
            Ok((None, sx.len() as u64))
        })
        .collect::<Result<_>>()?;
    let instances = results.iter().map(|r| r.1).sum();
    Ok((results.into_iter().find_map(|r| r.0), instances))
}

/// Naturality along all maps between carriers `≤ n`, a single check.
pub fn naturality_instance(law: &DistLaw, g: &FinFun, a: usize) -> Result<bool> {
    let f = law.functor();
    let fpg = f.apply_map(&image_map(g))?;
    let fg = f.apply_map(g)?;
    Ok(law.component(g.cod(), fpg.apply(a))? == image_of(&fg, &law.component(g.dom(), a)?))
}

fn unit_witness(law: &DistLaw, n: usize) -> Result<(Option<Witness>, u64)> {
    let f = law.functor();
    let mut instances = 0;
    for x in 0..=n {
        let feta = f.apply_map(&singleton_map(x))?;
        let sx = law.components(x)?;
        for a in 0..feta.dom() {
            instances += 1;
            let out = &sx[feta.apply(a)];
            if !(out.count() == 1 && out.contains(a)) {
                return Ok((
                    Some(law_witness(
                        law,
                        "unit",
                        format!("σ(Fη {}) = {}", f.render(x, a), law.render_output(x, out)),
                        json!({"size": x, "element": a}),
                    )),
                    instances,
                ));
            }
        }
    }
    Ok((None, instances))
}

/// Naturality, unit and multiplication laws at carriers `≤ n`; see
/// [`multiplication_sides`] for the support-bounded instances.
/// Largest `|F(P(P x))|` for which a law without a closed form is checked
/// by the direct multiplication scheme.
const DIRECT_ROWS_LIMIT: usize = 1 << 12;

pub fn check_distlaw_axioms(law: &DistLaw, n: usize, support: usize) -> Result<LawAxiomReport> {
    let mut top = law.carrier_bound();
    while top > 0 && law.functor().size(1 << top).is_err() {
        top -= 1;
    }
    let n = n.min(top);
    let (nat, nat_count) = naturality_witness(law, n)?;
    let (unit, unit_count) = unit_witness(law, n)?;
    let f = law.functor();

    let mut mult = None;
    let mut mult_count = 0u64;
    let mut direct_sizes = Vec::new();
    if !law.is_table() {
        for x in 0..=n {
            if (1 << x) > law.carrier_bound() || f.size(1 << (1 << x)).is_err() {
                break;
            }
            if !law.has_closed_form() && f.size(1 << (1 << x))? > DIRECT_ROWS_LIMIT {
                break;
            }
            let rows = law.components(1 << x)?.len();
            let found = (0..rows)
                .into_par_iter()
                .map(|a| Ok((a, direct_multiplication_sides(law, x, a)?)))
                .find_map_first(|r: Result<(usize, (BitSet, BitSet))>| match r {
                    Ok((a, (l, r))) if l != r => Some(Ok((a, l, r))),
                    Ok(_) => None,
                    Err(e) => Some(Err(e)),
                })
                .transpose()?;
            direct_sizes.push(x);
            mult_count += rows as u64;
            if let Some((a, l, r)) = found {
                let carrier = subset_carrier(1 << x)?;
                let input = f.render_in(&FinSet::with_labels(
                    (0..1u64 << (1 << x))
                        .map(|s| format!("{{{}}}", mask::members(s).map(|t| carrier.label(t)).collect::<Vec<_>>().join(",")))
                        .collect(),
                )?, a)?;
                mult = Some(law_witness(
                    law,
                    "multiplication",
                    format!("at {input}: σFμ = {} but μPσσ = {}", law.render_output(x, &l), law.render_output(x, &r)),
                    json!({"scheme": "direct", "x": x, "element": a}),
                ));
                break;
            }
        }
    }

    let mut support_sizes = Vec::new();
    if mult.is_none() {
        let k_max = support.min(top);
        let mut jobs = Vec::new();
        for x in 0..=n {
            support_sizes.push(x);
            for b in small_subsets(1 << x, k_max) {
                jobs.push((x, b));
            }
        }
        for k in 0..=k_max {
            law.components(k)?;
        }
        let counts: Vec<u64> = jobs
            .iter()
            .map(|(_, b)| f.size(1 << b.len()).map(|s| s as u64))
            .collect::<Result<_>>()?;
        let found = jobs
            .par_iter()
            .map(|(x, b)| -> Result<Option<(usize, Vec<u64>, usize, BitSet, BitSet)>> {
                for frak in 0..f.size(1 << b.len())? {
                    let (l, r) = multiplication_sides(law, *x, b, frak)?;
                    if l != r {
                        return Ok(Some((*x, b.clone(), frak, l, r)));
                    }
                }
                Ok(None)
            })
            .find_map_first(|r| r.transpose())
            .transpose()?;
        mult_count += counts.iter().sum::<u64>();
        if let Some((x, b, frak, l, r)) = found {
            let labels: Vec<String> = b.iter().map(|&s| mask::render(s, |i| i.to_string())).collect();
            let inner = FinSet::with_labels(
                (0..1u64 << b.len())
                    .map(|m| format!("{{{}}}", mask::members(m).map(|i| labels[i].clone()).collect::<Vec<_>>().join(",")))
                    .collect(),
            )?;
            mult = Some(law_witness(
                law,
                "multiplication",
                format!(
                    "B = {{{}}}, 𝔅 = {}: σFμ = {} but μPσσ = {}",
                    labels.join(","),
                    f.render_in(&inner, frak)?,
                    law.render_output(x, &l),
                    law.render_output(x, &r)
                ),
                json!({"scheme": "support", "x": x, "b": b, "element": frak}),
            ));
        }
    }

    Ok(LawAxiomReport {
        law: law.name().to_string(),
        functor: f.expr().to_string(),
        max_size: n,
        support,
        naturality: AxiomVerdict::from(nat, nat_count),
        unit: AxiomVerdict::from(unit, unit_count),
        multiplication: AxiomVerdict::from(mult, mult_count),
        direct_sizes,
        support_sizes,
    })
}

/// Re-checks a `law-axiom` witness; true iff the recorded instance still
/// violates the law.
pub fn recheck_law_witness(law: &DistLaw, data: &Value) -> Result<bool> {
    let num = |k: &str| {
        data[k]
            .as_u64()
            .map(|v| v as usize)
            .ok_or_else(|| Error::usage(format!("witness field `{k}` missing")))
    };
    match data["axiom"].as_str() {
        Some("naturality") => {
            let images: Vec<usize> = serde_json::from_value(data["f"].clone())?;
            let g = FinFun::new(num("f_cod")?, images)?;
            Ok(!naturality_instance(law, &g, num("element")?)?)
        }
        Some("unit") => {
            let x = num("size")?;
            let a = num("element")?;
            let feta = law.functor().apply_map(&singleton_map(x))?;
            let out = law.component(x, feta.apply(a))?;
            Ok(!(out.count() == 1 && out.contains(a)))
        }
        Some("multiplication") => {
            let x = num("x")?;
            let frak = num("element")?;
            let (l, r) = if data["scheme"] == "direct" {
                direct_multiplication_sides(law, x, frak)?
            } else {
                let b: Vec<u64> = serde_json::from_value(data["b"].clone())?;
                multiplication_sides(law, x, &b, frak)?
            };
            Ok(l != r)
        }
        _ => Err(Error::usage("unknown law-axiom witness")),
    }
}

/// `e^P T · m^T · Tλ`: `σ_X(t) = {bind(t, λ_X)}`.
pub fn kleisli_from_monad_morphism(l: Arc<MonadMorphism>) -> Result<DistLaw> {
    let functor = l.target().functor_arc().clone();
    DistLaw::rule(functor, LawRule::FromMorphism(l))
}

/// The extension `Ē r = σ_Y · F(r♯)` of a law.
#[derive(Clone, Debug)]
pub struct LawExtension {
    law: Arc<DistLaw>,
}

impl LawExtension {
    pub fn law(&self) -> &DistLaw {
        &self.law
    }
}

impl RelationLifting for LawExtension {
    fn functor(&self) -> &FunctorSpec {
        self.law.functor()
    }

    fn lift(&self, r: &Rel) -> Result<Rel> {
        let f = self.law.functor();
        let sharp = r.kleisli_transpose()?;
        let fs = f.apply_map(&sharp)?;
        let sigma = self.law.components(r.cod())?;
        let mut out = Rel::empty(fs.dom(), f.size(r.cod())?);
        for a in 0..fs.dom() {
            out.set_row(a, &sigma[fs.apply(a)]);
        }
        Ok(out)
    }

    fn describe(&self) -> String {
        format!("extension of law {} over {}", self.law.name(), self.law.functor().expr())
    }

    fn carrier_bound(&self) -> Option<usize> {
        self.law.is_table().then(|| self.law.carrier_bound())
    }
}

pub fn law_to_extension(law: Arc<DistLaw>) -> LawExtension {
    LawExtension { law }
}

/// `σ_X` as the transpose of `Ē(∋_X)`.
pub fn extension_to_law(e: Arc<dyn RelationLifting + Send>) -> Result<DistLaw> {
    let functor = Arc::new(
        FunctorSpec::new(e.functor().expr().clone(), &Default::default())?.with_limit(e.functor().limit()),
    );
    DistLaw::rule(functor, LawRule::FromExtension(e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liftings::{Extension, ExtensionKind};
    use crate::monads::MorphismKind;

    fn p() -> Arc<FunctorSpec> {
        Arc::new(FunctorSpec::parse_default("P(X)").unwrap())
    }

    /// Subset mask of `{{0,1},{2}}`-style input on carrier `n`.
    fn family(sets: &[&[usize]]) -> usize {
        sets.iter().fold(0usize, |acc, s| acc | 1 << mask::from_iter(s.iter().copied()))
    }

    fn outputs(sets: &[&[usize]], n: usize) -> BitSet {
        BitSet::from_indices(1 << n, sets.iter().map(|s| mask::from_iter(s.iter().copied()) as usize))
    }

    #[test]
    fn pinned_values() {
        let barr = DistLaw::rule(p(), LawRule::Barr).unwrap();
        let image = DistLaw::rule(p(), LawRule::Image).unwrap();
        let restricted = DistLaw::rule(p(), LawRule::RestrictedImage).unwrap();
        let a = family(&[&[0, 1], &[2]]);
        assert_eq!(barr.component(3, a).unwrap(), outputs(&[&[0, 2], &[1, 2], &[0, 1, 2]], 3));
        assert_eq!(image.component(3, a).unwrap(), outputs(&[&[0, 1, 2]], 3));
        assert_eq!(restricted.component(3, a).unwrap(), outputs(&[&[0, 1, 2]], 3));
        for law in [&barr, &image, &restricted] {
            assert_eq!(law.component(3, 0).unwrap(), outputs(&[&[]], 3));
        }
        assert!(restricted.component(3, family(&[&[]])).unwrap().is_empty());
        assert!(barr.component(2, family(&[&[], &[1]])).unwrap().is_empty());
        assert_eq!(barr.render_input(3, a).unwrap(), "{{0,1},{2}}");
        assert!(barr.table_lines(3).unwrap().contains(&"{{0,1},{2}} ↦ {{0,2},{1,2},{0,1,2}}".to_string()));
    }

    #[test]
    fn p_laws_pass_at_three() {
        for rule in [LawRule::Barr, LawRule::Image, LawRule::RestrictedImage] {
            let law = DistLaw::rule(p(), rule).unwrap();
            let r = check_distlaw_axioms(&law, 3, 3).unwrap();
            assert!(r.passed(), "{}: {:?}", law.name(), r);
            assert_eq!(r.direct_sizes, vec![0, 1, 2]);
        }
    }

    #[test]
    fn case_three_candidate_fails_multiplication() {
        let barr = DistLaw::rule(p(), LawRule::Barr).unwrap();
        let mut table = barr.to_table(3).unwrap();
        let a = family(&[&[0, 1], &[2]]);
        let out = outputs(&[&[0, 2], &[1, 2]], 3);
        for pi in FinFun::permutations(3) {
            let pp = image_map(&pi);
            let ppp = image_map(&pp);
            Arc::make_mut(&mut table.rows[3])[ppp.apply(a)] = image_of(&pp, &out);
        }
        let cand = DistLaw::table(p(), table, "case-3");
        let r = check_distlaw_axioms(&cand, 3, 3).unwrap();
        assert!(r.naturality.holds && r.unit.holds);
        assert!(!r.multiplication.holds);
        let w = r.multiplication.witness.unwrap();
        assert!(recheck_law_witness(&cand, &w.data).unwrap());
        assert!(!recheck_law_witness(&barr, &w.data).unwrap());
        // B = {{0,1},{2}}, 𝔅 = {{a,b},{a}}
        let (l, r) = multiplication_sides(&cand, 3, &[0b011, 0b100], (1 << 0b11) | (1 << 0b01)).unwrap();
        assert_ne!(l, r);
    }

    #[test]
    fn barr_closed_form_matches_extension() {
        let ext: Arc<dyn RelationLifting + Send> = Arc::new(Extension::new(ExtensionKind::Barr, p()).unwrap());
        let via_ext = extension_to_law(ext).unwrap();
        let closed = DistLaw::rule(p(), LawRule::Barr).unwrap();
        assert!(closed.agrees_with(&via_ext, 3).unwrap());
    }

    #[test]
    fn morphism_laws() {
        let id = kleisli_from_monad_morphism(Arc::new(MonadMorphism::new(MorphismKind::Identity))).unwrap();
        let image = DistLaw::rule(p(), LawRule::Image).unwrap();
        assert!(id.agrees_with(&image, 3).unwrap());

        let bx = kleisli_from_monad_morphism(Arc::new(MonadMorphism::new(MorphismKind::BoxFilt))).unwrap();
        let ext = law_to_extension(Arc::new(bx));
        let filt = ext.law().functor_arc().clone();
        let named = Extension::new(ExtensionKind::BoxFilt, filt).unwrap();
        for r in Rel::all(2, 2) {
            assert_eq!(ext.lift(&r).unwrap(), named.lift(&r).unwrap());
        }
    }

    #[test]
    fn morphism_laws_pass_axioms() {
        for kind in MorphismKind::ALL {
            if kind == MorphismKind::DiamondFilt {
                continue;
            }
            let law = kleisli_from_monad_morphism(Arc::new(MonadMorphism::new(kind))).unwrap();
            let r = check_distlaw_axioms(&law, 3, 3).unwrap();
            assert!(r.passed(), "{kind}: {r:?}");
            for n in 0..=r.max_size {
                assert!(law.components(n).unwrap().iter().all(|s| s.count() == 1));
            }
        }
    }

    #[test]
    fn terminal_law_is_barr_of_one() {
        let law = kleisli_from_monad_morphism(Arc::new(MonadMorphism::new(MorphismKind::Terminal))).unwrap();
        let one = Arc::new(FunctorSpec::parse_default("1").unwrap());
        let barr = DistLaw::rule(one, LawRule::Barr).unwrap();
        assert!(law.agrees_with(&barr, 3).unwrap());
    }

    #[test]
    fn restricted_relates_empty_to_empty_only() {
        let ext = law_to_extension(Arc::new(DistLaw::rule(p(), LawRule::RestrictedImage).unwrap()));
        let r = Rel::full(2, 2);
        let lifted = ext.lift(&r).unwrap();
        assert_eq!(lifted.row(0).collect::<Vec<_>>(), vec![0]);
        assert!(!lifted.contains(1, 0));
    }

    #[test]
    fn json_table_roundtrip() {
        let barr = DistLaw::rule(p(), LawRule::Barr).unwrap();
        let v = barr.to_json_table(2).unwrap();
        let back = DistLaw::from_json_table(p(), &v, "barr-table").unwrap();
        assert!(back.agrees_with(&barr, 2).unwrap());
    }
}
