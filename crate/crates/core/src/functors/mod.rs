//! Set functors on finite carriers.

mod base;
mod expr;
mod monoid;
mod spec;

use std::sync::Arc;
use std::time::Instant;

use serde_json::json;

pub use base::Elementary;
pub use expr::{parse_functor, BaseFunctor, FunctorExpr};
pub use monoid::{Monoid, MonoidRegistry, MonoidTable};
pub use spec::{default_limit, inclusion, FunctorSpec, SetFunctor, DEFAULT_MAX_ELEMENTS, MAX_ELEMENTS_ENV};

use crate::error::{Error, Result};
use crate::finset::{FinFun, FinSet};
use crate::report::{Report, Witness};

/// An element of `F X`, by index into the canonical enumeration.
#[derive(Clone, Debug)]
pub struct ElementHandle {
    functor: Arc<FunctorSpec>,
    carrier: FinSet,
    index: usize,
}

impl ElementHandle {
    pub fn new(functor: Arc<FunctorSpec>, carrier: FinSet, index: usize) -> Result<Self> {
        let n = functor.size(carrier.size())?;
        if index >= n {
            return Err(Error::usage(format!("element index {index} out of range for |F X| = {n}")));
        }
        Ok(ElementHandle {
            functor,
            carrier,
            index,
        })
    }

    pub fn functor(&self) -> &FunctorSpec {
        &self.functor
    }

    pub fn carrier(&self) -> &FinSet {
        &self.carrier
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn render(&self) -> String {
        self.functor
            .render_in(&self.carrier, self.index)
            .unwrap_or_else(|e| format!("<{e}>"))
    }

    /// Whether this element lies in `F A` for the subset `A` (a mask).
    pub fn member_of_subobject(&self, sub: u64) -> Result<bool> {
        self.functor.member_of_subobject(self.carrier.size(), self.index, sub)
    }
}

/// All maps between carriers of size at most `n`, grouped by domain and
/// codomain size.
fn maps_upto(n: usize) -> Vec<FinFun> {
    let mut out = Vec::new();
    for a in 0..=n {
        for b in 0..=n {
            out.extend(FinFun::all(a, b));
        }
    }
    out
}

/// Checks `F id = id` and `F(g∘f) = Fg∘Ff` for all maps between carriers of
/// size at most `n`.
pub fn check_functor_laws(f: &dyn SetFunctor, name: &str, n: usize) -> Result<Report> {
    let start = Instant::now();
    let mut instances = 0u64;
    let witness = functor_law_witness(f, name, n, &mut instances)?;
    Ok(Report::from_witness("functor-laws", witness)
        .with_instances(instances)
        .with_details(json!({"functor": name, "max_size": n}))
        .timed(start))
}

fn functor_law_witness(f: &dyn SetFunctor, name: &str, n: usize, instances: &mut u64) -> Result<Option<Witness>> {
    for k in 0..=n {
        let id = FinFun::identity(k);
        let fid = f.map(&id)?;
        *instances += 1;
        let size = f.size(k)?;
        if fid.dom() != size || fid.cod() != size {
            return Ok(Some(law_witness(name, "identity", &id, None, None)));
        }
        if let Some(e) = (0..size).find(|&e| fid.apply(e) != e) {
            return Ok(Some(law_witness(name, "identity", &id, None, Some(e))));
        }
    }
    let maps = maps_upto(n);
    for g1 in &maps {
        let fg1 = f.map(g1)?;
        if fg1.dom() != f.size(g1.dom())? || fg1.cod() != f.size(g1.cod())? {
            return Ok(Some(law_witness(name, "typing", g1, None, None)));
        }
        for g2 in maps.iter().filter(|g2| g2.dom() == g1.cod()) {
            *instances += 1;
            let fg2 = f.map(g2)?;
            let comp = g1.then(g2)?;
            let fcomp = f.map(&comp)?;
            if let Some(e) = (0..fg1.dom()).find(|&e| fcomp.apply(e) != fg2.apply(fg1.apply(e))) {
                return Ok(Some(law_witness(name, "composition", g1, Some(g2), Some(e))));
            }
        }
    }
    Ok(None)
}

fn law_witness(name: &str, law: &str, f: &FinFun, g: Option<&FinFun>, element: Option<usize>) -> Witness {
    let text = match g {
        Some(g) => format!("{name}: F({g}∘{f}) ≠ F{g}∘F{f} at element {}", element.unwrap_or(0)),
        None => format!("{name}: F({f}) is not the identity"),
    };
    Witness::new(
        "functor-law",
        text,
        json!({
            "functor": name,
            "law": law,
            "f": f.images(),
            "f_cod": f.cod(),
            "g": g.map(|g| g.images().to_vec()),
            "g_cod": g.map(FinFun::cod),
            "element": element,
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `P` with direct image replaced by "image, then drop the least
    /// element": breaks composition.
    struct Broken(FunctorSpec);

    impl SetFunctor for Broken {
        fn size(&self, n: usize) -> Result<usize> {
            self.0.size(n)
        }
        fn map(&self, f: &FinFun) -> Result<Arc<FinFun>> {
            let g = self.0.apply_map(f)?;
            if f.is_injective() {
                return Ok(g);
            }
            let images = g.images().iter().map(|&m| m & m.wrapping_sub(1)).collect();
            Ok(Arc::new(FinFun::new(g.cod(), images)?))
        }
    }

    #[test]
    fn laws_hold_for_powerset() {
        let p = FunctorSpec::parse_default("P(X)").unwrap();
        assert!(check_functor_laws(&p, "P(X)", 3).unwrap().passed());
    }

    #[test]
    fn mutation_is_caught() {
        let b = Broken(FunctorSpec::parse_default("P(X)").unwrap());
        let r = check_functor_laws(&b, "broken", 2).unwrap();
        assert!(!r.passed());
        assert_eq!(r.witnesses[0].data["law"], "composition");
    }

    #[test]
    fn element_handle_bounds() {
        let p = Arc::new(FunctorSpec::parse_default("P(X)").unwrap());
        assert!(ElementHandle::new(p.clone(), FinSet::new(2), 4).is_err());
        let h = ElementHandle::new(p, FinSet::new(3), 3).unwrap();
        assert_eq!(h.render(), "{0,1}");
        assert!(h.member_of_subobject(0b111).unwrap());
    }
}
