//! Re-checking recorded witnesses from their structured data alone.

use std::sync::Arc;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::finset::FinFun;
use crate::functors::{FunctorSpec, SetFunctor};
use crate::monads::{recheck_law_witness, DistLaw};
use crate::pullbacks::{recheck_inverse_image_witness, recheck_wpb_witness, WpbWitness};
use crate::report::Witness;
use crate::search::{recheck_certificate, ObstructionCertificate};

fn field<'a>(data: &'a Value, key: &str) -> Result<&'a Value> {
    data.get(key)
        .filter(|v| !v.is_null())
        .ok_or_else(|| Error::usage(format!("witness field `{key}` missing")))
}

fn functor_of(data: &Value) -> Result<FunctorSpec> {
    let text = field(data, "functor")?
        .as_str()
        .ok_or_else(|| Error::usage("witness field `functor` is not a string"))?;
    FunctorSpec::parse_default(text)
}

fn map_of(data: &Value, images: &str, cod: &str) -> Result<FinFun> {
    let images: Vec<usize> = serde_json::from_value(field(data, images)?.clone())?;
    let cod: usize = serde_json::from_value(field(data, cod)?.clone())?;
    FinFun::new(cod, images)
}

/// Whether a functor-law witness still exhibits a violation.
fn recheck_functor_law(data: &Value) -> Result<bool> {
    let f = functor_of(data)?;
    let g1 = map_of(data, "f", "f_cod")?;
    let fg1 = f.map(&g1)?;
    match field(data, "law")?.as_str() {
        Some("identity") => {
            let size = f.size(g1.dom())?;
            Ok(fg1.dom() != size || fg1.cod() != size || (0..size).any(|e| fg1.apply(e) != e))
        }
        Some("typing") => Ok(fg1.dom() != f.size(g1.dom())? || fg1.cod() != f.size(g1.cod())?),
        Some("composition") => {
            let g2 = map_of(data, "g", "g_cod")?;
            let e: usize = serde_json::from_value(field(data, "element")?.clone())?;
            let fcomp = f.map(&g1.then(&g2)?)?;
            Ok(e < fg1.dom() && fcomp.apply(e) != f.map(&g2)?.apply(fg1.apply(e)))
        }
        _ => Err(Error::usage("unknown functor-law witness")),
    }
}

/// Re-checks a witness through a route that does not rerun the sweep that
/// found it. `None` for kinds without such a route.
pub fn recheck_witness(w: &Witness) -> Result<Option<bool>> {
    let d = &w.data;
    Ok(Some(match w.kind.as_str() {
        "wpb" | "inverse-image" => {
            let spec = functor_of(d)?;
            let wit: WpbWitness = serde_json::from_value(field(d, "witness")?.clone())?;
            if w.kind == "wpb" {
                recheck_wpb_witness(&spec, &wit)?
            } else {
                recheck_inverse_image_witness(&spec, &wit)?
            }
        }
        "law-axiom" => {
            let spec = Arc::new(functor_of(d)?);
            let name = field(d, "law")?.as_str().unwrap_or_default();
            recheck_law_witness(&DistLaw::by_name(name, spec)?, d)?
        }
        "obstruction" => {
            let cert: ObstructionCertificate = serde_json::from_value(d.clone())?;
            recheck_certificate(&cert)?
        }
        "functor-law" => recheck_functor_law(d)?,
        _ => return Ok(None),
    }))
}
