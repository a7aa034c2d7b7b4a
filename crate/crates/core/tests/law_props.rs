use std::sync::Arc;

use proptest::prelude::*;
use rellift_core::finset::{FinFun, Rel};
use rellift_core::functors::FunctorSpec;
use rellift_core::liftings::{check_codiagonal_formula, Extension, ExtensionKind, RelationLifting};
use rellift_core::monads::{extension_to_law, law_to_extension, DistLaw};

fn spec(s: &str) -> Arc<FunctorSpec> {
    Arc::new(FunctorSpec::parse_default(s).unwrap())
}

const RULE_LAWS: [(&str, &str, usize); 8] = [
    ("barr", "P(X)", 3),
    ("image", "P(X)", 3),
    ("restricted-image", "P(X)", 3),
    ("from-morphism:identity", "P(X)", 3),
    ("from-morphism:terminal", "1", 3),
    ("from-morphism:box-filt", "Filt(X)", 3),
    ("from-morphism:box-mono", "Mono(X)", 2),
    ("from-morphism:diamond-mono", "Mono(X)", 2),
];

#[test]
fn law_extension_law_roundtrip() {
    for (name, f, n) in RULE_LAWS {
        let law = Arc::new(DistLaw::by_name(name, spec(f)).unwrap());
        let back = extension_to_law(Arc::new(law_to_extension(law.clone()))).unwrap();
        assert!(back.agrees_with(&law, n).unwrap(), "{name} over {f}");
    }
}

#[test]
fn extension_law_extension_roundtrip() {
    for (kind, f) in [
        (ExtensionKind::Barr, "P(X)"),
        (ExtensionKind::Image, "P(X)"),
        (ExtensionKind::RestrictedImage, "P(X)"),
        (ExtensionKind::BoxFilt, "Filt(X)"),
        (ExtensionKind::BoxMono, "Mono(X)"),
    ] {
        let e = Arc::new(Extension::new(kind, spec(f)).unwrap());
        let again = law_to_extension(Arc::new(extension_to_law(e.clone()).unwrap()));
        for d in 0..=2 {
            for c in 0..=2 {
                for r in Rel::all(d, c) {
                    assert_eq!(again.lift(&r).unwrap(), e.lift(&r).unwrap(), "{kind} over {f} at {r}");
                }
            }
        }
    }
}

#[test]
fn morphism_laws_output_singletons() {
    for (name, f, n) in RULE_LAWS.iter().filter(|l| l.0.starts_with("from-morphism")) {
        let law = DistLaw::by_name(name, spec(f)).unwrap();
        for k in 0..=*n {
            for out in law.components(k).unwrap().iter() {
                assert_eq!(out.count(), 1, "{name} at carrier {k}");
            }
        }
    }
}

const CODIAGONAL_FUNCTORS: [&str; 9] = [
    "P(X)",
    "X^2",
    "2*X^2+1",
    "X+1",
    "Pn[2](X)",
    "T32(X)",
    "Mono(X)",
    "Filt(X)",
    "M[Z2](X)",
];

/// Pairs of `⋁{(Fρ₁)°·Ff | e·f° = ∇}` outside the graph of `Fe`, computed
/// by filtering all maps `Y → X + X`.
fn codiagonal_excess(f: &FunctorSpec, e: &FinFun) -> (usize, usize) {
    let x = e.cod();
    let fe = f.apply_map(e).unwrap();
    let rho1 = f.apply_map(&FinFun::new(2 * x, (0..x).collect()).unwrap()).unwrap();
    let mut factorizations = 0;
    let mut excess = 0;
    for g in FinFun::all(e.dom(), 2 * x) {
        let mut pairs: Vec<(usize, usize)> = (0..e.dom()).map(|y| (g.apply(y), e.apply(y))).collect();
        pairs.sort_unstable();
        pairs.dedup();
        let nabla: Vec<(usize, usize)> = {
            let mut v: Vec<_> = (0..x).map(|i| (i, i)).chain((0..x).map(|i| (x + i, i))).collect();
            v.sort_unstable();
            v
        };
        if pairs != nabla {
            continue;
        }
        factorizations += 1;
        let fg = f.apply_map(&g).unwrap();
        for a in 0..fg.dom() {
            for c in 0..rho1.dom() {
                if rho1.apply(c) == fg.apply(a) && fe.apply(a) != c {
                    excess += 1;
                }
            }
        }
    }
    (factorizations, excess)
}

fn map_into(max_dom: usize, max_cod: usize) -> impl Strategy<Value = FinFun> {
    (1..=max_cod)
        .prop_flat_map(move |c| prop::collection::vec(0..c, 0..=max_dom).prop_map(move |v| FinFun::new(c, v).unwrap()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn codiagonal_inequality(e in map_into(4, 2), i in 0..CODIAGONAL_FUNCTORS.len()) {
        let f = spec(CODIAGONAL_FUNCTORS[i]);
        let (count, excess) = codiagonal_excess(&f, &e);
        prop_assert_eq!(excess, 0);
        let (v, _) = check_codiagonal_formula(&f, &e).unwrap();
        prop_assert!(v.geq);
        prop_assert_eq!(v.factorizations, count);
    }
}
