use std::sync::Arc;

use proptest::prelude::*;
use rellift_core::finset::{mask, FinFun, Rel, Span};
use rellift_core::functors::FunctorSpec;
use rellift_core::liftings::{
    barr_lift, barr_lift_span, check_extension_axioms, lemma1_battery, lemma6_battery, Extension, ExtensionKind,
    RelationLifting,
};

fn spec(s: &str) -> Arc<FunctorSpec> {
    Arc::new(FunctorSpec::parse_default(s).unwrap())
}

const BARR_FUNCTORS: [&str; 6] = ["P(X)", "X^2", "2*X^2+1", "Pn[2](X)", "T32(X)", "Mono(X)"];

fn rel(max: usize) -> impl Strategy<Value = Rel> {
    (0..=max, 0..=max).prop_flat_map(|(d, c)| (0u64..1 << (d * c)).prop_map(move |code| Rel::from_code(d, c, code)))
}

/// A span of `r` whose apex repeats each pair `1..=3` times.
fn factorization(max: usize) -> impl Strategy<Value = (Rel, Span)> {
    rel(max).prop_flat_map(|r| {
        let n = r.len();
        (Just(r), prop::collection::vec(1usize..=3, n), any::<u64>())
    })
    .prop_map(|(r, mult, seed)| {
        let mut apex: Vec<(usize, usize)> = r.pairs().zip(&mult).flat_map(|(p, &m)| std::iter::repeat(p).take(m)).collect();
        if !apex.is_empty() {
            let k = seed as usize % apex.len();
            apex.rotate_left(k);
        }
        let left = FinFun::new(r.dom(), apex.iter().map(|p| p.0).collect()).unwrap();
        let right = FinFun::new(r.cod(), apex.iter().map(|p| p.1).collect()).unwrap();
        (r, Span { apex: apex.len(), left, right })
    })
}

/// `B ⊆ r[A]` and `A ⊆ r°[B]`, on subset masks.
fn egli_milner(r: &Rel) -> Rel {
    let mut out = Rel::empty(1 << r.dom(), 1 << r.cod());
    for a in 0..1u64 << r.dom() {
        for b in 0..1u64 << r.cod() {
            let forward = mask::members(b).all(|y| mask::members(a).any(|x| r.contains(x, y)));
            let backward = mask::members(a).all(|x| mask::members(b).any(|y| r.contains(x, y)));
            if forward && backward {
                out.insert(a as usize, b as usize);
            }
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn barr_commutes_with_converse(r in rel(3), i in 0..BARR_FUNCTORS.len()) {
        let f = spec(BARR_FUNCTORS[i]);
        prop_assert_eq!(barr_lift(&f, &r.converse()).unwrap(), barr_lift(&f, &r).unwrap().converse());
    }

    #[test]
    fn barr_is_independent_of_factorization((r, span) in factorization(3), i in 0..BARR_FUNCTORS.len()) {
        prop_assert_eq!(span.relation(), r.clone());
        let f = spec(BARR_FUNCTORS[i]);
        prop_assert_eq!(barr_lift_span(&f, &span).unwrap(), barr_lift(&f, &r).unwrap());
    }
}

#[test]
fn powerset_barr_is_egli_milner() {
    let p = spec("P(X)");
    for d in 0..=3 {
        for c in 0..=3 {
            for r in Rel::all(d, c) {
                assert_eq!(barr_lift(&p, &r).unwrap(), egli_milner(&r), "{r}");
            }
        }
    }
}

fn extensions() -> Vec<(Extension, usize)> {
    let mut out = Vec::new();
    for (kind, f, n) in [
        (ExtensionKind::Barr, "P(X)", 3),
        (ExtensionKind::Image, "P(X)", 3),
        (ExtensionKind::RestrictedImage, "P(X)", 3),
        (ExtensionKind::Barr, "Filt(X)", 3),
        (ExtensionKind::BoxFilt, "Filt(X)", 3),
        (ExtensionKind::BoxMono, "Mono(X)", 2),
        (ExtensionKind::DiamondMono, "Mono(X)", 2),
        (ExtensionKind::Barr, "Mono(X)", 3),
        (ExtensionKind::Barr, "X^2", 3),
        (ExtensionKind::Barr, "T32(X)", 3),
    ] {
        out.push((Extension::new(kind, spec(f)).unwrap(), n));
    }
    out
}

#[test]
fn lemma1_holds_for_axiom_passing_extensions() {
    let mut passing = 0;
    for (e, n) in extensions() {
        if check_extension_axioms(&e, n).unwrap().passed() {
            passing += 1;
            let r = lemma1_battery(&e, n).unwrap();
            assert!(r.passed(), "{}: {:?}", e.describe(), r.witnesses);
        }
    }
    assert!(passing >= 7);
}

#[test]
fn lemma6_conditions_coincide() {
    for (e, n) in extensions() {
        let top = if e.functor().expr().to_string() == "P(X)" { 4 } else { n };
        if check_extension_axioms(&e, n).unwrap().passed() {
            let (res, _) = lemma6_battery(&e, top).unwrap();
            assert!(res.all_equal(), "{}: {:?}", e.describe(), res.values());
        }
    }
}

#[test]
fn image_laws_are_incomparable_with_barr() {
    let p = spec("P(X)");
    let barr = Extension::new(ExtensionKind::Barr, p.clone()).unwrap();
    for kind in [ExtensionKind::Image, ExtensionKind::RestrictedImage] {
        let e = Extension::new(kind, p.clone()).unwrap();
        let (mut below, mut above) = (false, false);
        for d in 0..=3 {
            for c in 0..=3 {
                for r in Rel::all(d, c) {
                    let (x, y) = (e.lift(&r).unwrap(), barr.lift(&r).unwrap());
                    below |= !x.is_subset(&y);
                    above |= !y.is_subset(&x);
                }
            }
        }
        assert!(below && above, "{kind}");
    }
}
