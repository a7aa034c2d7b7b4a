use proptest::prelude::*;
use rellift_core::finset::{FinFun, Rel};

fn rel(max: usize) -> impl Strategy<Value = Rel> {
    (0..=max, 0..=max).prop_flat_map(|(d, c)| (0u64..1 << (d * c)).prop_map(move |code| Rel::from_code(d, c, code)))
}

fn chain(max: usize) -> impl Strategy<Value = (Rel, Rel, Rel)> {
    (0..=max, 0..=max, 0..=max, 0..=max).prop_flat_map(|(a, b, c, d)| {
        (0u64..1 << (a * b), 0u64..1 << (b * c), 0u64..1 << (c * d))
            .prop_map(move |(x, y, z)| (Rel::from_code(a, b, x), Rel::from_code(b, c, y), Rel::from_code(c, d, z)))
    })
}

fn map_pair(max: usize) -> impl Strategy<Value = (FinFun, FinFun)> {
    (0..=max, 1..=max, 1..=max).prop_flat_map(|(a, b, c)| {
        (prop::collection::vec(0..b, a), prop::collection::vec(0..c, b))
            .prop_map(move |(f, g)| (FinFun::new(b, f).unwrap(), FinFun::new(c, g).unwrap()))
    })
}

/// Composition by existential chaining, pair by pair.
fn compose_by_pairs(r: &Rel, s: &Rel) -> Rel {
    let mut out = Rel::empty(r.dom(), s.cod());
    for (x, y) in r.pairs() {
        for (y2, z) in s.pairs() {
            if y == y2 {
                out.insert(x, z);
            }
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn composition_is_associative((r, s, t) in chain(4)) {
        let left = r.then(&s).unwrap().then(&t).unwrap();
        let right = r.then(&s.then(&t).unwrap()).unwrap();
        prop_assert_eq!(&left, &right);
        prop_assert_eq!(r.then(&s).unwrap(), compose_by_pairs(&r, &s));
    }

    #[test]
    fn identities_are_units(r in rel(4)) {
        prop_assert_eq!(Rel::identity(r.dom()).then(&r).unwrap(), r.clone());
        prop_assert_eq!(r.then(&Rel::identity(r.cod())).unwrap(), r);
    }

    #[test]
    fn converse_reverses_composition((r, s, _t) in chain(4)) {
        let lhs = r.then(&s).unwrap().converse();
        let rhs = s.converse().then(&r.converse()).unwrap();
        prop_assert_eq!(lhs, rhs);
        prop_assert_eq!(r.converse().converse(), r);
    }

    #[test]
    fn span_factorization_recovers_relation(r in rel(4)) {
        let span = r.span_factorize();
        let back = Rel::graph(&span.left).converse().then(&Rel::graph(&span.right)).unwrap();
        prop_assert_eq!(&back, &r);
        prop_assert_eq!(span.relation(), r.clone());
        prop_assert_eq!(span.apex, r.len());
    }

    #[test]
    fn graph_is_functorial((f, g) in map_pair(4)) {
        let lhs = Rel::graph(&f.then(&g).unwrap());
        let rhs = Rel::graph(&f).then(&Rel::graph(&g)).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn kleisli_transpose_roundtrip(r in rel(4)) {
        let f = r.kleisli_transpose().unwrap();
        prop_assert_eq!(f.cod(), 1 << r.cod());
        prop_assert_eq!(Rel::kleisli_untranspose(&f, r.cod()).unwrap(), r);
    }
}

#[test]
fn kleisli_transpose_is_bijective_exhaustively() {
    for d in 0..=2 {
        for c in 0..=2 {
            let rels: Vec<Rel> = Rel::all(d, c).collect();
            let maps: Vec<FinFun> = FinFun::all(d, 1 << c).collect();
            assert_eq!(rels.len(), maps.len());
            let mut seen: Vec<FinFun> = rels.iter().map(|r| r.kleisli_transpose().unwrap()).collect();
            seen.sort_by(|a, b| a.images().cmp(b.images()));
            seen.dedup();
            assert_eq!(seen.len(), maps.len());
        }
    }
}
