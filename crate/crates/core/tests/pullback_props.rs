use rellift_core::finset::Rel;
use rellift_core::functors::{FunctorSpec, Monoid, MonoidRegistry};
use rellift_core::pullbacks::{check_monoid_conditions, cospans_upto, pullback, wpb_report};
use rellift_core::replay::recheck_witness;

#[test]
fn pullback_span_is_the_fibre_relation() {
    let cospans = cospans_upto(4);
    assert!(!cospans.is_empty());
    for c in &cospans {
        let span = pullback(c);
        let fibre = Rel::graph(&c.f).then(&Rel::graph(&c.g).converse()).unwrap();
        assert_eq!(span.relation(), fibre);
        assert_eq!(span.apex, fibre.len());
        for p in 0..span.apex {
            assert_eq!(c.f.apply(span.left.apply(p)), c.g.apply(span.right.apply(p)));
        }
    }
}

fn extra_monoids() -> Vec<Monoid> {
    vec![
        Monoid::cyclic(4),
        Monoid::truncated_naturals(4),
        // {0, a, ∞} with a + a = ∞
        Monoid::new("A3", 0, vec![vec![0, 1, 2], vec![1, 2, 2], vec![2, 2, 2]]).unwrap(),
        // {0, a, b, ∞} with every nonzero sum ∞
        Monoid::new(
            "V4",
            0,
            vec![vec![0, 1, 2, 3], vec![1, 3, 3, 3], vec![2, 3, 3, 3], vec![3, 3, 3, 3]],
        )
        .unwrap(),
        // max on a three-element chain
        Monoid::new("Max3", 0, vec![vec![0, 1, 2], vec![1, 1, 2], vec![2, 2, 2]]).unwrap(),
    ]
}

#[test]
fn monoid_conditions_agree_with_wpb() {
    let mut reg = MonoidRegistry::default();
    for m in extra_monoids() {
        reg.register(m);
    }
    let names: Vec<String> = reg.names().map(str::to_string).collect();
    for name in names {
        let m = reg.get(&name).unwrap();
        let c = check_monoid_conditions(&m);
        let spec = FunctorSpec::parse(&format!("M[{name}](X)"), &reg).unwrap();
        let wpb = wpb_report(&spec, 3, false).unwrap();
        assert_eq!(
            c.positive && c.refinable,
            wpb.passed(),
            "{name}: positive {} refinable {} wpb {}",
            c.positive,
            c.refinable,
            wpb.verdict
        );
    }
}

#[test]
fn negative_verdicts_revalidate() {
    for name in ["Pn[3](X)", "T32(X)", "Mono(X)", "Nb(X)", "M[Z2](X)"] {
        let spec = FunctorSpec::parse_default(name).unwrap();
        for inverse in [false, true] {
            let r = wpb_report(&spec, 3, inverse).unwrap();
            for w in &r.witnesses {
                assert_eq!(recheck_witness(w).unwrap(), Some(true), "{name}: {}", w.text);
            }
            if !inverse {
                assert!(!r.passed(), "{name}");
            }
        }
    }
}
