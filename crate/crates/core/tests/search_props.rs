use std::sync::Arc;

use rellift_core::functors::FunctorSpec;
use rellift_core::monads::{check_distlaw_axioms, multiplication_sides, DistLaw, LawRule};
use rellift_core::search::{assignment_of, build_csp, search_laws, SearchConfig, SearchOutcome, SearchStatus};

fn spec(s: &str) -> Arc<FunctorSpec> {
    Arc::new(FunctorSpec::parse_default(s).unwrap())
}

fn search(f: &str, bound: usize, support: usize, jobs: usize) -> SearchOutcome {
    let cfg = SearchConfig {
        bound,
        support,
        jobs,
        timeout: None,
        max_solutions: Some(1000),
    };
    search_laws(spec(f), &cfg).unwrap()
}

#[test]
fn registry_laws_are_always_solutions() {
    for (f, n, k) in [("P(X)", 2, 2), ("P(X)", 3, 3), ("X^2", 2, 3), ("1", 3, 3), ("Filt(X)", 2, 2)] {
        let csp = build_csp(spec(f), n, k).unwrap();
        for name in ["barr", "image", "restricted-image", "from-morphism:box-filt"] {
            let Ok(law) = DistLaw::by_name(name, spec(f)) else { continue };
            if check_distlaw_axioms(&law, n, k).unwrap().passed() {
                let values = assignment_of(&csp, &law).unwrap();
                assert!(csp.satisfied_by(&values), "{name} over {f} at N={n}");
            }
        }
    }
}

#[test]
fn solutions_pass_the_axiom_battery() {
    let out = search("P(X)", 2, 2, 0);
    assert!(out.verified);
    for law in &out.solutions {
        assert!(check_distlaw_axioms(law, 2, 2).unwrap().passed());
    }
}

#[test]
fn multiplication_holds_for_every_family_not_only_orbit_representatives() {
    let out = search("P(X)", 2, 2, 0);
    assert_eq!(out.solutions.len(), 68);
    for law in &out.solutions {
        for x in 0..=2usize {
            let subsets: Vec<u64> = (0..1u64 << x).collect();
            for k in 0..=2usize.min(subsets.len()) {
                for choice in 0u64..1 << subsets.len() {
                    if choice.count_ones() as usize != k {
                        continue;
                    }
                    let b: Vec<u64> = subsets.iter().copied().filter(|&s| choice >> s & 1 == 1).collect();
                    for frak in 0..law.functor().size(1 << k).unwrap() {
                        let (lhs, rhs) = multiplication_sides(law, x, &b, frak).unwrap();
                        assert_eq!(lhs, rhs, "x={x} B={b:?}");
                    }
                }
            }
        }
    }
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let tables = |o: &SearchOutcome| -> Vec<String> {
        o.solutions.iter().map(|s| s.to_json_table(o.bound).unwrap().to_string()).collect()
    };
    let a = search("P(X)", 2, 2, 1);
    let b = search("P(X)", 2, 2, 3);
    assert_eq!(tables(&a), tables(&b));
}

#[test]
fn larger_support_only_removes_solutions() {
    let n2k2 = search("P(X)", 2, 2, 0);
    let n2k3 = search("P(X)", 2, 3, 0);
    let n3k3 = search("P(X)", 3, 3, 0);
    assert_eq!(n2k2.status, SearchStatus::Complete);
    assert_eq!(n3k3.status, SearchStatus::Complete);
    assert!(n2k3.solutions.len() <= n2k2.solutions.len());
    for s in &n2k3.solutions {
        assert!(n2k2.solutions.iter().any(|t| t.agrees_with(s, 2).unwrap()));
    }
    // every solution at N=3 restricts to a solution at N=2
    for s in &n3k3.solutions {
        assert!(n2k2.solutions.iter().any(|t| t.agrees_with(s, 2).unwrap()));
    }
    for rule in [LawRule::Barr, LawRule::Image, LawRule::RestrictedImage] {
        let law = DistLaw::rule(spec("P(X)"), rule).unwrap();
        assert!(n3k3.solutions.iter().any(|s| s.agrees_with(&law, 3).unwrap()));
        assert!(n2k3.solutions.iter().any(|s| s.agrees_with(&law, 2).unwrap()));
    }
}
