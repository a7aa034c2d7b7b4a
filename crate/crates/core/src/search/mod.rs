//! All-solutions search for Kleisli laws `FP → PF` at bounded carrier size.

mod csp;
mod extend;
mod solver;

use std::sync::atomic::{AtomicBool, AtomicUsize};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::finset::BitSet;
use crate::functors::{BaseFunctor, FunctorSpec};
use crate::monads::{check_distlaw_axioms, DistLaw, LawRule, LawTable, MonadMorphism, MorphismKind};
use crate::report::{Report, Verdict, Witness};

pub use csp::{build_csp, enumerate_orbit_reps, Constraint, LawCSP, OrbitRep, Origin};
use solver::{Counters, Limits, Solver};

#[derive(Clone, Debug)]
pub struct SearchConfig {
    pub bound: usize,
    pub support: usize,
    pub jobs: usize,
    pub timeout: Option<Duration>,
    /// Enumeration stops (inconclusive) once this many solutions are found.
    pub max_solutions: Option<usize>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            bound: 3,
            support: 3,
            jobs: 0,
            timeout: None,
            max_solutions: Some(DEFAULT_MAX_SOLUTIONS),
        }
    }
}

pub const DEFAULT_MAX_SOLUTIONS: usize = 10_000;

const EXTENSION_NODE_LIMIT: u64 = 2_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchStatus {
    Complete,
    Unsat,
    Inconclusive,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SearchStats {
    pub variables: usize,
    pub constraints: usize,
    pub free_after_root: usize,
    pub nodes: u64,
    pub propagations: u64,
    pub elapsed_ms: u64,
    pub naturality_along_all_maps: bool,
    pub solution_cap_reached: bool,
    /// Solutions on carriers `≤ N` before auxiliary carriers were consulted.
    pub bounded_solutions: usize,
    /// Bounded solutions with no components on carriers `N+1..=support`.
    pub rejected_by_extension: usize,
    pub extension_undecided: usize,
}

/// A set of law constraints with no satisfying assignment.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObstructionCertificate {
    pub functor: String,
    /// Largest carrier the constraints mention.
    pub carrier_size: usize,
    pub support: usize,
    pub constraints: Vec<Origin>,
    /// Whether greedy deletion ran to completion.
    pub minimal: bool,
}

#[derive(Debug)]
pub struct SearchOutcome {
    pub functor: Arc<FunctorSpec>,
    pub bound: usize,
    pub support: usize,
    pub status: SearchStatus,
    /// Solutions sorted by their bit vectors.
    pub solutions: Vec<DistLaw>,
    /// Whether every solution passed the independent axiom battery.
    pub verified: bool,
    pub certificate: Option<ObstructionCertificate>,
    /// Registry laws whose restriction is itself a solution, tested
    /// directly; meaningful when enumeration is cut short.
    pub reference_solutions: Vec<String>,
    pub stats: SearchStats,
}

fn to_table(csp: &LawCSP, values: &[bool]) -> Result<LawTable> {
    let rows = (0..=csp.bound())
        .map(|n| {
            (0..csp.rows(n))
                .map(|a| {
                    BitSet::from_indices(
                        csp.outputs(n),
                        (0..csp.outputs(n)).filter(|&y| values[csp.var(n, a, y) as usize]),
                    )
                })
                .collect()
        })
        .collect();
    LawTable::new(csp.functor(), rows)
}

/// Full assignment of a law restricted to the CSP's carriers.
pub fn assignment_of(csp: &LawCSP, law: &DistLaw) -> Result<Vec<bool>> {
    let mut values = vec![false; csp.num_vars()];
    for n in 0..=csp.bound() {
        for (a, out) in law.components(n)?.iter().enumerate() {
            for y in out.iter() {
                values[csp.var(n, a, y) as usize] = true;
            }
        }
    }
    Ok(values)
}

struct RunResult {
    solutions: Vec<Vec<u64>>,
    complete: bool,
    counters: Counters,
    free_after_root: usize,
}

fn run(csp: &LawCSP, cons: Option<Vec<&Constraint>>, limits: &Limits, parallel: bool) -> RunResult {
    let solver = match cons {
        Some(c) => Solver::new(csp, c),
        None => Solver::full(csp),
    };
    let mut counters = Counters::default();
    let Some(root) = solver.root(&mut counters) else {
        return RunResult {
            solutions: Vec::new(),
            complete: true,
            counters,
            free_after_root: 0,
        };
    };
    let free_after_root = root.values().len() - root_assigned(&root);
    if !parallel {
        let mut st = root;
        let mut out = Vec::new();
        let complete = solver.enumerate(&mut st, 0, limits, &mut counters, &mut out);
        return RunResult {
            solutions: out,
            complete,
            counters,
            free_after_root,
        };
    }
    let parts = solver.split(root, 6, &mut counters);
    let results: Vec<(Vec<Vec<u64>>, bool, Counters)> = parts
        .into_par_iter()
        .map(|(mut st, pos)| {
            let mut c = Counters::default();
            let mut out = Vec::new();
            let complete = solver.enumerate(&mut st, pos, limits, &mut c, &mut out);
            (out, complete, c)
        })
        .collect();
    let mut solutions = Vec::new();
    let mut complete = true;
    for (s, ok, c) in results {
        solutions.extend(s);
        complete &= ok;
        counters.nodes += c.nodes;
        counters.propagations += c.propagations;
    }
    RunResult {
        solutions,
        complete,
        counters,
        free_after_root,
    }
}

fn root_assigned(st: &solver::State) -> usize {
    st.assigned_count()
}

/// Whether the given constraints admit no assignment; `None` if the node
/// budget ran out first.
fn refutes(csp: &LawCSP, cons: Vec<&Constraint>, node_limit: u64) -> Option<bool> {
    let stop = AtomicBool::new(false);
    let found = AtomicUsize::new(0);
    let limits = Limits {
        deadline: None,
        node_limit: Some(node_limit),
        max_solutions: Some(1),
        stop: &stop,
        found: &found,
    };
    let r = run(csp, Some(cons), &limits, false);
    if !r.solutions.is_empty() {
        Some(false)
    } else if r.complete {
        Some(true)
    } else {
        None
    }
}

/// Greedy chunked deletion down to a subset that is still refuted.
fn minimize(csp: &LawCSP, deadline: Instant) -> (Vec<Constraint>, bool) {
    let mut core: Vec<&Constraint> = csp.constraints().iter().collect();
    let mut chunk = core.len().div_ceil(2);
    let mut finished = true;
    'outer: while chunk >= 1 {
        let mut i = 0;
        while i < core.len() {
            if Instant::now() >= deadline {
                finished = false;
                break 'outer;
            }
            let end = (i + chunk).min(core.len());
            let candidate: Vec<&Constraint> = core[..i].iter().chain(&core[end..]).copied().collect();
            if refutes(csp, candidate.clone(), 200_000) == Some(true) {
                core = candidate;
            } else {
                i = end;
            }
        }
        if chunk == 1 {
            break;
        }
        chunk = chunk.div_ceil(2).max(1).min(chunk - 1).max(1);
    }
    (core.into_iter().cloned().collect(), finished)
}

/// Re-derives every constraint of a certificate from its origin and checks
/// that together they admit no assignment.
pub fn recheck_certificate(cert: &ObstructionCertificate) -> Result<bool> {
    let functor = Arc::new(FunctorSpec::parse_default(&cert.functor)?);
    let layout = LawCSP::layout(functor, cert.carrier_size, cert.support)?;
    let cons = cert
        .constraints
        .iter()
        .map(|o| layout.constraint_for(o))
        .collect::<Result<Vec<_>>>()?;
    Ok(refutes(&layout, cons.iter().collect(), 10_000_000) == Some(true))
}

/// Enumerates every law on carriers `≤ bound`, verifies each one with the
/// axiom battery, and certifies unsatisfiability when there is none.
pub fn search_laws(functor: Arc<FunctorSpec>, cfg: &SearchConfig) -> Result<SearchOutcome> {
    let start = Instant::now();
    let deadline = cfg.timeout.map(|t| start + t);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::usage(format!("thread pool: {e}")))?;
    let csp = build_csp(functor.clone(), cfg.bound, cfg.support)?;
    let stop = AtomicBool::new(false);
    let found = AtomicUsize::new(0);
    let limits = Limits {
        deadline,
        node_limit: None,
        max_solutions: cfg.max_solutions,
        stop: &stop,
        found: &found,
    };
    let r = pool.install(|| run(&csp, None, &limits, true));
    let mut packed = r.solutions;
    packed.sort_unstable();
    packed.dedup();
    let mut values: Vec<Vec<bool>> = packed.iter().map(|p| solver::unpack(p, csp.num_vars())).collect();
    drop(packed);
    let bounded_solutions = values.len();
    let mut undecided = 0;
    if cfg.support > cfg.bound {
        let mut kept = Vec::new();
        for v in values {
            match extend::check_extension(&csp, &v, EXTENSION_NODE_LIMIT, deadline)? {
                Some(true) => kept.push(v),
                Some(false) => {}
                None => {
                    undecided += 1;
                    kept.push(v);
                }
            }
        }
        values = kept;
    }
    let mut solutions = Vec::new();
    let mut verified = true;
    for (i, v) in values.iter().enumerate() {
        verified &= csp.satisfied_by(v);
        let law = DistLaw::table(functor.clone(), to_table(&csp, v)?, format!("solution-{i}"));
        verified &= pool.install(|| check_distlaw_axioms(&law, cfg.bound, cfg.support))?.passed();
        solutions.push(law);
    }
    let mut stats = SearchStats {
        variables: csp.num_vars(),
        constraints: csp.constraints().len(),
        free_after_root: r.free_after_root,
        nodes: r.counters.nodes,
        propagations: r.counters.propagations,
        elapsed_ms: 0,
        naturality_along_all_maps: csp.naturality_along_all_maps(),
        solution_cap_reached: cfg.max_solutions.is_some_and(|m| found.load(std::sync::atomic::Ordering::Relaxed) >= m),
        bounded_solutions,
        rejected_by_extension: bounded_solutions - values.len(),
        extension_undecided: undecided,
    };
    let status = if !r.complete || undecided > 0 {
        SearchStatus::Inconclusive
    } else if solutions.is_empty() {
        SearchStatus::Unsat
    } else {
        SearchStatus::Complete
    };
    let mut certificate = None;
    if status == SearchStatus::Unsat && bounded_solutions == 0 {
        let mut size = cfg.bound;
        let mut small = None;
        for n in 1..cfg.bound {
            let c = build_csp(functor.clone(), n, cfg.support)?;
            if refutes(&c, c.constraints().iter().collect(), 10_000_000) == Some(true) {
                size = n;
                small = Some(c);
                break;
            }
        }
        let c = small.as_ref().unwrap_or(&csp);
        let budget = deadline.unwrap_or(Instant::now() + Duration::from_secs(120));
        let (core, minimal) = minimize(c, budget);
        certificate = Some(ObstructionCertificate {
            functor: functor.expr().to_string(),
            carrier_size: size,
            support: cfg.support,
            constraints: core.into_iter().map(|c| c.origin).collect(),
            minimal,
        });
    }
    let mut reference_solutions = Vec::new();
    for (label, law) in reference_laws(&functor) {
        let Ok(v) = assignment_of(&csp, &law) else { continue };
        let extends = cfg.support <= cfg.bound || extend::check_extension(&csp, &v, EXTENSION_NODE_LIMIT, None)? == Some(true);
        if csp.satisfied_by(&v) && extends {
            reference_solutions.push(label);
        }
    }
    stats.elapsed_ms = start.elapsed().as_millis() as u64;
    Ok(SearchOutcome {
        functor,
        bound: cfg.bound,
        support: cfg.support,
        status,
        solutions,
        verified,
        certificate,
        reference_solutions,
        stats,
    })
}

/// Registry laws a solution can be compared against.
fn reference_laws(functor: &Arc<FunctorSpec>) -> Vec<(String, DistLaw)> {
    let mut out = Vec::new();
    let mut push = |label: String, rule: LawRule| {
        if let Ok(l) = DistLaw::rule(functor.clone(), rule) {
            out.push((label, l));
        }
    };
    push("Barr".into(), LawRule::Barr);
    if functor.is_base(&BaseFunctor::Powerset) {
        push("Image".into(), LawRule::Image);
        push("RestrictedImage".into(), LawRule::RestrictedImage);
    }
    for kind in MorphismKind::ALL {
        if kind == MorphismKind::DiamondFilt {
            continue;
        }
        let m = MonadMorphism::new(kind);
        if m.target().functor_arc().expr() == functor.expr() {
            push(format!("FromMorphism({kind})"), LawRule::FromMorphism(Arc::new(m)));
        }
    }
    out
}

pub const UNKNOWN: &str = "UNKNOWN";

fn labels(refs: &[(String, DistLaw)], law: &DistLaw, bound: usize) -> Vec<String> {
    let labels: Vec<String> = refs
        .iter()
        .filter(|(_, l)| l.agrees_with(law, bound).unwrap_or(false))
        .map(|(name, _)| name.clone())
        .collect();
    if labels.is_empty() {
        vec![UNKNOWN.to_string()]
    } else {
        labels
    }
}

/// Registry laws a table agrees with on carriers `≤ bound`, or `UNKNOWN`.
pub fn classify_law(functor: &Arc<FunctorSpec>, law: &DistLaw, bound: usize) -> Vec<String> {
    labels(&reference_laws(functor), law, bound)
}

/// Labels each solution by the registry laws it agrees with on every stored
/// carrier, or `UNKNOWN`.
pub fn classify_solutions(outcome: &SearchOutcome) -> Vec<Vec<String>> {
    let refs = reference_laws(&outcome.functor);
    outcome.solutions.iter().map(|s| labels(&refs, s, outcome.bound)).collect()
}

impl SearchOutcome {
    /// One-line summary distinguishing a refutation from an empty bounded
    /// search.
    pub fn conclusion(&self) -> String {
        match (self.status, &self.certificate) {
            (SearchStatus::Unsat, Some(c)) => format!(
                "obstruction at size {}: no law of {} exists, since every law restricts to these carriers",
                c.carrier_size,
                self.functor.expr()
            ),
            (SearchStatus::Unsat, None) => format!("no solution within bounds N={}, support {}", self.bound, self.support),
            (SearchStatus::Complete, _) => format!("{} solution(s) at N={}, support {}", self.solutions.len(), self.bound, self.support),
            (SearchStatus::Inconclusive, _) if self.stats.solution_cap_reached => {
                format!("inconclusive: stopped after {} solutions", self.solutions.len())
            }
            (SearchStatus::Inconclusive, _) => "inconclusive: timeout or node budget reached".to_string(),
        }
    }

    pub fn to_report(&self) -> Result<Report> {
        let verdict = match self.status {
            SearchStatus::Complete if self.verified => Verdict::Pass,
            SearchStatus::Complete => Verdict::Fail,
            SearchStatus::Unsat => Verdict::Unsat,
            SearchStatus::Inconclusive => Verdict::Inconclusive,
        };
        let labels = classify_solutions(self);
        let mut r = Report::new("search", verdict);
        if let Some(c) = &self.certificate {
            r.witnesses.push(Witness::new(
                "obstruction",
                format!(
                    "{} law constraints at carriers ≤ {} admit no assignment",
                    c.constraints.len(),
                    c.carrier_size
                ),
                serde_json::to_value(c)?,
            ));
        }
        let solutions: Vec<Value> = self
            .solutions
            .iter()
            .zip(&labels)
            .map(|(s, l)| Ok(json!({"labels": l, "table": s.to_json_table(self.bound)?})))
            .collect::<Result<_>>()?;
        let mut stats = serde_json::to_value(&self.stats)?;
        if let Some(m) = stats.as_object_mut() {
            m.remove("elapsed_ms");
        }
        r.elapsed_ms = self.stats.elapsed_ms;
        Ok(r.with_instances(self.stats.nodes)
            .counter("solutions", self.solutions.len() as u64)
            .counter("variables", self.stats.variables as u64)
            .counter("constraints", self.stats.constraints as u64)
            .counter("nodes", self.stats.nodes)
            .counter("propagations", self.stats.propagations)
            .with_details(json!({
                "functor": self.functor.expr().to_string(),
                "max_size": self.bound,
                "support": self.support,
                "status": self.status,
                "verified": self.verified,
                "labels": labels,
                "reference_solutions": self.reference_solutions,
                "solutions": solutions,
                "obstruction_size": self.certificate.as_ref().map(|c| c.carrier_size),
                "conclusion": self.conclusion(),
                "stats": stats,
            })))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(s: &str) -> Arc<FunctorSpec> {
        Arc::new(FunctorSpec::parse_default(s).unwrap())
    }

    fn cfg(bound: usize, support: usize) -> SearchConfig {
        SearchConfig {
            bound,
            support,
            jobs: 2,
            timeout: None,
            max_solutions: Some(1000),
        }
    }

    #[test]
    fn constant_one_is_forced() {
        let csp = build_csp(spec("1"), 2, 2).unwrap();
        let stop = AtomicBool::new(false);
        let found = AtomicUsize::new(0);
        let limits = Limits {
            deadline: None,
            node_limit: None,
            max_solutions: None,
            stop: &stop,
            found: &found,
        };
        let r = run(&csp, None, &limits, false);
        assert_eq!(r.free_after_root, 0);
        assert_eq!(r.solutions.len(), 1);
    }

    #[test]
    fn empty_family_goes_to_empty_set() {
        let csp = build_csp(spec("P(X)"), 1, 1).unwrap();
        let solver = Solver::full(&csp);
        let root = solver.root(&mut Counters::default()).unwrap();
        let v = root.values();
        assert!(v[csp.var(1, 0, 0) as usize]);
        assert!(!v[csp.var(1, 0, 1) as usize]);
    }

    #[test]
    fn registry_laws_satisfy_the_csp() {
        let csp = build_csp(spec("P(X)"), 2, 2).unwrap();
        for rule in [LawRule::Barr, LawRule::Image, LawRule::RestrictedImage] {
            let law = DistLaw::rule(spec("P(X)"), rule).unwrap();
            assert!(csp.satisfied_by(&assignment_of(&csp, &law).unwrap()), "{}", law.name());
        }
    }

    #[test]
    fn powerset_at_two() {
        let out = search_laws(spec("P(X)"), &cfg(2, 2)).unwrap();
        assert_eq!(out.status, SearchStatus::Complete);
        assert!(out.verified);
        let labels = classify_solutions(&out);
        assert!(labels.iter().any(|l| l.contains(&"Barr".to_string())));
        assert_eq!(out.solutions.len(), 68);
    }

    #[test]
    fn auxiliary_carrier_removes_bounded_artifacts() {
        let out = search_laws(spec("P(X)"), &cfg(2, 3)).unwrap();
        assert_eq!(out.status, SearchStatus::Complete);
        assert_eq!(out.stats.bounded_solutions, 68);
        assert_eq!(out.solutions.len(), 3);
        let mut labels: Vec<String> = classify_solutions(&out).into_iter().map(|l| l[0].clone()).collect();
        labels.sort();
        assert_eq!(labels, ["Barr", "Image", "RestrictedImage"]);
    }

    #[test]
    fn worker_count_does_not_change_the_result() {
        let one = search_laws(spec("P(X)"), &SearchConfig { jobs: 1, ..cfg(2, 2) }).unwrap();
        let two = search_laws(spec("P(X)"), &SearchConfig { jobs: 3, ..cfg(2, 2) }).unwrap();
        let tables = |o: &SearchOutcome| o.solutions.iter().map(|s| s.to_json_table(2).unwrap()).collect::<Vec<_>>();
        assert_eq!(tables(&one), tables(&two));
    }

    #[test]
    fn solution_cap_is_inconclusive() {
        let out = search_laws(spec("T32(X)"), &cfg(2, 2)).unwrap();
        assert_eq!(out.status, SearchStatus::Inconclusive);
        assert!(out.stats.solution_cap_reached);
        assert_eq!(out.solutions.len(), 1000);
    }

    #[test]
    fn certificate_roundtrip_for_triples() {
        let out = search_laws(spec("T32(X)"), &cfg(3, 3)).unwrap();
        assert_eq!(out.status, SearchStatus::Unsat);
        let cert = out.certificate.unwrap();
        assert!(cert.carrier_size <= 3);
        assert!(recheck_certificate(&cert).unwrap());
        let json = serde_json::to_string(&cert).unwrap();
        let back: ObstructionCertificate = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cert);
    }
}
