//! Auxiliary carriers: a bounded solution on carriers `≤ N` survives a
//! support bound `K > N` only if components on carriers `N+1..=K` exist
//! that satisfy the remaining law constraints.

use std::sync::atomic::{AtomicBool, AtomicUsize};
use std::time::Instant;

use super::csp::{generating_maps, naturality_constraint, support_reps, unit_constraint, union_map, LawCSP};
use super::solver::{Compiled, Counters, Limits, Solver, State};
use crate::error::Result;
use crate::finset::FinFun;

/// Auxiliary variables beyond this many are refused.
const AUX_LIMIT_FACTOR: usize = 4;

/// Adds a constraint with the fixed part of `st` substituted; units are
/// assigned directly. False on an immediate clash.
fn push_simplified<'t>(
    out: &mut Compiled,
    st: &mut State,
    target: u32,
    terms: impl IntoIterator<Item = &'t [u32]>,
    buf: &mut Vec<u32>,
    kept: &mut Vec<u32>,
) -> bool {
    kept.clear();
    let mut starts = vec![0usize];
    let mut satisfied = false;
    for t in terms {
        buf.clear();
        let mut dead = false;
        for &l in t {
            match st.value(l) {
                Some(false) => {
                    dead = true;
                    break;
                }
                Some(true) => {}
                None => buf.push(l),
            }
        }
        if dead {
            continue;
        }
        if buf.is_empty() {
            satisfied = true;
            break;
        }
        kept.extend_from_slice(buf);
        starts.push(kept.len());
    }
    if satisfied {
        return st.set(target, true);
    }
    if starts.len() == 1 {
        return st.set(target, false);
    }
    match st.value(target) {
        Some(false) if starts.windows(2).all(|w| w[1] - w[0] == 1) => kept.iter().all(|&l| st.set(l, false)),
        Some(true) if starts.len() == 2 => kept.iter().all(|&l| st.set(l, true)),
        _ => {
            out.push(target, starts.windows(2).map(|w| &kept[w[0]..w[1]]));
            true
        }
    }
}

/// Whether `values` on the carriers of `csp` extend to carriers up to the
/// support bound. `None` when the node budget runs out.
pub(crate) fn check_extension(csp: &LawCSP, values: &[bool], node_limit: u64, deadline: Option<Instant>) -> Result<Option<bool>> {
    let n = csp.bound();
    let k_max = csp.support();
    let f = csp.functor().clone();
    let limit = f.limit().saturating_mul(AUX_LIMIT_FACTOR);
    let ext = LawCSP::layout_with_limit(f.clone(), k_max, k_max, limit)?;
    let primary = csp.num_vars();
    let mut st = State::with_vars(ext.num_vars());
    for (v, &b) in values.iter().enumerate() {
        st.set(v as u32, b);
    }
    let mut cons = Compiled::new();
    let (mut buf, mut kept) = (Vec::new(), Vec::new());

    for m in n + 1..=k_max {
        let feta = f.apply_map(&FinFun::new(1 << m, (0..m).map(|x| 1 << x).collect())?)?;
        for a in 0..ext.outputs(m) {
            for z in 0..ext.outputs(m) {
                let c = unit_constraint(&ext, m, feta.apply(a), a, z);
                if !push_simplified(&mut cons, &mut st, c.target, c.terms.iter().map(|t| t.as_slice()), &mut buf, &mut kept) {
                    return Ok(Some(false));
                }
            }
        }
    }

    for g in generating_maps(k_max).iter().filter(|g| g.dom() > n || g.cod() > n) {
        let fpg = f.apply_map(&super::csp::image_map(g))?;
        let fg = f.apply_map(g)?;
        for a in 0..ext.rows(g.dom()) {
            for z in 0..ext.outputs(g.cod()) {
                let c = naturality_constraint(&ext, g, &fpg, &fg, a, z);
                if !push_simplified(&mut cons, &mut st, c.target, c.terms.iter().map(|t| t.as_slice()), &mut buf, &mut kept) {
                    return Ok(Some(false));
                }
            }
        }
    }

    let mut pair = Vec::new();
    for x in 0..=n {
        for b in support_reps(x, k_max).into_iter().filter(|b| b.len() > n) {
            let k = b.len();
            let j = FinFun::new(1 << x, b.iter().map(|&s| s as usize).collect())?;
            let fj = f.apply_map(&j)?;
            let fmu = f.apply_map(&union_map(&b, x))?;
            for frak in 0..ext.rows(k) {
                for z in 0..ext.outputs(x) {
                    pair.clear();
                    for c in 0..ext.outputs(k) {
                        pair.push([ext.var(k, frak, c), ext.var(x, fj.apply(c), z)]);
                    }
                    let target = ext.var(x, fmu.apply(frak), z);
                    if !push_simplified(&mut cons, &mut st, target, pair.iter().map(|p| p.as_slice()), &mut buf, &mut kept) {
                        return Ok(Some(false));
                    }
                }
            }
        }
    }

    let order: Vec<u32> = (primary as u32..ext.num_vars() as u32).collect();
    let solver = Solver::compiled(ext.num_vars(), &order, cons);
    let mut counters = Counters::default();
    let Some(mut root) = solver.root_from(st, &mut counters) else {
        return Ok(Some(false));
    };
    let stop = AtomicBool::new(false);
    let found = AtomicUsize::new(0);
    let limits = Limits {
        deadline,
        node_limit: Some(node_limit),
        max_solutions: Some(1),
        stop: &stop,
        found: &found,
    };
    let mut out = Vec::new();
    let complete = solver.enumerate(&mut root, 0, &limits, &mut counters, &mut out);
    Ok(if !out.is_empty() {
        Some(true)
    } else if complete {
        Some(false)
    } else {
        None
    })
}
