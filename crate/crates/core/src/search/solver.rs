use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::time::Instant;

use super::csp::{Constraint, LawCSP};

/// Assignment state with an undo trail. Values: 0 unassigned, 1 true, -1 false.
#[derive(Clone)]
pub(crate) struct State {
    vals: Vec<i8>,
    trail: Vec<u32>,
    qhead: usize,
}

impl State {
    fn assign(&mut self, v: u32, value: bool) -> bool {
        let want = if value { 1 } else { -1 };
        match self.vals[v as usize] {
            0 => {
                self.vals[v as usize] = want;
                self.trail.push(v);
                true
            }
            cur => cur == want,
        }
    }

    fn undo_to(&mut self, len: usize) {
        for v in self.trail.drain(len..) {
            self.vals[v as usize] = 0;
        }
        self.qhead = self.qhead.min(len);
    }

    pub fn with_vars(n: usize) -> Self {
        State {
            vals: vec![0; n],
            trail: Vec::new(),
            qhead: 0,
        }
    }

    pub fn value(&self, v: u32) -> Option<bool> {
        match self.vals[v as usize] {
            0 => None,
            x => Some(x == 1),
        }
    }

    /// Assigns `v`; false if it already holds the other value.
    pub fn set(&mut self, v: u32, value: bool) -> bool {
        self.assign(v, value)
    }

    pub fn assigned_count(&self) -> usize {
        self.trail.len()
    }

    pub fn values(&self) -> Vec<bool> {
        self.vals.iter().map(|&v| v == 1).collect()
    }

    /// Values packed most significant bit first, so that word order is
    /// the lexicographic order of the bit vector.
    pub fn packed(&self) -> Vec<u64> {
        let mut out = vec![0u64; self.vals.len().div_ceil(64)];
        for (i, &v) in self.vals.iter().enumerate() {
            if v == 1 {
                out[i / 64] |= 1 << (63 - i % 64);
            }
        }
        out
    }
}

pub(crate) fn unpack(words: &[u64], n: usize) -> Vec<bool> {
    (0..n).map(|i| words[i / 64] >> (63 - i % 64) & 1 == 1).collect()
}

#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Counters {
    pub nodes: u64,
    pub propagations: u64,
}

pub(crate) struct Limits<'a> {
    pub deadline: Option<Instant>,
    pub node_limit: Option<u64>,
    pub max_solutions: Option<usize>,
    pub stop: &'a AtomicBool,
    pub found: &'a AtomicUsize,
}

/// Constraints `target ↔ ⋁ ⋀` in flat arrays.
#[derive(Default)]
pub(crate) struct Compiled {
    targets: Vec<u32>,
    /// Constraint `i` owns terms `starts[i]..starts[i + 1]`.
    starts: Vec<u32>,
    /// Term `t` owns literals `term_starts[t]..term_starts[t + 1]`.
    term_starts: Vec<u32>,
    lits: Vec<u32>,
}

impl Compiled {
    pub fn new() -> Self {
        Compiled {
            targets: Vec::new(),
            starts: vec![0],
            term_starts: vec![0],
            lits: Vec::new(),
        }
    }

    pub fn from_constraints<'c>(cons: impl IntoIterator<Item = &'c Constraint>) -> Self {
        let mut out = Compiled::new();
        for c in cons {
            out.push(c.target, c.terms.iter().map(|t| t.as_slice()));
        }
        out
    }

    pub fn push<'t>(&mut self, target: u32, terms: impl IntoIterator<Item = &'t [u32]>) {
        self.targets.push(target);
        for t in terms {
            self.lits.extend_from_slice(t);
            self.term_starts.push(self.lits.len() as u32);
        }
        self.starts.push((self.term_starts.len() - 1) as u32);
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    fn terms(&self, i: usize) -> impl Iterator<Item = &[u32]> + '_ {
        (self.starts[i] as usize..self.starts[i + 1] as usize)
            .map(move |t| &self.lits[self.term_starts[t] as usize..self.term_starts[t + 1] as usize])
    }

    fn term(&self, t: usize) -> &[u32] {
        &self.lits[self.term_starts[t] as usize..self.term_starts[t + 1] as usize]
    }
}

/// Propagation and backtracking over a set of constraints.
pub(crate) struct Solver<'a> {
    num_vars: usize,
    order: &'a [u32],
    cons: Compiled,
    occ_starts: Vec<u32>,
    occurs: Vec<u32>,
}

impl<'a> Solver<'a> {
    pub fn new(csp: &'a LawCSP, cons: Vec<&'a Constraint>) -> Self {
        Solver::compiled(csp.num_vars(), &csp.order, Compiled::from_constraints(cons))
    }

    pub fn full(csp: &'a LawCSP) -> Self {
        Solver::new(csp, csp.constraints.iter().collect())
    }

    pub fn compiled(num_vars: usize, order: &'a [u32], cons: Compiled) -> Self {
        let mut counts = vec![0u32; num_vars + 1];
        let mut vars = Vec::new();
        let each = |i: usize, vars: &mut Vec<u32>| {
            vars.clear();
            vars.push(cons.targets[i]);
            for t in cons.terms(i) {
                vars.extend_from_slice(t);
            }
            vars.sort_unstable();
            vars.dedup();
        };
        for i in 0..cons.len() {
            each(i, &mut vars);
            for &v in &vars {
                counts[v as usize + 1] += 1;
            }
        }
        for v in 0..num_vars {
            counts[v + 1] += counts[v];
        }
        let mut fill = counts.clone();
        let mut occurs = vec![0u32; counts[num_vars] as usize];
        for i in 0..cons.len() {
            each(i, &mut vars);
            for &v in &vars {
                occurs[fill[v as usize] as usize] = i as u32;
                fill[v as usize] += 1;
            }
        }
        Solver {
            num_vars,
            order,
            cons,
            occ_starts: counts,
            occurs,
        }
    }

    /// Root state after propagating every constraint; `None` on conflict.
    pub fn root(&self, counters: &mut Counters) -> Option<State> {
        self.root_from(State::with_vars(self.num_vars), counters)
    }

    pub fn root_from(&self, mut st: State, counters: &mut Counters) -> Option<State> {
        for i in 0..self.cons.len() {
            if !self.propagate_one(i, &mut st) {
                return None;
            }
        }
        self.propagate(&mut st, counters).then_some(st)
    }

    fn propagate(&self, st: &mut State, counters: &mut Counters) -> bool {
        while st.qhead < st.trail.len() {
            let v = st.trail[st.qhead] as usize;
            st.qhead += 1;
            counters.propagations += 1;
            for &ci in &self.occurs[self.occ_starts[v] as usize..self.occ_starts[v + 1] as usize] {
                if !self.propagate_one(ci as usize, st) {
                    return false;
                }
            }
        }
        true
    }

    /// Applies the sound deductions of one constraint; false on conflict.
    fn propagate_one(&self, ci: usize, st: &mut State) -> bool {
        let c = &self.cons;
        let target = c.targets[ci];
        let t = st.vals[target as usize];
        let mut open = 0usize;
        let mut last_open = usize::MAX;
        for ti in c.starts[ci] as usize..c.starts[ci + 1] as usize {
            let mut falsified = false;
            let mut unassigned = 0usize;
            let mut free = 0u32;
            for &l in c.term(ti) {
                match st.vals[l as usize] {
                    -1 => {
                        falsified = true;
                        break;
                    }
                    0 => {
                        unassigned += 1;
                        free = l;
                    }
                    _ => {}
                }
            }
            if falsified {
                continue;
            }
            if unassigned == 0 {
                return st.assign(target, true);
            }
            if t == -1 && unassigned == 1 {
                if !st.assign(free, false) {
                    return false;
                }
                continue;
            }
            open += 1;
            last_open = ti;
        }
        if st.vals[target as usize] == -1 {
            return true;
        }
        if open == 0 {
            return st.assign(target, false);
        }
        if st.vals[target as usize] == 1 && open == 1 {
            for &l in c.term(last_open) {
                if !st.assign(l, true) {
                    return false;
                }
            }
        }
        true
    }

    fn next_free(&self, st: &State, mut pos: usize) -> Option<usize> {
        let order = self.order;
        while pos < order.len() && st.vals[order[pos] as usize] != 0 {
            pos += 1;
        }
        (pos < order.len()).then_some(pos)
    }

    /// Splits the search below `st` into independent subproblems by fixing
    /// the first `depth` branching variables.
    pub fn split(&self, st: State, depth: usize, counters: &mut Counters) -> Vec<(State, usize)> {
        let mut frontier = vec![(st, 0usize)];
        for _ in 0..depth {
            let mut next = Vec::new();
            for (s, pos) in frontier {
                let Some(p) = self.next_free(&s, pos) else {
                    next.push((s, pos));
                    continue;
                };
                let v = self.order[p];
                for value in [false, true] {
                    let mut child = s.clone();
                    counters.nodes += 1;
                    if child.assign(v, value) && self.propagate(&mut child, counters) {
                        next.push((child, p));
                    }
                }
            }
            frontier = next;
        }
        frontier
    }

    /// Depth-first enumeration below `st`; returns false if a limit cut
    /// the search short.
    pub fn enumerate(
        &self,
        st: &mut State,
        pos: usize,
        limits: &Limits,
        counters: &mut Counters,
        out: &mut Vec<Vec<u64>>,
    ) -> bool {
        if limits.stop.load(Ordering::Relaxed) {
            return false;
        }
        if counters.nodes % 1024 == 0 {
            if let Some(d) = limits.deadline {
                if Instant::now() >= d {
                    limits.stop.store(true, Ordering::Relaxed);
                    return false;
                }
            }
        }
        if limits.node_limit.is_some_and(|l| counters.nodes >= l) {
            return false;
        }
        let Some(p) = self.next_free(st, pos) else {
            let total = limits.found.fetch_add(1, Ordering::Relaxed) + 1;
            match limits.max_solutions {
                Some(m) if total > m => {
                    limits.stop.store(true, Ordering::Relaxed);
                    return false;
                }
                Some(m) if total == m => {
                    out.push(st.packed());
                    limits.stop.store(true, Ordering::Relaxed);
                    return false;
                }
                _ => {
                    out.push(st.packed());
                    return true;
                }
            }
        };
        let v = self.order[p];
        for value in [false, true] {
            counters.nodes += 1;
            let mark = st.trail.len();
            if st.assign(v, value) && self.propagate(st, counters) && !self.enumerate(st, p, limits, counters, out) {
                st.undo_to(mark);
                return false;
            }
            st.undo_to(mark);
        }
        true
    }
}
