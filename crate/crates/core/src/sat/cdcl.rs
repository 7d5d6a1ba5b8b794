//! Embedded conflict-driven solver.
//!
//! Two-watched-literal propagation, first-UIP learning with clause
//! minimization, activity-based branching with saved phases, Luby restarts,
//! periodic removal of learnt clauses and solving under assumptions.
//! Activity ties go to the lowest variable index, so runs are deterministic.

use std::time::Instant;

use super::{Assignment, Lit};

const NO_REASON: u32 = u32::MAX;
const RESTART_BASE: u64 = 100;
const VAR_DECAY: f64 = 0.95;
const ABSENT: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Sat,
    Unsat,
    Timeout,
}

// Internal literal code: 2 * var + negated, with 0-based vars.
#[inline]
fn code(l: Lit) -> u32 {
    ((l.var() - 1) << 1) | (!l.is_positive()) as u32
}

#[inline]
fn decode(c: u32) -> Lit {
    Lit::new((c >> 1) + 1, c & 1 == 0)
}

struct StoredClause {
    lits: Vec<u32>,
    learnt: bool,
    deleted: bool,
    /// Number of distinct decision levels when learnt.
    lbd: u32,
}

/// Binary max-heap of variables ordered by activity, lowest index first on ties.
#[derive(Default)]
struct VarOrder {
    heap: Vec<u32>,
    pos: Vec<usize>,
}

impl VarOrder {
    #[inline]
    fn better(act: &[f64], a: u32, b: u32) -> bool {
        let (x, y) = (act[a as usize], act[b as usize]);
        x > y || (x == y && a < b)
    }

    fn contains(&self, v: u32) -> bool {
        self.pos[v as usize] != ABSENT
    }

    fn push(&mut self, v: u32, act: &[f64]) {
        if self.pos.len() <= v as usize {
            self.pos.resize(v as usize + 1, ABSENT);
        }
        if self.contains(v) {
            return;
        }
        self.pos[v as usize] = self.heap.len();
        self.heap.push(v);
        self.sift_up(self.heap.len() - 1, act);
    }

    fn pop(&mut self, act: &[f64]) -> Option<u32> {
        let top = *self.heap.first()?;
        let last = self.heap.pop().unwrap();
        self.pos[top as usize] = ABSENT;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.pos[last as usize] = 0;
            self.sift_down(0, act);
        }
        Some(top)
    }

    fn increased(&mut self, v: u32, act: &[f64]) {
        if self.contains(v) {
            self.sift_up(self.pos[v as usize], act);
        }
    }

    fn sift_up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let parent = (i - 1) / 2;
            let p = self.heap[parent];
            if !Self::better(act, v, p) {
                break;
            }
            self.heap[i] = p;
            self.pos[p as usize] = i;
            i = parent;
        }
        self.heap[i] = v;
        self.pos[v as usize] = i;
    }

    fn sift_down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        loop {
            let l = 2 * i + 1;
            if l >= self.heap.len() {
                break;
            }
            let r = l + 1;
            let c = if r < self.heap.len() && Self::better(act, self.heap[r], self.heap[l]) { r } else { l };
            if !Self::better(act, self.heap[c], v) {
                break;
            }
            self.heap[i] = self.heap[c];
            self.pos[self.heap[i] as usize] = i;
            i = c;
        }
        self.heap[i] = v;
        self.pos[v as usize] = i;
    }
}

pub struct Solver {
    clauses: Vec<StoredClause>,
    watches: Vec<Vec<u32>>,
    // Per variable: 1 true, -1 false, 0 unassigned.
    value: Vec<i8>,
    level: Vec<u32>,
    reason: Vec<u32>,
    trail: Vec<u32>,
    trail_lim: Vec<usize>,
    qhead: usize,
    ok: bool,
    seen: Vec<bool>,
    activity: Vec<f64>,
    var_inc: f64,
    order: VarOrder,
    phase: Vec<bool>,
    learnts: usize,
    max_learnts: f64,
    failed: Vec<Lit>,
    relax_root: bool,
    refuted: Vec<Lit>,
    ticks: u64,
}

impl Solver {
    pub fn new(num_vars: u32) -> Self {
        let mut s = Solver {
            clauses: Vec::new(),
            watches: Vec::new(),
            value: Vec::new(),
            level: Vec::new(),
            reason: Vec::new(),
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            ok: true,
            seen: Vec::new(),
            activity: Vec::new(),
            var_inc: 1.0,
            order: VarOrder::default(),
            phase: Vec::new(),
            learnts: 0,
            max_learnts: 0.0,
            failed: Vec::new(),
            relax_root: false,
            refuted: Vec::new(),
            ticks: 0,
        };
        s.reserve_vars(num_vars);
        s
    }

    pub fn num_vars(&self) -> u32 {
        self.value.len() as u32
    }

    /// Grows the variable range to at least `n` variables.
    pub fn reserve_vars(&mut self, n: u32) {
        while self.num_vars() < n {
            let v = self.num_vars();
            self.value.push(0);
            self.level.push(0);
            self.reason.push(NO_REASON);
            self.seen.push(false);
            self.watches.push(Vec::new());
            self.watches.push(Vec::new());
            self.activity.push(0.0);
            self.phase.push(false);
            self.order.push(v, &self.activity);
        }
    }

    /// Sets the polarity tried first when branching on `var`.
    pub fn set_phase(&mut self, var: u32, value: bool) {
        self.reserve_vars(var);
        self.phase[var as usize - 1] = value;
    }

    /// Allocates a fresh variable and returns its 1-based index.
    pub fn new_var(&mut self) -> u32 {
        let n = self.num_vars() + 1;
        self.reserve_vars(n);
        n
    }

    #[inline]
    fn lit_value(&self, c: u32) -> i8 {
        let v = self.value[(c >> 1) as usize];
        if c & 1 == 0 {
            v
        } else {
            -v
        }
    }

    #[inline]
    fn decision_level(&self) -> usize {
        self.trail_lim.len()
    }

    fn enqueue(&mut self, c: u32, reason: u32) {
        let v = (c >> 1) as usize;
        self.value[v] = if c & 1 == 0 { 1 } else { -1 };
        self.level[v] = self.decision_level() as u32;
        self.reason[v] = reason;
        self.trail.push(c);
    }

    fn cancel_until(&mut self, level: usize) {
        if self.decision_level() <= level {
            return;
        }
        let start = self.trail_lim[level];
        for i in (start..self.trail.len()).rev() {
            let v = (self.trail[i] >> 1) as usize;
            self.phase[v] = self.value[v] == 1;
            self.value[v] = 0;
            self.reason[v] = NO_REASON;
            self.order.push(v as u32, &self.activity);
        }
        self.trail.truncate(start);
        self.trail_lim.truncate(level);
        self.qhead = self.trail.len();
    }

    /// Adds a clause. Returns `false` once the clause set is known to be
    /// unsatisfiable at the root.
    pub fn add_clause(&mut self, lits: &[Lit]) -> bool {
        if !self.ok {
            return false;
        }
        self.cancel_until(0);
        let max = lits.iter().map(|l| l.var()).max().unwrap_or(0);
        self.reserve_vars(max);
        let mut c: Vec<u32> = lits.iter().map(|&l| code(l)).collect();
        c.sort_unstable();
        c.dedup();
        if c.windows(2).any(|w| w[0] >> 1 == w[1] >> 1) {
            return true;
        }
        if c.iter().any(|&l| self.lit_value(l) == 1) {
            return true;
        }
        c.retain(|&l| self.lit_value(l) == 0);
        match c.len() {
            0 => {
                self.ok = false;
                false
            }
            1 => {
                self.enqueue(c[0], NO_REASON);
                if self.propagate().is_some() {
                    self.ok = false;
                }
                self.ok
            }
            _ => {
                self.attach(c, false, 0);
                true
            }
        }
    }

    fn attach(&mut self, lits: Vec<u32>, learnt: bool, lbd: u32) -> u32 {
        let ci = self.clauses.len() as u32;
        self.watches[lits[0] as usize].push(ci);
        self.watches[lits[1] as usize].push(ci);
        self.clauses.push(StoredClause { lits, learnt, deleted: false, lbd });
        if learnt {
            self.learnts += 1;
        }
        ci
    }

    fn propagate(&mut self) -> Option<u32> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.ticks += 1;
            let false_lit = p ^ 1;
            let mut ws = std::mem::take(&mut self.watches[false_lit as usize]);
            let (mut i, mut j) = (0, 0);
            let mut conflict = None;
            while i < ws.len() {
                let ci = ws[i];
                i += 1;
                let stored = &mut self.clauses[ci as usize];
                if stored.deleted {
                    continue;
                }
                let clause = &mut stored.lits;
                if clause[0] == false_lit {
                    clause.swap(0, 1);
                }
                let first = clause[0];
                let first_val = {
                    let v = self.value[(first >> 1) as usize];
                    if first & 1 == 0 {
                        v
                    } else {
                        -v
                    }
                };
                if first_val == 1 {
                    ws[j] = ci;
                    j += 1;
                    continue;
                }
                let mut moved = false;
                for k in 2..clause.len() {
                    let l = clause[k];
                    let v = self.value[(l >> 1) as usize];
                    let lv = if l & 1 == 0 { v } else { -v };
                    if lv != -1 {
                        clause.swap(1, k);
                        self.watches[l as usize].push(ci);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = ci;
                j += 1;
                if first_val == -1 {
                    conflict = Some(ci);
                    while i < ws.len() {
                        ws[j] = ws[i];
                        j += 1;
                        i += 1;
                    }
                } else {
                    self.enqueue(first, ci);
                }
            }
            ws.truncate(j);
            self.watches[false_lit as usize] = ws;
            if conflict.is_some() {
                self.qhead = self.trail.len();
                return conflict;
            }
        }
        None
    }

    fn bump(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.order.increased(v as u32, &self.activity);
    }

    // Literals of the learnt clause whose reason is already covered by the
    // other literals are dropped.
    fn redundant(&self, q: u32) -> bool {
        let r = self.reason[(q >> 1) as usize];
        r != NO_REASON
            && self.clauses[r as usize].lits[1..].iter().all(|&x| {
                let u = (x >> 1) as usize;
                self.seen[u] || self.level[u] == 0
            })
    }

    fn analyze(&mut self, mut confl: u32) -> (Vec<u32>, usize, u32) {
        let current = self.decision_level() as u32;
        let mut learnt = vec![0u32];
        let mut pending = 0usize;
        let mut p: Option<u32> = None;
        let mut idx = self.trail.len();
        loop {
            let skip = usize::from(p.is_some());
            for k in skip..self.clauses[confl as usize].lits.len() {
                let q = self.clauses[confl as usize].lits[k];
                let v = (q >> 1) as usize;
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    self.bump(v);
                    if self.level[v] >= current {
                        pending += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                idx -= 1;
                if self.seen[(self.trail[idx] >> 1) as usize] {
                    break;
                }
            }
            let lit = self.trail[idx];
            let v = (lit >> 1) as usize;
            self.seen[v] = false;
            p = Some(lit);
            pending -= 1;
            if pending == 0 {
                break;
            }
            confl = self.reason[v];
        }
        learnt[0] = p.unwrap() ^ 1;

        let all = learnt.clone();
        let mut keep = 1;
        for k in 1..learnt.len() {
            if !self.redundant(learnt[k]) {
                learnt[keep] = learnt[k];
                keep += 1;
            }
        }
        learnt.truncate(keep);
        for &q in &all[1..] {
            self.seen[(q >> 1) as usize] = false;
        }
        self.var_inc /= VAR_DECAY;

        let mut bt = 0;
        if learnt.len() > 1 {
            let mut best = 1;
            for k in 2..learnt.len() {
                if self.level[(learnt[k] >> 1) as usize] > self.level[(learnt[best] >> 1) as usize] {
                    best = k;
                }
            }
            learnt.swap(1, best);
            bt = self.level[(learnt[1] >> 1) as usize] as usize;
        }
        let mut levels: Vec<u32> = learnt.iter().map(|&q| self.level[(q >> 1) as usize]).collect();
        levels.sort_unstable();
        levels.dedup();
        (learnt, bt, levels.len() as u32)
    }

    // Collects the assumptions responsible for `failed` being false.
    fn analyze_final(&mut self, failed: u32) {
        self.failed.clear();
        self.failed.push(decode(failed));
        if self.decision_level() == 0 {
            return;
        }
        let fv = (failed >> 1) as usize;
        self.seen[fv] = true;
        for i in (self.trail_lim[0]..self.trail.len()).rev() {
            let x = (self.trail[i] >> 1) as usize;
            if !self.seen[x] {
                continue;
            }
            let r = self.reason[x];
            if r == NO_REASON {
                // Includes the complement of `failed` when that was assumed too.
                self.failed.push(decode(self.trail[i]));
            } else {
                for k in 1..self.clauses[r as usize].lits.len() {
                    let q = (self.clauses[r as usize].lits[k] >> 1) as usize;
                    if self.level[q] > 0 {
                        self.seen[q] = true;
                    }
                }
            }
            self.seen[x] = false;
        }
        self.seen[fv] = false;
    }

    fn locked(&self, ci: u32) -> bool {
        let first = self.clauses[ci as usize].lits[0];
        self.reason[(first >> 1) as usize] == ci && self.lit_value(first) == 1
    }

    // Drops the less useful half of the learnt clauses.
    fn reduce_learnts(&mut self) {
        let mut candidates: Vec<u32> = (0..self.clauses.len() as u32)
            .filter(|&ci| {
                let c = &self.clauses[ci as usize];
                c.learnt && !c.deleted && c.lits.len() > 2 && c.lbd > 2 && !self.locked(ci)
            })
            .collect();
        candidates.sort_by_key(|&ci| {
            let c = &self.clauses[ci as usize];
            (std::cmp::Reverse(c.lbd), std::cmp::Reverse(c.lits.len()), ci)
        });
        for &ci in &candidates[..candidates.len() / 2] {
            let c = &mut self.clauses[ci as usize];
            c.deleted = true;
            c.lits = Vec::new();
            self.learnts -= 1;
        }
        self.max_learnts *= 1.1;
    }

    fn pick_branch(&mut self) -> Option<u32> {
        while let Some(v) = self.order.pop(&self.activity) {
            if self.value[v as usize] == 0 {
                return Some((v << 1) | u32::from(!self.phase[v as usize]));
            }
        }
        None
    }

    /// Solves under the given assumptions. After `Unsat`, the failed
    /// assumptions (a subset of `assumptions`) are available from
    /// [`Solver::failed_assumptions`]; an empty set means the clauses alone
    /// are unsatisfiable.
    pub fn solve(&mut self, assumptions: &[Lit], deadline: Option<Instant>) -> Outcome {
        self.failed.clear();
        if !self.ok {
            return Outcome::Unsat;
        }
        self.cancel_until(0);
        let max = assumptions.iter().map(|l| l.var()).max().unwrap_or(0);
        self.reserve_vars(max);
        let assumptions: Vec<u32> = assumptions.iter().map(|&l| code(l)).collect();
        let originals = self.clauses.len() - self.learnts;
        self.max_learnts = self.max_learnts.max((originals / 3).max(2000) as f64);
        let mut restarts = 0u32;
        loop {
            let limit = RESTART_BASE * luby(restarts);
            match self.search(&assumptions, limit, deadline) {
                Some(outcome) => return outcome,
                None => restarts += 1,
            }
        }
    }

    fn search(&mut self, assumptions: &[u32], limit: u64, deadline: Option<Instant>) -> Option<Outcome> {
        let mut conflicts = 0u64;
        let mut last_check = self.ticks;
        loop {
            if self.ticks - last_check > 4096 {
                last_check = self.ticks;
                if deadline.is_some_and(|d| Instant::now() >= d) {
                    self.cancel_until(0);
                    return Some(Outcome::Timeout);
                }
            }
            if let Some(confl) = self.propagate() {
                conflicts += 1;
                self.ticks += 16;
                if self.decision_level() == 0 {
                    self.ok = false;
                    return Some(Outcome::Unsat);
                }
                let (learnt, bt, lbd) = self.analyze(confl);
                self.cancel_until(bt);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], NO_REASON);
                } else {
                    let first = learnt[0];
                    let ci = self.attach(learnt, true, lbd);
                    self.enqueue(first, ci);
                }
                if self.learnts as f64 >= self.max_learnts + self.trail.len() as f64 {
                    self.reduce_learnts();
                }
                continue;
            }
            if conflicts >= limit {
                self.cancel_until(self.decision_level().min(assumptions.len()));
                return None;
            }
            let mut next = None;
            while self.decision_level() < assumptions.len() {
                let a = assumptions[self.decision_level()];
                match self.lit_value(a) {
                    1 => self.trail_lim.push(self.trail.len()),
                    -1 if self.relax_root && self.level[(a >> 1) as usize] == 0 => {
                        self.refuted.push(decode(a));
                        self.trail_lim.push(self.trail.len());
                    }
                    -1 => {
                        self.analyze_final(a);
                        self.cancel_until(0);
                        return Some(Outcome::Unsat);
                    }
                    _ => {
                        next = Some(a);
                        break;
                    }
                }
            }
            let next = match next.or_else(|| self.pick_branch()) {
                Some(n) => n,
                None => return Some(Outcome::Sat),
            };
            self.ticks += 1;
            self.trail_lim.push(self.trail.len());
            self.enqueue(next, NO_REASON);
        }
    }

    /// Like [`Solver::solve`], except that assumptions refuted by the clauses
    /// alone are set aside instead of ending the search. They are available
    /// from [`Solver::refuted_assumptions`] and never appear in a failed set.
    pub fn solve_relaxing(&mut self, assumptions: &[Lit], deadline: Option<Instant>) -> Outcome {
        self.refuted.clear();
        self.relax_root = true;
        let outcome = self.solve(assumptions, deadline);
        self.relax_root = false;
        self.refuted.sort_unstable();
        self.refuted.dedup();
        outcome
    }

    pub fn refuted_assumptions(&self) -> &[Lit] {
        &self.refuted
    }

    /// The model found by the last successful [`Solver::solve`].
    pub fn model(&self) -> Assignment {
        let mut a = Assignment::all_false(self.num_vars());
        for v in 0..self.num_vars() {
            if self.value[v as usize] == 1 {
                a.set(v + 1, true);
            }
        }
        a
    }

    pub fn failed_assumptions(&self) -> &[Lit] {
        &self.failed
    }
}

fn luby(i: u32) -> u64 {
    // Luby sequence 1 1 2 1 1 2 4 ...
    let mut size = 1u64;
    let mut seq = 0u32;
    while size < i as u64 + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    let mut x = i as u64;
    while size - 1 != x {
        size = (size - 1) >> 1;
        seq -= 1;
        x %= size;
    }
    1u64 << seq
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lits(c: &[i32]) -> Vec<Lit> {
        c.iter().map(|&x| Lit::from_dimacs(x).unwrap()).collect()
    }

    #[test]
    fn luby_prefix() {
        let seq: Vec<u64> = (0..15).map(luby).collect();
        assert_eq!(seq, [1, 1, 2, 1, 1, 2, 4, 1, 1, 2, 1, 1, 2, 4, 8]);
    }

    #[test]
    fn pigeonhole_3_into_2_is_unsat() {
        // p(i,j): pigeon i in hole j, var = 2*i + j + 1.
        let var = |i: i32, j: i32| 2 * i + j + 1;
        let mut s = Solver::new(6);
        for i in 0..3 {
            assert!(s.add_clause(&lits(&[var(i, 0), var(i, 1)])));
        }
        for j in 0..2 {
            for a in 0..3 {
                for b in a + 1..3 {
                    s.add_clause(&lits(&[-var(a, j), -var(b, j)]));
                }
            }
        }
        assert_eq!(s.solve(&[], None), Outcome::Unsat);
    }

    #[test]
    fn assumptions_and_failed_core() {
        let mut s = Solver::new(4);
        s.add_clause(&lits(&[-1, 2]));
        s.add_clause(&lits(&[-2, 3]));
        assert_eq!(s.solve(&lits(&[1, 4]), None), Outcome::Sat);
        assert!(s.model().value(3));
        assert_eq!(s.solve(&lits(&[4, 1, -3]), None), Outcome::Unsat);
        let mut core = s.failed_assumptions().to_vec();
        core.sort();
        assert_eq!(core, lits(&[1, -3]));
        // Solver stays usable after a failed assumption.
        assert_eq!(s.solve(&[], None), Outcome::Sat);
    }

    #[test]
    fn complementary_assumptions_form_the_core() {
        let mut s = Solver::new(3);
        s.add_clause(&lits(&[2, 3]));
        assert_eq!(s.solve(&lits(&[2, -1, 1]), None), Outcome::Unsat);
        let mut core = s.failed_assumptions().to_vec();
        core.sort();
        assert_eq!(core, lits(&[-1, 1]));
    }

    #[test]
    fn relaxing_sets_refuted_assumptions_aside() {
        let mut s = Solver::new(4);
        s.add_clause(&lits(&[-1, 2]));
        s.add_clause(&lits(&[-1, -2]));
        s.add_clause(&lits(&[-3, -4]));
        assert_eq!(s.solve_relaxing(&lits(&[1, 3]), None), Outcome::Sat);
        assert_eq!(s.refuted_assumptions(), lits(&[1]));
        assert!(s.model().value(3));
        assert_eq!(s.solve_relaxing(&lits(&[1, 3, 4]), None), Outcome::Unsat);
        assert_eq!(s.refuted_assumptions(), lits(&[1]));
        let mut core = s.failed_assumptions().to_vec();
        core.sort();
        assert_eq!(core, lits(&[3, 4]));
        // Plain solving still reports the refuted literal as a core.
        assert_eq!(s.solve(&lits(&[1]), None), Outcome::Unsat);
        assert_eq!(s.failed_assumptions(), lits(&[1]));
    }

    #[test]
    fn incremental_blocking() {
        let mut s = Solver::new(2);
        s.add_clause(&lits(&[1, 2]));
        let mut count = 0;
        while s.solve(&[], None) == Outcome::Sat {
            let m = s.model();
            count += 1;
            let block: Vec<Lit> = (1..=2).map(|v| Lit::new(v, !m.value(v))).collect();
            s.add_clause(&block);
        }
        assert_eq!(count, 3);
    }
}
