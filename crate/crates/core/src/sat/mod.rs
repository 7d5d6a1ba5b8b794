//! SAT and partial MaxSAT: instance model, an embedded solver for desk-scale
//! problems, MUS extraction, DIMACS I/O and an adapter for external solvers.

mod brute;
mod cdcl;
mod dimacs;
mod external;
mod maxsat;
mod mus;

use std::cmp::Ordering;
use std::fmt;
use std::ops::Not;
use std::time::{Duration, Instant};

use thiserror::Error;

pub use brute::{brute_force_solve, BRUTE_FORCE_LIMIT};
pub use cdcl::{Outcome, Solver};
pub use dimacs::{emit_dimacs, parse_dimacs, DimacsKind};
pub use external::run_external;
pub use maxsat::solve_pmaxsat;
pub use mus::{extract_mus, verify_mus, MusResult};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SatError {
    #[error("instance has {vars} variables; brute force is limited to {limit}")]
    TooLarge { vars: u32, limit: u32 },
    #[error("clause set is satisfiable")]
    NotUnsat,
    #[error("time budget exhausted")]
    Timeout,
    #[error("external solver failed: {0}")]
    SolverCrashed(String),
    #[error("cannot parse solver output: {0}")]
    UnparsableOutput(String),
    #[error("solver model violates hard clause {clause}")]
    AssignmentInvalid { clause: usize },
    #[error("DIMACS line {line}: {message}")]
    Dimacs { line: usize, message: String },
    #[error("I/O error: {0}")]
    Io(String),
}

/// A literal in DIMACS convention: `v` or `-v` for a 1-based variable `v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Lit(i32);

impl Lit {
    pub fn new(var: u32, positive: bool) -> Lit {
        assert!(var > 0 && var <= i32::MAX as u32, "variable out of range");
        Lit(if positive { var as i32 } else { -(var as i32) })
    }

    pub fn pos(var: u32) -> Lit {
        Lit::new(var, true)
    }

    pub fn neg(var: u32) -> Lit {
        Lit::new(var, false)
    }

    pub fn from_dimacs(x: i32) -> Option<Lit> {
        (x != 0 && x != i32::MIN).then_some(Lit(x))
    }

    #[inline]
    pub fn var(self) -> u32 {
        self.0.unsigned_abs()
    }

    #[inline]
    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    #[inline]
    pub fn to_dimacs(self) -> i32 {
        self.0
    }
}

impl Not for Lit {
    type Output = Lit;

    fn not(self) -> Lit {
        Lit(-self.0)
    }
}

impl Ord for Lit {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.var(), self.is_positive()).cmp(&(other.var(), other.is_positive()))
    }
}

impl PartialOrd for Lit {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub type Clause = Vec<Lit>;

/// Sorts and deduplicates a clause; returns `None` for tautologies.
pub fn normalize_clause(mut clause: Clause) -> Option<Clause> {
    clause.sort_unstable();
    clause.dedup();
    if clause.windows(2).any(|w| w[0].var() == w[1].var()) {
        None
    } else {
        Some(clause)
    }
}

/// A SAT instance (no soft clauses) or a PMAX-SAT instance.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Instance {
    pub num_vars: u32,
    pub hard: Vec<Clause>,
    pub soft: Vec<Clause>,
}

impl Instance {
    pub fn new(num_vars: u32) -> Self {
        Instance { num_vars, hard: Vec::new(), soft: Vec::new() }
    }

    pub fn with_hard(num_vars: u32, hard: Vec<Clause>) -> Self {
        Instance { num_vars, hard, soft: Vec::new() }
    }

    /// Index of the first hard clause the assignment violates.
    pub fn first_violated(&self, a: &Assignment) -> Option<usize> {
        self.hard.iter().position(|c| !a.satisfies(c))
    }

    pub fn soft_satisfied(&self, a: &Assignment) -> usize {
        self.soft.iter().filter(|c| a.satisfies(c)).count()
    }

    fn max_var(&self) -> u32 {
        self.hard.iter().chain(&self.soft).flatten().map(|l| l.var()).max().unwrap_or(0).max(self.num_vars)
    }
}

/// A total assignment; `true_vars` is the set of atoms set to true.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    values: Vec<bool>,
}

impl Assignment {
    pub fn all_false(num_vars: u32) -> Self {
        Assignment { values: vec![false; num_vars as usize] }
    }

    pub fn from_true_set(num_vars: u32, vars: impl IntoIterator<Item = u32>) -> Self {
        let mut a = Assignment::all_false(num_vars);
        for v in vars {
            a.set(v, true);
        }
        a
    }

    pub fn num_vars(&self) -> u32 {
        self.values.len() as u32
    }

    /// Value of a 1-based variable; variables beyond the range read as false.
    pub fn value(&self, var: u32) -> bool {
        var >= 1 && self.values.get(var as usize - 1).copied().unwrap_or(false)
    }

    pub fn set(&mut self, var: u32, value: bool) {
        let idx = var as usize - 1;
        if idx >= self.values.len() {
            self.values.resize(idx + 1, false);
        }
        self.values[idx] = value;
    }

    pub fn lit_true(&self, lit: Lit) -> bool {
        self.value(lit.var()) == lit.is_positive()
    }

    pub fn satisfies(&self, clause: &[Lit]) -> bool {
        clause.iter().any(|&l| self.lit_true(l))
    }

    pub fn true_vars(&self) -> impl Iterator<Item = u32> + '_ {
        self.values.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i as u32 + 1)
    }

    pub(crate) fn truncate(&mut self, num_vars: u32) {
        self.values.resize(num_vars as usize, false);
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveResult {
    Sat(Assignment),
    Unsat,
    Optimal {
        assignment: Assignment,
        /// Number of fulfilled soft clauses, recounted from the assignment.
        satisfied: usize,
        /// Optimality was claimed by an external solver and not re-proved.
        externally_claimed: bool,
    },
    Timeout,
}

impl SolveResult {
    pub fn assignment(&self) -> Option<&Assignment> {
        match self {
            SolveResult::Sat(a) | SolveResult::Optimal { assignment: a, .. } => Some(a),
            _ => None,
        }
    }

    pub fn is_unsat(&self) -> bool {
        matches!(self, SolveResult::Unsat)
    }
}

/// Wall-clock budget for a solver call.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub timeout: Option<Duration>,
}

impl Budget {
    pub const UNLIMITED: Budget = Budget { timeout: None };

    pub fn seconds(secs: u64) -> Budget {
        Budget { timeout: Some(Duration::from_secs(secs)) }
    }

    pub fn deadline(&self) -> Option<Instant> {
        self.timeout.map(|t| Instant::now() + t)
    }
}

/// Default budget of a plain SAT call.
pub const DEFAULT_SAT_BUDGET: Budget = Budget { timeout: Some(Duration::from_secs(60)) };
/// Default budget of a PMAX-SAT call.
pub const DEFAULT_MAXSAT_BUDGET: Budget = Budget { timeout: Some(Duration::from_secs(300)) };

/// Decides satisfiability of the hard clauses with the embedded solver.
///
/// Pure literals are fixed up front; the returned model is checked against
/// every hard clause before it is handed out.
pub fn solve_sat(instance: &Instance, budget: Budget) -> Result<SolveResult, SatError> {
    let num_vars = instance.max_var();
    let mut solver = Solver::new(num_vars);
    for c in &instance.hard {
        if !solver.add_clause(c) {
            return Ok(SolveResult::Unsat);
        }
    }
    for l in pure_literals(num_vars, &instance.hard) {
        solver.add_clause(&[l]);
    }
    match solver.solve(&[], budget.deadline()) {
        Outcome::Sat => {
            let mut model = solver.model();
            model.truncate(num_vars);
            if let Some(clause) = instance.first_violated(&model) {
                return Err(SatError::AssignmentInvalid { clause });
            }
            Ok(SolveResult::Sat(model))
        }
        Outcome::Unsat => Ok(SolveResult::Unsat),
        Outcome::Timeout => Ok(SolveResult::Timeout),
    }
}

/// Literals that occur in only one polarity, iterated to a fixpoint as
/// satisfied clauses drop out.
fn pure_literals(num_vars: u32, clauses: &[Clause]) -> Vec<Lit> {
    let n = num_vars as usize + 1;
    let mut satisfied = vec![false; clauses.len()];
    let mut fixed = vec![false; n];
    let mut out = Vec::new();
    loop {
        let mut pos = vec![false; n];
        let mut neg = vec![false; n];
        for (c, done) in clauses.iter().zip(&satisfied) {
            if *done {
                continue;
            }
            for l in c {
                if l.is_positive() {
                    pos[l.var() as usize] = true;
                } else {
                    neg[l.var() as usize] = true;
                }
            }
        }
        let mut new = Vec::new();
        for v in 1..n {
            if !fixed[v] && pos[v] != neg[v] {
                fixed[v] = true;
                new.push(Lit::new(v as u32, pos[v]));
            }
        }
        if new.is_empty() {
            return out;
        }
        for (c, done) in clauses.iter().zip(satisfied.iter_mut()) {
            if !*done && c.iter().any(|l| new.contains(l)) {
                *done = true;
            }
        }
        out.extend(new);
    }
}

/// Enumerates the distinct projections of the models of `instance.hard`
/// onto `vars`, using blocking clauses. Each projection is returned as the
/// set of projected variables that are true.
pub fn projected_models(instance: &Instance, vars: &[u32], budget: Budget) -> Result<Vec<Vec<u32>>, SatError> {
    let deadline = budget.deadline();
    let mut solver = Solver::new(instance.max_var());
    let mut out = Vec::new();
    for c in &instance.hard {
        if !solver.add_clause(c) {
            return Ok(out);
        }
    }
    loop {
        match solver.solve(&[], deadline) {
            Outcome::Timeout => return Err(SatError::Timeout),
            Outcome::Unsat => return Ok(out),
            Outcome::Sat => {
                let model = solver.model();
                if let Some(clause) = instance.first_violated(&model) {
                    return Err(SatError::AssignmentInvalid { clause });
                }
                let block: Clause = vars.iter().map(|&v| Lit::new(v, !model.value(v))).collect();
                out.push(vars.iter().copied().filter(|&v| model.value(v)).collect());
                if !solver.add_clause(&block) {
                    return Ok(out);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clauses(cs: &[&[i32]]) -> Vec<Clause> {
        cs.iter().map(|c| c.iter().map(|&x| Lit::from_dimacs(x).unwrap()).collect()).collect()
    }

    #[test]
    fn normalize() {
        assert_eq!(normalize_clause(clauses(&[&[3, -1, 3]]).remove(0)), Some(clauses(&[&[-1, 3]]).remove(0)));
        assert_eq!(normalize_clause(clauses(&[&[2, 1, -2]]).remove(0)), None);
    }

    #[test]
    fn solve_sat_examples() {
        let empty = Instance::new(0);
        assert_eq!(solve_sat(&empty, Budget::UNLIMITED).unwrap(), SolveResult::Sat(Assignment::all_false(0)));
        let unit = Instance::with_hard(1, clauses(&[&[1], &[-1]]));
        assert!(solve_sat(&unit, Budget::UNLIMITED).unwrap().is_unsat());
        let three = Instance::with_hard(2, clauses(&[&[1, 2], &[-1], &[-2]]));
        assert!(solve_sat(&three, Budget::UNLIMITED).unwrap().is_unsat());
        let empty_clause = Instance::with_hard(1, vec![vec![]]);
        assert!(solve_sat(&empty_clause, Budget::UNLIMITED).unwrap().is_unsat());
    }

    #[test]
    fn pure_literal_fixpoint() {
        // 1 is pure; once {1,-2} drops out, 2 becomes pure positive.
        let cs = clauses(&[&[1, -2], &[2, 3], &[2, -3]]);
        let pure = pure_literals(3, &cs);
        assert_eq!(pure, vec![Lit::pos(1), Lit::pos(2)]);
        let inst = Instance::with_hard(3, cs);
        assert!(matches!(solve_sat(&inst, Budget::UNLIMITED).unwrap(), SolveResult::Sat(_)));
    }

    #[test]
    fn projection_enumeration() {
        // (1 or 2), 3 free: projections onto {1,2} are {1},{2},{1,2}.
        let inst = Instance::with_hard(3, clauses(&[&[1, 2], &[3, -3]]));
        let mut got = projected_models(&inst, &[1, 2], Budget::UNLIMITED).unwrap();
        got.sort();
        assert_eq!(got, vec![vec![1], vec![1, 2], vec![2]]);
    }
}
