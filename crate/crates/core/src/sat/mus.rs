//! Deletion-based extraction of a minimal unsatisfiable subset.

use super::cdcl::{Outcome, Solver};
use super::{Budget, Clause, SatError};

/// Indices (into the input clause list) of a minimal unsatisfiable subset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MusResult {
    pub core: Vec<usize>,
}

/// Extracts a MUS from an unsatisfiable clause set.
///
/// Each clause is guarded by a selector variable, so a single solver answers
/// every "is the set without clause `i` still unsatisfiable?" query under
/// assumptions. When a query stays unsatisfiable, the failed assumptions
/// shrink the working set further. The result is re-checked for minimality
/// with fresh solvers before it is returned.
pub fn extract_mus(num_vars: u32, clauses: &[Clause], budget: Budget) -> Result<MusResult, SatError> {
    let deadline = budget.deadline();
    let max_var = clauses.iter().flatten().map(|l| l.var()).max().unwrap_or(0).max(num_vars);
    let mut solver = Solver::new(max_var);
    let selectors: Vec<_> = clauses
        .iter()
        .map(|c| {
            let s = super::Lit::pos(solver.new_var());
            let mut guarded = c.clone();
            guarded.push(!s);
            solver.add_clause(&guarded);
            s
        })
        .collect();
    let selector_index = |lit: super::Lit| (lit.var() - max_var - 1) as usize;

    let mut core: Vec<usize> = (0..clauses.len()).collect();
    match solver.solve(&selectors, deadline) {
        Outcome::Sat => return Err(SatError::NotUnsat),
        Outcome::Timeout => return Err(SatError::Timeout),
        Outcome::Unsat => core = refine(&core, solver.failed_assumptions(), selector_index),
    }

    let mut necessary = vec![false; clauses.len()];
    while let Some(&candidate) = core.iter().find(|&&i| !necessary[i]) {
        let assumptions: Vec<_> = core.iter().filter(|&&i| i != candidate).map(|&i| selectors[i]).collect();
        match solver.solve(&assumptions, deadline) {
            Outcome::Sat => necessary[candidate] = true,
            Outcome::Unsat => {
                core = refine(&core, solver.failed_assumptions(), selector_index);
                core.retain(|&i| i != candidate);
            }
            Outcome::Timeout => return Err(SatError::Timeout),
        }
    }

    let result = MusResult { core };
    if !verify_mus(num_vars, clauses, &result, budget)? {
        return Err(SatError::SolverCrashed("MUS failed its minimality check".into()));
    }
    Ok(result)
}

// Keeps the core clauses whose selectors appear among the failed assumptions.
fn refine(core: &[usize], failed: &[super::Lit], index: impl Fn(super::Lit) -> usize) -> Vec<usize> {
    let mut keep: Vec<usize> = failed.iter().map(|&l| index(l)).collect();
    keep.sort_unstable();
    keep.dedup();
    core.iter().copied().filter(|i| keep.binary_search(i).is_ok()).collect()
}

/// Checks that the core is unsatisfiable and that dropping any single
/// clause makes it satisfiable, each with an independent solver.
pub fn verify_mus(num_vars: u32, clauses: &[Clause], mus: &MusResult, budget: Budget) -> Result<bool, SatError> {
    let deadline = budget.deadline();
    let check = |skip: Option<usize>| -> Result<Outcome, SatError> {
        let mut s = Solver::new(num_vars);
        for &i in &mus.core {
            if Some(i) != skip && !s.add_clause(&clauses[i]) {
                return Ok(Outcome::Unsat);
            }
        }
        match s.solve(&[], deadline) {
            Outcome::Timeout => Err(SatError::Timeout),
            o => Ok(o),
        }
    };
    if check(None)? != Outcome::Unsat {
        return Ok(false);
    }
    for &i in &mus.core {
        if check(Some(i))? != Outcome::Sat {
            return Ok(false);
        }
    }
    Ok(true)
}
