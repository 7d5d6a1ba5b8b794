//! Exact partial MaxSAT, core-guided.
//!
//! Every soft clause gets a selector literal that implies it (a unit soft
//! clause whose literal is not yet a selector is its own selector). The
//! solver runs under the assumption that every selector holds. Each
//! unsatisfiable core raises the lower bound on violated soft clauses by
//! one; its assumptions are replaced by a totalizer over the core that
//! permits one more violation, and a totalizer bound in a later core is
//! loosened by one. The first model found is optimal.
//!
//! Branching tries instance variables true first, so among optimal models
//! the search leans towards ones that keep variables set.

use std::collections::{BTreeMap, BTreeSet};

use super::cdcl::{Outcome, Solver};
use super::{Assignment, Budget, Clause, Instance, Lit, SatError, SolveResult};

/// Totalizer outputs: `outputs[k]` holds whenever more than `k` inputs do.
struct Relaxation {
    outputs: Vec<Lit>,
    bound: usize,
}

pub fn solve_pmaxsat(instance: &Instance, budget: Budget) -> Result<SolveResult, SatError> {
    let deadline = budget.deadline();
    let num_vars = instance.max_var();
    let mut solver = Solver::new(num_vars);
    for v in 1..=num_vars {
        solver.set_phase(v, true);
    }
    for c in &instance.hard {
        if !solver.add_clause(c) {
            return Ok(SolveResult::Unsat);
        }
    }
    let mut selectors: BTreeSet<Lit> = BTreeSet::new();
    let mut assumptions: Vec<Lit> = Vec::new();
    for c in &instance.soft {
        match c.len() {
            0 => {}
            1 if !selectors.contains(&c[0]) => {
                selectors.insert(c[0]);
                assumptions.push(c[0]);
            }
            _ => {
                let b = Lit::pos(solver.new_var());
                let mut guarded: Clause = c.clone();
                guarded.push(!b);
                solver.add_clause(&guarded);
                selectors.insert(b);
                assumptions.push(b);
            }
        }
    }

    // Assumption literal of a totalizer -> its index.
    let mut bounds: BTreeMap<Lit, usize> = BTreeMap::new();
    let mut relaxations: Vec<Relaxation> = Vec::new();
    loop {
        let outcome = solver.solve_relaxing(&assumptions, deadline);
        // Assumptions refuted by the hard clauses are unit cores.
        let refuted: BTreeSet<Lit> = solver.refuted_assumptions().iter().copied().collect();
        assumptions.retain(|l| !refuted.contains(l));
        let mut loosened = false;
        for &l in &refuted {
            loosened |= loosen(&mut bounds, &mut relaxations, &mut assumptions, l);
        }
        match outcome {
            Outcome::Timeout => return Ok(SolveResult::Timeout),
            Outcome::Sat if loosened => {}
            Outcome::Sat => {
                let mut model: Assignment = solver.model();
                model.truncate(num_vars);
                if let Some(clause) = instance.first_violated(&model) {
                    return Err(SatError::AssignmentInvalid { clause });
                }
                let satisfied = instance.soft_satisfied(&model);
                return Ok(SolveResult::Optimal { assignment: model, satisfied, externally_claimed: false });
            }
            Outcome::Unsat => {
                let failed = solver.failed_assumptions().to_vec();
                let core = match shrink(&mut solver, failed, deadline) {
                    Some(core) => core,
                    None => return Ok(SolveResult::Timeout),
                };
                if core.is_empty() {
                    return Ok(SolveResult::Unsat);
                }
                let in_core: BTreeSet<Lit> = core.iter().copied().collect();
                assumptions.retain(|l| !in_core.contains(l));
                for &l in &core {
                    loosen(&mut bounds, &mut relaxations, &mut assumptions, l);
                }
                if core.len() == 1 {
                    if !solver.add_clause(&[!core[0]]) {
                        return Ok(SolveResult::Unsat);
                    }
                } else {
                    let violated: Vec<Lit> = core.iter().map(|&l| !l).collect();
                    let outputs = totalizer(&mut solver, &violated);
                    let t = relaxations.len();
                    bounds.insert(!outputs[1], t);
                    assumptions.push(!outputs[1]);
                    relaxations.push(Relaxation { outputs, bound: 1 });
                }
            }
        }
    }
}

/// If `l` bounds a totalizer, permits one more violation there. Returns
/// whether it did.
fn loosen(
    bounds: &mut BTreeMap<Lit, usize>,
    relaxations: &mut [Relaxation],
    assumptions: &mut Vec<Lit>,
    l: Lit,
) -> bool {
    let Some(t) = bounds.remove(&l) else {
        return false;
    };
    let r = &mut relaxations[t];
    r.bound += 1;
    if let Some(&out) = r.outputs.get(r.bound) {
        bounds.insert(!out, t);
        assumptions.push(!out);
    }
    true
}

/// Re-solves under the core alone while that keeps shrinking it. `None` on
/// timeout.
fn shrink(solver: &mut Solver, mut core: Vec<Lit>, deadline: Option<std::time::Instant>) -> Option<Vec<Lit>> {
    for _ in 0..3 {
        if core.len() <= 1 {
            break;
        }
        match solver.solve(&core, deadline) {
            Outcome::Timeout => return None,
            Outcome::Sat => break,
            Outcome::Unsat => {
                let smaller = solver.failed_assumptions().to_vec();
                if smaller.len() >= core.len() {
                    break;
                }
                core = smaller;
            }
        }
    }
    Some(core)
}

/// Builds a totalizer over `inputs` and returns its outputs: the `k`-th
/// output (0-based) is forced true once at least `k + 1` inputs are true.
fn totalizer(solver: &mut Solver, inputs: &[Lit]) -> Vec<Lit> {
    if inputs.len() == 1 {
        return vec![inputs[0]];
    }
    let (left, right) = inputs.split_at(inputs.len() / 2);
    let a = totalizer(solver, left);
    let b = totalizer(solver, right);
    let out: Vec<Lit> = (0..inputs.len()).map(|_| Lit::pos(solver.new_var())).collect();
    // count(a) >= i and count(b) >= j imply count >= i + j.
    for i in 0..=a.len() {
        for j in 0..=b.len() {
            if i + j == 0 {
                continue;
            }
            let mut clause = vec![out[i + j - 1]];
            if i > 0 {
                clause.push(!a[i - 1]);
            }
            if j > 0 {
                clause.push(!b[j - 1]);
            }
            solver.add_clause(&clause);
        }
    }
    out
}
