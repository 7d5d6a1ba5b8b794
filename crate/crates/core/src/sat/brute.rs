//! Exhaustive reference solver for small instances.

use super::{Assignment, Instance, SatError, SolveResult};

pub const BRUTE_FORCE_LIMIT: u32 = 24;

/// Enumerates all assignments. Without soft clauses the first model in
/// counting order is returned as `Sat`; with soft clauses the first model of
/// maximal quality is returned as `Optimal`.
pub fn brute_force_solve(instance: &Instance) -> Result<SolveResult, SatError> {
    let n = instance.max_var();
    if n > BRUTE_FORCE_LIMIT {
        return Err(SatError::TooLarge { vars: n, limit: BRUTE_FORCE_LIMIT });
    }
    let mut best: Option<(Assignment, usize)> = None;
    for bits in 0u32..(1u32 << n) {
        let a = Assignment::from_true_set(n, (0..n).filter(|i| bits >> i & 1 == 1).map(|i| i + 1));
        if instance.first_violated(&a).is_some() {
            continue;
        }
        if instance.soft.is_empty() {
            return Ok(SolveResult::Sat(a));
        }
        let q = instance.soft_satisfied(&a);
        if best.as_ref().is_none_or(|(_, b)| q > *b) {
            best = Some((a, q));
        }
    }
    Ok(match best {
        None => SolveResult::Unsat,
        Some((assignment, satisfied)) => SolveResult::Optimal { assignment, satisfied, externally_claimed: false },
    })
}
