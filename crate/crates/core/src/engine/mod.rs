//! The migration pipeline: encode, solve, decode, verify.

mod explain;
mod report;

use std::collections::BTreeSet;

use thiserror::Error;

use crate::closure::ClosureIndex;
use crate::encoder::{
    encode, soft_max, soft_min_with_nontriviality, target_clause, ClauseOrigin, EncodeError, EncodedProblem,
    EncodingKind, P2_DEFAULT_LIMIT,
};
use crate::policy::ResolvedPolicy;
use crate::repo::{is_admissible, Admissibility, PkgId, RepoError, Universe};
use crate::sat::{run_external, solve_pmaxsat, Budget, DimacsKind, Lit, SatError, SolveResult, DEFAULT_MAXSAT_BUDGET};

pub use explain::{check_testing, explain_non_migration, explain_uninstallable, Explanation, Fact, TestingReport};
pub use report::{
    CheckDocument, Document, EmitDocument, ExplainDocument, MigrateDocument, StatsDocument, StatsRow,
    UninstallableEntry,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Repo(#[from] RepoError),
    #[error(transparent)]
    Sat(#[from] SatError),
    #[error("the hard clauses are unsatisfiable; the policy rules out every migration")]
    Unsolvable,
    #[error("the solver ran out of time")]
    Timeout,
    #[error("solver reported {reported} satisfied soft clauses but the model satisfies {recounted}")]
    OptimumMismatch { reported: usize, recounted: usize },
    #[error("the package migrates (delta {delta})")]
    ActuallySolvable { delta: usize },
    #[error("refusing to render hints for a migration that failed verification")]
    RefuseUnverified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Largest migration.
    Max,
    /// Smallest migration that changes something.
    MinNonTrivial,
    /// Smallest migration that brings in the given unstable package.
    Target(PkgId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolverChoice {
    Embedded,
    /// Executable plus leading arguments; the WCNF path is appended.
    External(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MigrationRequest {
    pub mode: Mode,
    pub encoding: EncodingKind,
    pub policy: ResolvedPolicy,
    pub solver: SolverChoice,
    pub budget: Budget,
    pub p2_limit: usize,
}

impl MigrationRequest {
    pub fn new(mode: Mode) -> Self {
        MigrationRequest {
            mode,
            encoding: EncodingKind::P5Pruned,
            policy: ResolvedPolicy::empty(),
            solver: SolverChoice::Embedded,
            budget: DEFAULT_MAXSAT_BUDGET,
            p2_limit: P2_DEFAULT_LIMIT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MigrationResult {
    pub t_prime: BTreeSet<PkgId>,
    /// Unstable-only packages now in testing.
    pub migrated_in: Vec<PkgId>,
    /// Testing packages no longer in testing.
    pub removed: Vec<PkgId>,
    /// Number of migration candidates whose status changed.
    pub delta: usize,
    pub verification: Admissibility,
    /// Satisfied soft clauses, recounted from the model.
    pub optimum: usize,
    pub externally_claimed: bool,
}

impl MigrationResult {
    pub fn verified(&self) -> bool {
        self.verification.is_ok()
    }
}

/// The encoding plus the objective of a request.
pub fn build_problem(req: &MigrationRequest, idx: &ClosureIndex<'_>) -> Result<EncodedProblem, EngineError> {
    let u = idx.universe();
    let mut e = encode(req.encoding, idx, &req.policy, req.p2_limit)?;
    match req.mode {
        Mode::Max => e.soft = soft_max(u),
        Mode::MinNonTrivial => {
            let (nt, soft) = soft_min_with_nontriviality(u)?;
            e.push_hard(nt, ClauseOrigin::NonTrivial);
            e.soft = soft;
        }
        Mode::Target(p) => {
            let t = target_clause(u, p)?;
            e.push_hard(t, ClauseOrigin::Target(p));
            e.soft = soft_min_with_nontriviality(u)?.1;
        }
    }
    Ok(e)
}

pub fn solve_migration(req: &MigrationRequest, u: &Universe) -> Result<MigrationResult, EngineError> {
    let idx = ClosureIndex::new(u);
    let problem = build_problem(req, &idx)?;
    solve_problem(req, u, &problem, &[])
}

/// Up to `k` further solutions, each excluding the candidate changes of all
/// solutions found before it. The first entry is the regular result.
pub fn alternatives(req: &MigrationRequest, u: &Universe, k: usize) -> Result<Vec<MigrationResult>, EngineError> {
    let idx = ClosureIndex::new(u);
    let problem = build_problem(req, &idx)?;
    let candidates: Vec<PkgId> = u.candidates().collect();
    let mut blocks = Vec::new();
    let mut out = Vec::new();
    while out.len() <= k {
        match solve_problem(req, u, &problem, &blocks) {
            Ok(r) => {
                blocks.push(candidates.iter().map(|&p| Lit::new(p.0 + 1, !r.t_prime.contains(&p))).collect());
                out.push(r);
            }
            Err(EngineError::Unsolvable) if !out.is_empty() => break,
            Err(e) => return Err(e),
        }
        if candidates.is_empty() {
            break;
        }
    }
    Ok(out)
}

fn solve_problem(
    req: &MigrationRequest,
    u: &Universe,
    problem: &EncodedProblem,
    extra: &[Vec<Lit>],
) -> Result<MigrationResult, EngineError> {
    let mut instance = problem.to_instance();
    instance.hard.extend(extra.iter().cloned());
    let outcome = match &req.solver {
        SolverChoice::Embedded => solve_pmaxsat(&instance, req.budget)?,
        SolverChoice::External(cmd) => run_external(&instance, cmd, DimacsKind::Wcnf, req.budget)?,
    };
    let (assignment, reported, externally_claimed) = match outcome {
        SolveResult::Optimal { assignment, satisfied, externally_claimed } => {
            (assignment, satisfied, externally_claimed)
        }
        SolveResult::Sat(a) => {
            let s = instance.soft_satisfied(&a);
            (a, s, false)
        }
        SolveResult::Unsat => return Err(EngineError::Unsolvable),
        SolveResult::Timeout => return Err(EngineError::Timeout),
    };
    if let Some(clause) = instance.first_violated(&assignment) {
        return Err(SatError::AssignmentInvalid { clause }.into());
    }
    let recounted = instance.soft_satisfied(&assignment);
    if recounted != reported {
        return Err(EngineError::OptimumMismatch { reported, recounted });
    }
    let t_prime: BTreeSet<PkgId> = problem.atoms.decode(&assignment).into_iter().collect();
    Ok(result_for(u, &req.policy, t_prime, recounted, externally_claimed)?)
}

/// Describes `t_prime` as a migration of the universe's testing.
pub fn result_for(
    u: &Universe,
    policy: &ResolvedPolicy,
    t_prime: BTreeSet<PkgId>,
    optimum: usize,
    externally_claimed: bool,
) -> Result<MigrationResult, RepoError> {
    let migrated_in = t_prime.iter().copied().filter(|&p| !u.in_testing(p)).collect();
    let removed = u.ids().filter(|&p| u.in_testing(p) && !t_prime.contains(&p)).collect();
    let delta = u.candidates().filter(|&p| t_prime.contains(&p) != u.in_testing(p)).count();
    let verification = is_admissible(&t_prime, u, policy)?;
    Ok(MigrationResult { t_prime, migrated_in, removed, delta, verification, optimum, externally_claimed })
}

/// Hint lines: one `easy` line with every package brought in, then a
/// `remove` line for each removal whose name is not replaced.
pub fn render_hints(result: &MigrationResult, u: &Universe) -> Result<String, EngineError> {
    if !result.verified() {
        return Err(EngineError::RefuseUnverified);
    }
    let mut out = String::new();
    if !result.migrated_in.is_empty() {
        let items: Vec<String> = result.migrated_in.iter().map(|&p| u.display(p)).collect();
        out.push_str(&format!("easy {}\n", items.join(" ")));
    }
    let replaced: BTreeSet<&str> = result.migrated_in.iter().map(|&p| u.name(p)).collect();
    for &p in &result.removed {
        if !replaced.contains(u.name(p)) {
            out.push_str(&format!("remove {}\n", u.display(p)));
        }
    }
    Ok(out)
}
