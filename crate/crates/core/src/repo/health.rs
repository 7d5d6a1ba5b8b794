use std::collections::BTreeSet;

use thiserror::Error;

use super::{unique_pairs, PkgId, Universe};
use crate::policy::ResolvedPolicy;
use crate::sat::{self, Budget, Clause, Instance, Lit, SolveResult};

/// Largest dependency closure the exhaustive installability oracle accepts.
pub const ORACLE_CONTEXT_LIMIT: usize = 20;
/// Largest universe for which all admissible migrations are enumerated.
pub const ORACLE_UNIVERSE_LIMIT: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RepoError {
    #[error("dependency closure of {size} packages exceeds the oracle limit of {limit}")]
    ContextTooLarge { size: usize, limit: usize },
    #[error("universe of {size} packages exceeds the enumeration limit of {limit}")]
    UniverseTooLarge { size: usize, limit: usize },
    #[error("installability query timed out")]
    Timeout,
    #[error(transparent)]
    Sat(#[from] sat::SatError),
}

/// An installation: a selection of packages from a repository.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Installation {
    members: BTreeSet<PkgId>,
    repository: BTreeSet<PkgId>,
}

impl Installation {
    /// Returns `None` unless `members ⊆ repository`.
    pub fn new(members: BTreeSet<PkgId>, repository: BTreeSet<PkgId>) -> Option<Self> {
        members.is_subset(&repository).then_some(Installation { members, repository })
    }

    pub fn members(&self) -> &BTreeSet<PkgId> {
        &self.members
    }

    pub fn repository(&self) -> &BTreeSet<PkgId> {
        &self.repository
    }
}

/// Every dependency of every member is met inside the installation and no
/// two members conflict.
pub fn is_healthy(i: &Installation, u: &Universe) -> bool {
    healthy_by(u, i.members.iter().copied(), |p| i.members.contains(&p))
}

fn healthy_by(u: &Universe, members: impl Iterator<Item = PkgId> + Clone, has: impl Fn(PkgId) -> bool) -> bool {
    members
        .clone()
        .all(|p| u.deps(p).iter().all(|d| d.iter().any(|&q| has(q))) && u.conflicts(p).iter().all(|&q| !has(q)))
}

/// How [`is_installable`] decides.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstallCheck {
    /// Exhaustive search over subsets of the dependency closure inside the
    /// repository; refuses closures above [`ORACLE_CONTEXT_LIMIT`].
    Oracle,
    /// A SAT query over the same closure.
    Sat,
}

// Packages reachable from `p` through dependencies, staying inside `r`.
fn closure_within(u: &Universe, p: PkgId, r: &BTreeSet<PkgId>) -> Vec<PkgId> {
    let mut seen = BTreeSet::from([p]);
    let mut stack = vec![p];
    while let Some(q) = stack.pop() {
        for &s in u.deps(q).iter().flatten() {
            if r.contains(&s) && seen.insert(s) {
                stack.push(s);
            }
        }
    }
    seen.into_iter().collect()
}

/// Whether some healthy installation inside `r` contains `p`.
pub fn is_installable(p: PkgId, r: &BTreeSet<PkgId>, u: &Universe, method: InstallCheck) -> Result<bool, RepoError> {
    if !r.contains(&p) {
        return Ok(false);
    }
    match method {
        InstallCheck::Oracle => {
            let scope = closure_within(u, p, r);
            if scope.len() > ORACLE_CONTEXT_LIMIT {
                return Err(RepoError::ContextTooLarge { size: scope.len(), limit: ORACLE_CONTEXT_LIMIT });
            }
            let root = scope.iter().position(|&q| q == p).unwrap();
            let members =
                |bits: u32| scope.iter().enumerate().filter(move |(k, _)| bits >> k & 1 == 1).map(|(_, &q)| q);
            for bits in 0u32..(1u32 << scope.len()) {
                if bits >> root & 1 == 0 {
                    continue;
                }
                let has = |q: PkgId| scope.binary_search(&q).is_ok_and(|k| bits >> k & 1 == 1);
                if healthy_by(u, members(bits), has) {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        InstallCheck::Sat => {
            let problem = installability_problem(p, r, u);
            match sat::solve_sat(&problem.instance, Budget::UNLIMITED)? {
                SolveResult::Sat(_) => Ok(true),
                SolveResult::Unsat => Ok(false),
                _ => Err(RepoError::Timeout),
            }
        }
    }
}

/// Provenance of a clause in an installability query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstallClause {
    /// The queried package is installed.
    Root(PkgId),
    /// Disjunction `index` of `D(package)`, restricted to the repository.
    Dependency {
        package: PkgId,
        index: usize,
    },
    Conflict(PkgId, PkgId),
}

/// SAT formulation of "is `p` installable in `r`": one variable per package
/// of the dependency closure of `p` inside `r`.
#[derive(Debug, Clone)]
pub struct InstallProblem {
    pub instance: Instance,
    pub origins: Vec<InstallClause>,
    pub scope: Vec<PkgId>,
}

pub fn installability_problem(p: PkgId, r: &BTreeSet<PkgId>, u: &Universe) -> InstallProblem {
    let scope = closure_within(u, p, r);
    let var = |q: PkgId| scope.binary_search(&q).ok().map(|k| k as u32 + 1);
    let mut instance = Instance::new(scope.len() as u32);
    let mut origins = Vec::new();
    instance.hard.push(vec![Lit::pos(var(p).unwrap())]);
    origins.push(InstallClause::Root(p));
    for &q in &scope {
        let vq = var(q).unwrap();
        for (index, d) in u.deps(q).iter().enumerate() {
            let mut clause: Clause = vec![Lit::neg(vq)];
            clause.extend(d.iter().filter_map(|&s| var(s)).map(Lit::pos));
            instance.hard.push(clause);
            origins.push(InstallClause::Dependency { package: q, index });
        }
        for &c in u.conflicts(q) {
            if c > q {
                if let Some(vc) = var(c) {
                    instance.hard.push(vec![Lit::neg(vq), Lit::neg(vc)]);
                    origins.push(InstallClause::Conflict(q, c));
                }
            }
        }
    }
    InstallProblem { instance, origins, scope }
}

/// Every package of `r` is installable in `r`.
pub fn is_trimmed(r: &BTreeSet<PkgId>, u: &Universe) -> Result<bool, RepoError> {
    for &p in r {
        if !is_installable(p, r, u, InstallCheck::Sat)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    /// Two versions of one name.
    Uniqueness(PkgId, PkgId),
    /// A package with no healthy installation.
    Trimmedness(PkgId),
    /// Index of a violated policy clause.
    Policy(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Admissibility {
    Ok,
    Violation(Violation),
}

impl Admissibility {
    pub fn is_ok(&self) -> bool {
        matches!(self, Admissibility::Ok)
    }
}

/// Checks uniqueness, trimmedness and the policy, in that order, and
/// reports the first violation found.
pub fn is_admissible(
    t_prime: &BTreeSet<PkgId>,
    u: &Universe,
    policy: &ResolvedPolicy,
) -> Result<Admissibility, RepoError> {
    let mut last: Option<PkgId> = None;
    for &p in t_prime {
        if let Some(q) = last {
            if u.name(q) == u.name(p) {
                return Ok(Admissibility::Violation(Violation::Uniqueness(q, p)));
            }
        }
        last = Some(p);
    }
    for &p in t_prime {
        if !is_installable(p, t_prime, u, InstallCheck::Sat)? {
            return Ok(Admissibility::Violation(Violation::Trimmedness(p)));
        }
    }
    for (k, clause) in policy.clauses.iter().enumerate() {
        if !clause.holds(|p| t_prime.contains(&p)) {
            return Ok(Admissibility::Violation(Violation::Policy(k)));
        }
    }
    Ok(Admissibility::Ok)
}

/// All admissible migrations, by exhaustive enumeration.
///
/// Computes the healthy installations first; a repository `R` is trimmed iff
/// the union of the healthy installations inside `R` is `R` itself. That
/// union is computed for every subset by a subset-sum pass.
pub fn admissible_migrations(u: &Universe, policy: &ResolvedPolicy) -> Result<Vec<BTreeSet<PkgId>>, RepoError> {
    let n = u.len();
    if n > ORACLE_UNIVERSE_LIMIT {
        return Err(RepoError::UniverseTooLarge { size: n, limit: ORACLE_UNIVERSE_LIMIT });
    }
    let full = 1usize << n;
    let ids: Vec<PkgId> = u.ids().collect();
    let members = |mask: usize| ids.iter().copied().filter(move |p| mask >> p.index() & 1 == 1);

    // covered[R] = union of healthy installations I ⊆ R.
    let mut covered = vec![0usize; full];
    for (mask, slot) in covered.iter_mut().enumerate() {
        if healthy_by(u, members(mask), |p| mask >> p.index() & 1 == 1) {
            *slot = mask;
        }
    }
    for bit in 0..n {
        for mask in 0..full {
            if mask >> bit & 1 == 1 {
                covered[mask] |= covered[mask ^ (1 << bit)];
            }
        }
    }

    let dup: Vec<(usize, usize)> =
        unique_pairs(u).into_iter().filter(|(a, b)| a < b).map(|(a, b)| (a.index(), b.index())).collect();
    let mut out = Vec::new();
    for (mask, &cover) in covered.iter().enumerate() {
        if cover != mask {
            continue;
        }
        if dup.iter().any(|&(a, b)| mask >> a & 1 == 1 && mask >> b & 1 == 1) {
            continue;
        }
        let present = |p: PkgId| mask >> p.index() & 1 == 1;
        if policy.clauses.iter().all(|c| c.holds(present)) {
            out.push(members(mask).collect());
        }
    }
    Ok(out)
}
