//! Explanations: minimal unsatisfiable cores translated into statements
//! about packages.

use std::collections::BTreeSet;

use super::{build_problem, solve_migration, EngineError, MigrationRequest, Mode};
use crate::closure::ClosureIndex;
use crate::encoder::ClauseOrigin;
use crate::policy::ResolvedPolicy;
use crate::repo::{installability_problem, unique_pairs, InstallClause, PkgId, Universe};
use crate::sat::{extract_mus, Budget};

/// One reason contributing to an explanation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Fact {
    Requested(PkgId),
    AtLeastOneChange,
    SameName(PkgId, PkgId),
    Policy(usize),
    /// Disjunction `index` of `package`, needed while installing `context`.
    Depends {
        package: PkgId,
        index: usize,
        context: Option<PkgId>,
    },
    Conflict {
        a: PkgId,
        b: PkgId,
        context: Option<PkgId>,
    },
    /// An installation for `context` uses `member`, so `member` must be present.
    Uses {
        member: PkgId,
        context: PkgId,
    },
    /// A package that stays needs an installation.
    NeedsInstallation(PkgId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Explanation {
    pub subject: PkgId,
    pub facts: Vec<Fact>,
}

impl Explanation {
    /// One line per distinct statement.
    pub fn render(&self, u: &Universe, policy: &ResolvedPolicy) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for f in &self.facts {
            let line = render_fact(f, u, policy);
            if seen.insert(line.clone()) {
                out.push(line);
            }
        }
        out
    }
}

fn dependency_text(u: &Universe, p: PkgId, index: usize) -> String {
    let d = &u.deps(p)[index];
    let alternatives = if d.is_empty() {
        "nothing available".to_owned()
    } else {
        d.iter().map(|&q| u.display(q)).collect::<Vec<_>>().join(" | ")
    };
    match u.dep_text(p, index) {
        Some(text) => format!("{text} (satisfied by {alternatives})"),
        None => alternatives,
    }
}

fn render_fact(f: &Fact, u: &Universe, policy: &ResolvedPolicy) -> String {
    let within = |c: Option<PkgId>, subject: PkgId| match c {
        Some(c) if c != subject => format!(" when installing {}", u.display(c)),
        _ => String::new(),
    };
    match *f {
        Fact::Requested(p) => format!("{} is requested to migrate", u.display(p)),
        Fact::AtLeastOneChange => "at least one package must change".to_owned(),
        Fact::SameName(a, b) => format!("{} and {} cannot both be in testing", u.display(a), u.display(b)),
        Fact::Policy(k) => match policy.clauses.get(k) {
            Some(c) => format!("policy requires: {}", c.render(u)),
            None => format!("policy rule {k}"),
        },
        Fact::Depends { package, index, context } => {
            format!(
                "{} depends on {}{}",
                u.display(package),
                dependency_text(u, package, index),
                within(context, package)
            )
        }
        Fact::Conflict { a, b, context } => {
            let c = match context {
                Some(c) if c != a && c != b => format!(" (both needed when installing {})", u.display(c)),
                _ => String::new(),
            };
            format!("{} conflicts with {}{}", u.display(a), u.display(b), c)
        }
        Fact::Uses { member, context } => {
            format!("installing {} uses {}, which must then be in testing", u.display(context), u.display(member))
        }
        Fact::NeedsInstallation(p) => format!("{} must be installable if it is in testing", u.display(p)),
    }
}

fn fact_for(origin: &ClauseOrigin) -> Fact {
    match *origin {
        ClauseOrigin::Unique(a, b) => Fact::SameName(a, b),
        ClauseOrigin::Policy(k) => Fact::Policy(k),
        ClauseOrigin::Embed { member, context } => Fact::Uses { member, context },
        ClauseOrigin::Seed(p) => Fact::NeedsInstallation(p),
        ClauseOrigin::Dependency { package, index, context } => Fact::Depends { package, index, context },
        ClauseOrigin::Conflict { a, b, context } => Fact::Conflict { a, b, context: Some(context) },
        ClauseOrigin::NonTrivial => Fact::AtLeastOneChange,
        ClauseOrigin::Target(p) => Fact::Requested(p),
    }
}

/// Why `p` cannot migrate: a minimal set of requirements that together
/// rule out every admissible migration containing `p`.
pub fn explain_non_migration(p: PkgId, u: &Universe, req: &MigrationRequest) -> Result<Explanation, EngineError> {
    let req = MigrationRequest { mode: Mode::Target(p), ..req.clone() };
    match solve_migration(&req, u) {
        Ok(r) => return Err(EngineError::ActuallySolvable { delta: r.delta }),
        Err(EngineError::Unsolvable) => {}
        Err(e) => return Err(e),
    }
    let idx = ClosureIndex::new(u);
    let problem = build_problem(&req, &idx)?;
    let mus = extract_mus(problem.atoms.len() as u32, &problem.hard, req.budget)?;
    Ok(Explanation { subject: p, facts: mus.core.iter().map(|&i| fact_for(&problem.origins[i])).collect() })
}

/// Why `p` has no healthy installation within `repository`.
pub fn explain_uninstallable(
    p: PkgId,
    repository: &BTreeSet<PkgId>,
    u: &Universe,
    budget: Budget,
) -> Result<Explanation, EngineError> {
    let problem = installability_problem(p, repository, u);
    let mus = extract_mus(problem.instance.num_vars, &problem.instance.hard, budget)?;
    let facts = mus
        .core
        .iter()
        .map(|&i| match problem.origins[i] {
            InstallClause::Root(p) => Fact::NeedsInstallation(p),
            InstallClause::Dependency { package, index } => Fact::Depends { package, index, context: None },
            InstallClause::Conflict(a, b) => Fact::Conflict { a, b, context: None },
        })
        .collect();
    Ok(Explanation { subject: p, facts })
}

/// Problems with the current testing repository.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TestingReport {
    pub duplicates: Vec<(PkgId, PkgId)>,
    pub uninstallable: Vec<Explanation>,
}

impl TestingReport {
    pub fn is_clean(&self) -> bool {
        self.duplicates.is_empty() && self.uninstallable.is_empty()
    }
}

pub fn check_testing(u: &Universe, budget: Budget) -> Result<TestingReport, EngineError> {
    let t = u.testing();
    let duplicates = unique_pairs(u).into_iter().filter(|&(a, b)| a < b && t.contains(&a) && t.contains(&b)).collect();
    let mut uninstallable = Vec::new();
    for &p in &t {
        let problem = installability_problem(p, &t, u);
        match crate::sat::solve_sat(&problem.instance, budget)? {
            crate::sat::SolveResult::Unsat => uninstallable.push(explain_uninstallable(p, &t, u, budget)?),
            crate::sat::SolveResult::Timeout => return Err(EngineError::Timeout),
            _ => {}
        }
    }
    Ok(TestingReport { duplicates, uninstallable })
}
