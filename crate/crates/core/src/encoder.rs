//! Clause systems whose solutions, projected onto the package atoms, are the
//! admissible migrations.
//!
//! Package atom `p` means "p is in the new testing". Installation atom
//! `m@c` means "m is in the installation found for c". The encodings differ
//! only in which installation atoms exist and how dependency literals are
//! translated:
//!
//! | kind        | members of context `c`       | dependency `p'` becomes    |
//! |-------------|------------------------------|----------------------------|
//! | `P1`        | none (requires no conflicts) | `p'`                       |
//! | `P2`        | every package                | `p'@c`                     |
//! | `P3`        | `closure(c)`                 | `p'@c`                     |
//! | `P4`        | `hard_closure(c)`            | `p'@c`, or `p'` if easy    |
//! | `P5Strict`  | `connecting(c)`              | `p'@c` if member, else `p'`|
//! | `P5Pruned`  | as strict, but contexts without relevant conflicts use package atoms only |

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::closure::ClosureIndex;
use crate::policy::ResolvedPolicy;
use crate::repo::{unique_pairs, PkgId, Universe};
use crate::sat::{normalize_clause, Assignment, Clause, Instance, Lit};

/// Default cap on the universe size for the all-pairs encoding.
pub const P2_DEFAULT_LIMIT: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("the conflict-free encoding cannot be used: the universe has {0} conflicts")]
    ConflictsPresent(usize),
    #[error("universe of {size} packages exceeds the all-pairs encoding limit of {limit}")]
    UniverseTooLarge { size: usize, limit: usize },
    #[error("testing and unstable are identical; there is nothing to migrate")]
    NoChangeCandidates,
    #[error("{0} is not in unstable only, so it cannot be a migration target")]
    NotAMigrationCandidate(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EncodingKind {
    P1,
    P2,
    P3,
    P4,
    P5Strict,
    P5Pruned,
}

impl EncodingKind {
    pub const ALL: [EncodingKind; 6] = [
        EncodingKind::P1,
        EncodingKind::P2,
        EncodingKind::P3,
        EncodingKind::P4,
        EncodingKind::P5Strict,
        EncodingKind::P5Pruned,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EncodingKind::P1 => "p1",
            EncodingKind::P2 => "p2",
            EncodingKind::P3 => "p3",
            EncodingKind::P4 => "p4",
            EncodingKind::P5Strict => "p5-strict",
            EncodingKind::P5Pruned => "p5",
        }
    }
}

impl fmt::Display for EncodingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    Pkg(PkgId),
    Inst { member: PkgId, context: PkgId },
}

/// Numbering of atoms: package atoms `1..=n` in id order, then installation
/// atoms ordered by (context, member).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomTable {
    packages: usize,
    offsets: Vec<u32>,
    members: Vec<PkgId>,
}

impl AtomTable {
    fn new(packages: usize, per_context: &[Vec<PkgId>]) -> Self {
        let mut offsets = Vec::with_capacity(packages + 1);
        let mut members = Vec::new();
        offsets.push(0);
        for ms in per_context {
            debug_assert!(ms.windows(2).all(|w| w[0] < w[1]));
            members.extend_from_slice(ms);
            offsets.push(members.len() as u32);
        }
        offsets.resize(packages + 1, members.len() as u32);
        AtomTable { packages, offsets, members }
    }

    pub fn len(&self) -> usize {
        self.packages + self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn package_atoms(&self) -> usize {
        self.packages
    }

    pub fn installation_atoms(&self) -> usize {
        self.members.len()
    }

    /// Members of the installation atoms of `context`, sorted.
    pub fn members(&self, context: PkgId) -> &[PkgId] {
        let i = context.index();
        &self.members[self.offsets[i] as usize..self.offsets[i + 1] as usize]
    }

    pub fn var(&self, atom: Atom) -> Option<u32> {
        match atom {
            Atom::Pkg(p) => (p.index() < self.packages).then_some(p.0 + 1),
            Atom::Inst { member, context } => {
                if context.index() >= self.packages {
                    return None;
                }
                let k = self.members(context).binary_search(&member).ok()?;
                Some((self.packages + self.offsets[context.index()] as usize + k + 1) as u32)
            }
        }
    }

    pub fn atom(&self, var: u32) -> Option<Atom> {
        let v = var as usize;
        if v == 0 || v > self.len() {
            return None;
        }
        if v <= self.packages {
            return Some(Atom::Pkg(PkgId(var - 1)));
        }
        let k = v - self.packages - 1;
        let context = self.offsets.partition_point(|&o| o as usize <= k) - 1;
        Some(Atom::Inst { member: self.members[k], context: PkgId(context as u32) })
    }

    fn pkg(&self, p: PkgId) -> Lit {
        Lit::pos(p.0 + 1)
    }

    fn inst(&self, member: PkgId, context: PkgId) -> Lit {
        Lit::pos(self.var(Atom::Inst { member, context }).expect("installation atom exists"))
    }

    /// The packages whose atom is true.
    pub fn decode(&self, a: &Assignment) -> Vec<PkgId> {
        (0..self.packages as u32).filter(|&i| a.value(i + 1)).map(PkgId).collect()
    }
}

/// Clause families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    /// At most one version per name.
    Unique,
    /// Policy rules.
    Policy,
    /// `m@c → m`.
    Embed,
    /// `c → c@c`.
    Seed,
    Dependency,
    Conflict,
    NonTrivial,
    Target,
}

impl Family {
    pub const ALL: [Family; 8] = [
        Family::Unique,
        Family::Policy,
        Family::Embed,
        Family::Seed,
        Family::Dependency,
        Family::Conflict,
        Family::NonTrivial,
        Family::Target,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Family::Unique => "u",
            Family::Policy => "v",
            Family::Embed => "e",
            Family::Seed => "i",
            Family::Dependency => "d",
            Family::Conflict => "c",
            Family::NonTrivial => "nt",
            Family::Target => "target",
        }
    }
}

/// What a hard clause expresses, in domain terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClauseOrigin {
    Unique(PkgId, PkgId),
    /// Index into the resolved policy.
    Policy(usize),
    Embed {
        member: PkgId,
        context: PkgId,
    },
    Seed(PkgId),
    /// Disjunction `index` of `D(package)`; `context` is `None` when the
    /// clause is over package atoms only.
    Dependency {
        package: PkgId,
        index: usize,
        context: Option<PkgId>,
    },
    Conflict {
        a: PkgId,
        b: PkgId,
        context: PkgId,
    },
    NonTrivial,
    Target(PkgId),
}

impl ClauseOrigin {
    pub fn family(&self) -> Family {
        match self {
            ClauseOrigin::Unique(..) => Family::Unique,
            ClauseOrigin::Policy(_) => Family::Policy,
            ClauseOrigin::Embed { .. } => Family::Embed,
            ClauseOrigin::Seed(_) => Family::Seed,
            ClauseOrigin::Dependency { .. } => Family::Dependency,
            ClauseOrigin::Conflict { .. } => Family::Conflict,
            ClauseOrigin::NonTrivial => Family::NonTrivial,
            ClauseOrigin::Target(_) => Family::Target,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedProblem {
    pub kind: EncodingKind,
    pub atoms: AtomTable,
    pub hard: Vec<Clause>,
    pub origins: Vec<ClauseOrigin>,
    pub soft: Vec<Clause>,
    /// Clauses generated per family before tautologies and duplicates were dropped.
    pub generated: BTreeMap<Family, usize>,
    seen: HashSet<Clause>,
}

impl EncodedProblem {
    fn new(kind: EncodingKind, atoms: AtomTable) -> Self {
        EncodedProblem {
            kind,
            atoms,
            hard: Vec::new(),
            origins: Vec::new(),
            soft: Vec::new(),
            generated: BTreeMap::new(),
            seen: HashSet::new(),
        }
    }

    /// Adds a hard clause unless it is a tautology or already present.
    pub fn push_hard(&mut self, clause: Clause, origin: ClauseOrigin) {
        *self.generated.entry(origin.family()).or_default() += 1;
        if let Some(c) = normalize_clause(clause) {
            if self.seen.insert(c.clone()) {
                self.hard.push(c);
                self.origins.push(origin);
            }
        }
    }

    pub fn has_empty_clause(&self) -> bool {
        self.hard.iter().any(|c| c.is_empty())
    }

    pub fn to_instance(&self) -> Instance {
        Instance { num_vars: self.atoms.len() as u32, hard: self.hard.clone(), soft: self.soft.clone() }
    }

    pub fn stats(&self) -> EncodingStats {
        let mut per_family = BTreeMap::new();
        for o in &self.origins {
            *per_family.entry(o.family()).or_default() += 1;
        }
        EncodingStats {
            kind: self.kind,
            atoms: self.atoms.len(),
            package_atoms: self.atoms.package_atoms(),
            installation_atoms: self.atoms.installation_atoms(),
            hard_clauses: self.hard.len(),
            soft_clauses: self.soft.len(),
            per_family,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodingStats {
    pub kind: EncodingKind,
    pub atoms: usize,
    pub package_atoms: usize,
    pub installation_atoms: usize,
    pub hard_clauses: usize,
    pub soft_clauses: usize,
    pub per_family: BTreeMap<Family, usize>,
}

impl EncodingStats {
    pub fn family(&self, f: Family) -> usize {
        self.per_family.get(&f).copied().unwrap_or(0)
    }
}

/// One clause `{¬a, ¬b}` per pair of packages sharing a name.
pub fn uniqueness_clauses(u: &Universe) -> Vec<(Clause, ClauseOrigin)> {
    unique_pairs(u)
        .into_iter()
        .filter(|(a, b)| a < b)
        .map(|(a, b)| (vec![Lit::neg(a.0 + 1), Lit::neg(b.0 + 1)], ClauseOrigin::Unique(a, b)))
        .collect()
}

pub fn policy_clauses(policy: &ResolvedPolicy) -> Vec<(Clause, ClauseOrigin)> {
    policy
        .clauses
        .iter()
        .enumerate()
        .map(|(k, c)| (c.literals.iter().map(|&(p, pos)| Lit::new(p.0 + 1, pos)).collect(), ClauseOrigin::Policy(k)))
        .collect()
}

fn base(u: &Universe, policy: &ResolvedPolicy, kind: EncodingKind, per_context: &[Vec<PkgId>]) -> EncodedProblem {
    let mut e = EncodedProblem::new(kind, AtomTable::new(u.len(), per_context));
    for (c, o) in uniqueness_clauses(u).into_iter().chain(policy_clauses(policy)) {
        e.push_hard(c, o);
    }
    e
}

// `{¬p} ∪ d` over package atoms.
fn package_level(u: &Universe, p: PkgId) -> Vec<(Clause, ClauseOrigin)> {
    u.deps(p)
        .iter()
        .enumerate()
        .map(|(index, d)| {
            let mut c = vec![Lit::neg(p.0 + 1)];
            c.extend(d.iter().map(|q| Lit::pos(q.0 + 1)));
            (c, ClauseOrigin::Dependency { package: p, index, context: None })
        })
        .collect()
}

// Embedding, seed, dependency and conflict clauses of one context.
fn context_clauses(
    u: &Universe,
    atoms: &AtomTable,
    context: PkgId,
    tracked: impl Fn(PkgId) -> bool,
) -> Vec<(Clause, ClauseOrigin)> {
    let members = atoms.members(context);
    let mut out = Vec::new();
    for &m in members {
        out.push((vec![!atoms.inst(m, context), atoms.pkg(m)], ClauseOrigin::Embed { member: m, context }));
    }
    out.push((vec![!atoms.pkg(context), atoms.inst(context, context)], ClauseOrigin::Seed(context)));
    for &m in members {
        for (index, d) in u.deps(m).iter().enumerate() {
            let mut c = vec![!atoms.inst(m, context)];
            c.extend(d.iter().map(|&q| if tracked(q) { atoms.inst(q, context) } else { atoms.pkg(q) }));
            out.push((c, ClauseOrigin::Dependency { package: m, index, context: Some(context) }));
        }
    }
    for &a in members {
        for &b in u.conflicts(a) {
            if b > a && members.binary_search(&b).is_ok() {
                out.push((
                    vec![!atoms.inst(a, context), !atoms.inst(b, context)],
                    ClauseOrigin::Conflict { a, b, context },
                ));
            }
        }
    }
    out
}

fn assemble(
    mut e: EncodedProblem,
    u: &Universe,
    per_context: impl Fn(&AtomTable, PkgId) -> Vec<(Clause, ClauseOrigin)> + Sync,
) -> EncodedProblem {
    let atoms = &e.atoms;
    let chunks: Vec<Vec<(Clause, ClauseOrigin)>> =
        u.ids().collect::<Vec<_>>().into_par_iter().map(|p| per_context(atoms, p)).collect();
    for (c, o) in chunks.into_iter().flatten() {
        e.push_hard(c, o);
    }
    e
}

/// Package atoms only; valid when there are no conflicts.
pub fn encode_p1(u: &Universe, policy: &ResolvedPolicy) -> Result<EncodedProblem, EncodeError> {
    if !u.conflict_pairs().is_empty() {
        return Err(EncodeError::ConflictsPresent(u.conflict_pairs().len()));
    }
    let e = base(u, policy, EncodingKind::P1, &[]);
    Ok(assemble(e, u, |_, p| package_level(u, p)))
}

/// One installation atom for every pair of packages. Reference semantics
/// for small universes.
pub fn encode_p2(u: &Universe, policy: &ResolvedPolicy, limit: usize) -> Result<EncodedProblem, EncodeError> {
    if u.len() > limit {
        return Err(EncodeError::UniverseTooLarge { size: u.len(), limit });
    }
    let all: Vec<PkgId> = u.ids().collect();
    let per_context = vec![all; u.len()];
    let e = base(u, policy, EncodingKind::P2, &per_context);
    Ok(assemble(e, u, |atoms, p| context_clauses(u, atoms, p, |_| true)))
}

/// Installation atoms restricted to each dependency closure.
pub fn encode_p3(idx: &ClosureIndex<'_>, policy: &ResolvedPolicy) -> EncodedProblem {
    let u = idx.universe();
    let per_context: Vec<Vec<PkgId>> = u.ids().map(|p| idx.closure(p).to_vec()).collect();
    let e = base(u, policy, EncodingKind::P3, &per_context);
    assemble(e, u, |atoms, p| context_clauses(u, atoms, p, |_| true))
}

/// Easy packages are referenced through their package atom.
pub fn encode_p4(idx: &ClosureIndex<'_>, policy: &ResolvedPolicy) -> EncodedProblem {
    let u = idx.universe();
    idx.warm();
    let per_context: Vec<Vec<PkgId>> = u.ids().map(|p| idx.hard_closure(p).to_vec()).collect();
    let e = base(u, policy, EncodingKind::P4, &per_context);
    assemble(e, u, |atoms, p| context_clauses(u, atoms, p, |q| !idx.is_easy(q)))
}

/// Installation atoms only for connecting dependencies. In pruned mode a
/// package without relevant conflicts gets no installation atoms at all.
pub fn encode_p5(idx: &ClosureIndex<'_>, policy: &ResolvedPolicy, pruned: bool) -> EncodedProblem {
    let u = idx.universe();
    idx.warm();
    let collapsed = |p: PkgId| pruned && idx.relevant_conflicts(p).is_empty();
    let per_context: Vec<Vec<PkgId>> =
        u.ids().map(|p| if collapsed(p) { Vec::new() } else { idx.connecting(p).to_vec() }).collect();
    let kind = if pruned { EncodingKind::P5Pruned } else { EncodingKind::P5Strict };
    let e = base(u, policy, kind, &per_context);
    assemble(e, u, |atoms, p| {
        if collapsed(p) {
            package_level(u, p)
        } else {
            let members = idx.connecting(p);
            context_clauses(u, atoms, p, |q| members.contains(q))
        }
    })
}

/// Builds the requested encoding. `idx` must index `u`.
pub fn encode(
    kind: EncodingKind,
    idx: &ClosureIndex<'_>,
    policy: &ResolvedPolicy,
    p2_limit: usize,
) -> Result<EncodedProblem, EncodeError> {
    let u = idx.universe();
    match kind {
        EncodingKind::P1 => encode_p1(u, policy),
        EncodingKind::P2 => encode_p2(u, policy, p2_limit),
        EncodingKind::P3 => Ok(encode_p3(idx, policy)),
        EncodingKind::P4 => Ok(encode_p4(idx, policy)),
        EncodingKind::P5Strict => Ok(encode_p5(idx, policy, false)),
        EncodingKind::P5Pruned => Ok(encode_p5(idx, policy, true)),
    }
}

/// Soft units rewarding each change: `{v}` for `v` only in unstable and
/// `{¬v}` for `v` only in testing.
pub fn soft_max(u: &Universe) -> Vec<Clause> {
    u.candidates().map(|p| vec![Lit::new(p.0 + 1, u.in_unstable(p))]).collect()
}

/// The hard clause demanding at least one change, and soft units rewarding
/// each package left as it is.
pub fn soft_min_with_nontriviality(u: &Universe) -> Result<(Clause, Vec<Clause>), EncodeError> {
    let change: Clause = soft_max(u).into_iter().flatten().collect();
    if change.is_empty() {
        return Err(EncodeError::NoChangeCandidates);
    }
    let soft = change.iter().map(|&l| vec![!l]).collect();
    Ok((change, soft))
}

pub fn target_clause(u: &Universe, p: PkgId) -> Result<Clause, EncodeError> {
    if p.index() >= u.len() {
        return Err(EncodeError::NotAMigrationCandidate(format!("package #{}", p.0)));
    }
    if u.in_testing(p) || !u.in_unstable(p) {
        return Err(EncodeError::NotAMigrationCandidate(u.display(p)));
    }
    Ok(vec![Lit::pos(p.0 + 1)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::repo::UniverseBuilder;
    use crate::sat::{brute_force_solve, projected_models, Budget, SolveResult};

    fn lits(xs: &[i32]) -> Clause {
        let mut c: Clause = xs.iter().map(|&x| Lit::from_dimacs(x).unwrap()).collect();
        c.sort();
        c
    }

    fn projections(e: &EncodedProblem) -> Vec<Vec<u32>> {
        let vars: Vec<u32> = (1..=e.atoms.package_atoms() as u32).collect();
        let mut v = projected_models(&e.to_instance(), &vars, Budget::UNLIMITED).unwrap();
        v.sort();
        v
    }

    #[test]
    fn uniqueness_examples() {
        let mut b = UniverseBuilder::new();
        b.add("a", "1", true, false).unwrap();
        b.add("a", "2", false, true).unwrap();
        b.add("a", "3", false, true).unwrap();
        let u = b.build().unwrap();
        assert_eq!(uniqueness_clauses(&u).len(), 3);
        assert_eq!(uniqueness_clauses(&u)[0].0, lits(&[-1, -2]));

        let mut b = UniverseBuilder::new();
        b.add("a", "1", true, false).unwrap();
        b.add("b", "1", true, false).unwrap();
        assert!(uniqueness_clauses(&b.build().unwrap()).is_empty());
    }

    #[test]
    fn p1_examples() {
        let mut b = UniverseBuilder::new();
        let a = b.add("a", "1", true, false).unwrap();
        let c = b.add("b", "1", true, false).unwrap();
        b.depends(a, &[c]);
        let u = b.build().unwrap();
        let e = encode_p1(&u, &ResolvedPolicy::empty()).unwrap();
        assert_eq!(e.atoms.len(), 2);
        assert_eq!(e.hard, vec![lits(&[-1, 2])]);

        let mut b = UniverseBuilder::new();
        let a = b.add("a", "1", true, false).unwrap();
        b.depends(a, &[]);
        let u = b.build().unwrap();
        assert_eq!(encode_p1(&u, &ResolvedPolicy::empty()).unwrap().hard, vec![lits(&[-1])]);

        let mut b = UniverseBuilder::new();
        let a = b.add("a", "1", true, false).unwrap();
        let c = b.add("b", "1", true, false).unwrap();
        b.conflict(a, c);
        assert_eq!(encode_p1(&b.build().unwrap(), &ResolvedPolicy::empty()), Err(EncodeError::ConflictsPresent(1)));
    }

    #[test]
    fn p2_examples() {
        let mut b = UniverseBuilder::new();
        b.add("a", "1", true, false).unwrap();
        let u = b.build().unwrap();
        let e = encode_p2(&u, &ResolvedPolicy::empty(), 10).unwrap();
        assert_eq!(e.atoms.len(), 2);
        // a@a → a and a → a@a
        assert_eq!(e.hard, vec![lits(&[-2, 1]), lits(&[-1, 2])]);

        let mut b = UniverseBuilder::new();
        let p = b.add("p", "1", true, false).unwrap();
        let q = b.add("q", "1", true, false).unwrap();
        b.conflict(p, q);
        let u = b.build().unwrap();
        let e = encode_p2(&u, &ResolvedPolicy::empty(), 10).unwrap();
        assert_eq!(e.atoms.len(), 6);
        let conflicts: Vec<Clause> = e
            .hard
            .iter()
            .zip(&e.origins)
            .filter(|(_, o)| o.family() == Family::Conflict)
            .map(|(c, _)| c.clone())
            .collect();
        let (pp, qp) = (
            e.atoms.var(Atom::Inst { member: PkgId(0), context: PkgId(0) }).unwrap(),
            e.atoms.var(Atom::Inst { member: PkgId(1), context: PkgId(0) }).unwrap(),
        );
        let (pq, qq) = (
            e.atoms.var(Atom::Inst { member: PkgId(0), context: PkgId(1) }).unwrap(),
            e.atoms.var(Atom::Inst { member: PkgId(1), context: PkgId(1) }).unwrap(),
        );
        assert_eq!(conflicts, vec![lits(&[-(pp as i32), -(qp as i32)]), lits(&[-(pq as i32), -(qq as i32)])]);
        assert_eq!(
            encode_p2(&u, &ResolvedPolicy::empty(), 1),
            Err(EncodeError::UniverseTooLarge { size: 2, limit: 1 })
        );
    }

    #[test]
    fn p3_chain_atoms() {
        let mut b = UniverseBuilder::new();
        let p = b.add("p", "1", true, false).unwrap();
        let q = b.add("q", "1", true, false).unwrap();
        let r = b.add("r", "1", true, false).unwrap();
        b.depends(p, &[q]).depends(q, &[r]);
        let u = b.build().unwrap();
        let idx = ClosureIndex::new(&u);
        assert_eq!(encode_p3(&idx, &ResolvedPolicy::empty()).atoms.installation_atoms(), 6);
    }

    #[test]
    fn p4_easy_dependency_uses_package_atom() {
        let mut b = UniverseBuilder::new();
        let p = b.add("p", "1", true, false).unwrap();
        let e = b.add("e", "1", true, false).unwrap();
        let x = b.add("x", "1", true, false).unwrap();
        b.depends(p, &[e]).conflict(p, x);
        let u = b.build().unwrap();
        let idx = ClosureIndex::new(&u);
        let enc = encode_p4(&idx, &ResolvedPolicy::empty());
        let pid = u.lookup("p/1").unwrap();
        let eid = u.lookup("e/1").unwrap();
        let pp = enc.atoms.var(Atom::Inst { member: pid, context: pid }).unwrap();
        assert!(enc.hard.contains(&lits(&[-(pp as i32), eid.0 as i32 + 1])));
    }

    #[test]
    fn p5_conflicting_dependencies_block_package() {
        let mut b = UniverseBuilder::new();
        let p = b.add("p", "1", true, false).unwrap();
        let q = b.add("q", "1", true, false).unwrap();
        let r = b.add("r", "1", true, false).unwrap();
        b.depends(p, &[q]).depends(p, &[r]).conflict(q, r);
        let u = b.build().unwrap();
        let idx = ClosureIndex::new(&u);
        for pruned in [false, true] {
            let e = encode_p5(&idx, &ResolvedPolicy::empty(), pruned);
            assert_eq!(e.atoms.members(PkgId(0)), &[PkgId(0), PkgId(1), PkgId(2)]);
            let mut inst = e.to_instance();
            inst.hard.push(vec![Lit::pos(1)]);
            assert_eq!(brute_force_solve(&inst).unwrap(), SolveResult::Unsat);
        }
    }

    #[test]
    fn pruned_p5_without_conflicts_matches_p1() {
        let mut b = UniverseBuilder::new();
        let p = b.add("p", "1", true, false).unwrap();
        let q = b.add("q", "1", false, true).unwrap();
        let r = b.add("r", "1", true, true).unwrap();
        b.depends(p, &[q, r]).depends(q, &[]).depends(r, &[r]);
        let u = b.build().unwrap();
        let idx = ClosureIndex::new(&u);
        let p5 = encode_p5(&idx, &ResolvedPolicy::empty(), true);
        let p1 = encode_p1(&u, &ResolvedPolicy::empty()).unwrap();
        assert_eq!(p5.atoms.installation_atoms(), 0);
        assert_eq!(p5.hard, p1.hard);
        assert_eq!(projections(&p5), projections(&encode_p5(&idx, &ResolvedPolicy::empty(), false)));
    }

    #[test]
    fn atom_table_round_trip() {
        let mut b = UniverseBuilder::new();
        let p = b.add("p", "1", true, false).unwrap();
        let q = b.add("q", "1", true, false).unwrap();
        let r = b.add("r", "1", true, false).unwrap();
        b.depends(p, &[q]).depends(q, &[r]).conflict(p, r);
        let u = b.build().unwrap();
        let idx = ClosureIndex::new(&u);
        let e = encode_p3(&idx, &ResolvedPolicy::empty());
        for v in 1..=e.atoms.len() as u32 {
            assert_eq!(e.atoms.var(e.atoms.atom(v).unwrap()), Some(v));
        }
        assert_eq!(e.atoms.atom(0), None);
        assert_eq!(e.atoms.atom(e.atoms.len() as u32 + 1), None);
        assert_eq!(e.atoms.atom(4), Some(Atom::Inst { member: PkgId(0), context: PkgId(0) }));
    }

    #[test]
    fn objectives() {
        let mut b = UniverseBuilder::new();
        b.add("a", "1", true, false).unwrap();
        b.add("a", "2", false, true).unwrap();
        let u = b.build().unwrap();
        assert_eq!(soft_max(&u), vec![lits(&[-1]), lits(&[2])]);
        let (nt, soft) = soft_min_with_nontriviality(&u).unwrap();
        assert_eq!(nt, lits(&[-1, 2]));
        assert_eq!(soft, vec![lits(&[1]), lits(&[-2])]);
        assert_eq!(target_clause(&u, PkgId(1)).unwrap(), lits(&[2]));
        assert!(target_clause(&u, PkgId(0)).is_err());
        assert!(target_clause(&u, PkgId(7)).is_err());

        let mut b = UniverseBuilder::new();
        b.add("a", "1", true, true).unwrap();
        let u = b.build().unwrap();
        assert!(soft_max(&u).is_empty());
        assert_eq!(soft_min_with_nontriviality(&u), Err(EncodeError::NoChangeCandidates));

        let mut b = UniverseBuilder::new();
        b.add("a", "1", false, true).unwrap();
        let u = b.build().unwrap();
        assert_eq!(soft_min_with_nontriviality(&u).unwrap(), (lits(&[1]), vec![lits(&[-1])]));
    }

    #[test]
    fn empty_universe() {
        let u = UniverseBuilder::new().build().unwrap();
        let idx = ClosureIndex::new(&u);
        for kind in EncodingKind::ALL {
            let e = encode(kind, &idx, &ResolvedPolicy::empty(), 10).unwrap();
            let s = e.stats();
            assert_eq!((s.atoms, s.hard_clauses), (0, 0));
        }
    }
}
