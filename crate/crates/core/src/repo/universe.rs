use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::{Package, PkgId};
use crate::control::{format_dependency_expr, PackageStanza, VersionConstraint};
use crate::version::{Version, VersionError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UniverseError {
    #[error("{0} appears twice with different metadata")]
    ConflictingDuplicate(String),
    #[error("{0} belongs to neither testing nor unstable")]
    NotInAnyRepository(String),
    #[error("unknown package handle {0}")]
    UnknownHandle(usize),
    #[error(transparent)]
    Version(#[from] VersionError),
}

/// All packages under consideration (`testing ∪ unstable`) together with the
/// expanded dependency function and the conflict relation.
///
/// Immutable once built. Dependencies are stored as a sorted, duplicate-free
/// list of disjunctions; an empty disjunction marks an unsatisfiable
/// dependency. Conflicts are symmetric and irreflexive.
#[derive(Debug, Clone)]
pub struct Universe {
    packages: Vec<Package>,
    deps: Vec<Vec<Vec<PkgId>>>,
    dep_text: Vec<Vec<String>>,
    conflicts: Vec<Vec<PkgId>>,
    conflict_pairs: Vec<(PkgId, PkgId)>,
    testing: Vec<bool>,
    unstable: Vec<bool>,
    by_name: BTreeMap<String, Vec<PkgId>>,
}

impl Universe {
    pub fn len(&self) -> usize {
        self.packages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.packages.is_empty()
    }

    pub fn ids(&self) -> impl ExactSizeIterator<Item = PkgId> + Clone {
        (0..self.packages.len() as u32).map(PkgId)
    }

    pub fn packages(&self) -> &[Package] {
        &self.packages
    }

    pub fn package(&self, id: PkgId) -> &Package {
        &self.packages[id.index()]
    }

    pub fn name(&self, id: PkgId) -> &str {
        &self.packages[id.index()].name
    }

    /// `D(p)`: the disjunctions `p` depends on.
    pub fn deps(&self, id: PkgId) -> &[Vec<PkgId>] {
        &self.deps[id.index()]
    }

    /// Source text of the `k`-th disjunction of `p`, if it came from a stanza.
    pub fn dep_text(&self, id: PkgId, k: usize) -> Option<&str> {
        self.dep_text[id.index()].get(k).map(String::as_str).filter(|s| !s.is_empty())
    }

    /// Packages `p` conflicts with.
    pub fn conflicts(&self, id: PkgId) -> &[PkgId] {
        &self.conflicts[id.index()]
    }

    /// Every conflict once, as `(a, b)` with `a < b`.
    pub fn conflict_pairs(&self) -> &[(PkgId, PkgId)] {
        &self.conflict_pairs
    }

    pub fn in_testing(&self, id: PkgId) -> bool {
        self.testing[id.index()]
    }

    pub fn in_unstable(&self, id: PkgId) -> bool {
        self.unstable[id.index()]
    }

    pub fn testing(&self) -> BTreeSet<PkgId> {
        self.ids().filter(|&p| self.in_testing(p)).collect()
    }

    pub fn unstable(&self) -> BTreeSet<PkgId> {
        self.ids().filter(|&p| self.in_unstable(p)).collect()
    }

    /// Packages in exactly one of testing and unstable: the migration candidates.
    pub fn candidates(&self) -> impl Iterator<Item = PkgId> + '_ {
        self.ids().filter(|&p| self.in_testing(p) != self.in_unstable(p))
    }

    /// All versions of a name, in version order.
    pub fn by_name(&self, name: &str) -> &[PkgId] {
        self.by_name.get(name).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.by_name.keys().map(String::as_str)
    }

    pub fn find(&self, name: &str, version: &str) -> Option<PkgId> {
        let v = Version::parse(version).ok()?;
        self.by_name(name).iter().copied().find(|&p| self.package(p).version == v)
    }

    /// Looks up a `name/version` spec.
    pub fn lookup(&self, spec: &str) -> Option<PkgId> {
        let (name, version) = spec.split_once('/')?;
        self.find(name, version)
    }

    pub fn display(&self, id: PkgId) -> String {
        self.package(id).to_string()
    }

    /// Renders the universe back into `Packages` stanzas, split into the
    /// testing and the unstable file. Dependencies are spelled as exact
    /// `(= version)` alternatives; empty disjunctions name a package that
    /// does not exist.
    pub fn to_stanzas(&self) -> (Vec<PackageStanza>, Vec<PackageStanza>) {
        let exact = |q: PkgId| {
            let pkg = self.package(q);
            VersionConstraint::versioned(pkg.name.clone(), crate::control::Relation::Eq, pkg.version.clone())
        };
        let (mut t, mut u) = (Vec::new(), Vec::new());
        for p in self.ids() {
            let pkg = self.package(p);
            let mut st = PackageStanza::new(pkg.name.clone(), pkg.version.clone());
            st.depends = self
                .deps(p)
                .iter()
                .map(|d| {
                    if d.is_empty() {
                        vec![VersionConstraint::any(format!("missing-{}", pkg.name))]
                    } else {
                        d.iter().map(|&q| exact(q)).collect()
                    }
                })
                .collect();
            st.conflicts = self.conflicts(p).iter().map(|&q| exact(q)).collect();
            if self.in_testing(p) {
                t.push(st.clone());
            }
            if self.in_unstable(p) {
                u.push(st);
            }
        }
        (t, u)
    }
}

/// `C_u`: ordered pairs of distinct packages sharing a name.
pub fn unique_pairs(u: &Universe) -> BTreeSet<(PkgId, PkgId)> {
    let mut out = BTreeSet::new();
    for ids in u.by_name.values() {
        for &a in ids {
            for &b in ids {
                if a != b {
                    out.insert((a, b));
                }
            }
        }
    }
    out
}

struct Entry {
    package: Package,
    testing: bool,
    unstable: bool,
}

/// Incremental construction of a [`Universe`] from already expanded relations.
///
/// Handles returned by [`UniverseBuilder::add`] are insertion indices; the
/// built universe renumbers packages into `(name, version)` order.
#[derive(Default)]
pub struct UniverseBuilder {
    entries: Vec<Entry>,
    index: BTreeMap<Package, usize>,
    deps: Vec<(usize, Vec<usize>, String)>,
    conflicts: Vec<(usize, usize)>,
}

impl UniverseBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a package (or marks an existing one) as member of testing and/or unstable.
    pub fn add(&mut self, name: &str, version: &str, testing: bool, unstable: bool) -> Result<usize, UniverseError> {
        let package = Package::new(name, Version::parse(version)?);
        if !testing && !unstable {
            return Err(UniverseError::NotInAnyRepository(package.to_string()));
        }
        Ok(self.add_package(package, testing, unstable))
    }

    fn add_package(&mut self, package: Package, testing: bool, unstable: bool) -> usize {
        if let Some(&h) = self.index.get(&package) {
            self.entries[h].testing |= testing;
            self.entries[h].unstable |= unstable;
            return h;
        }
        let h = self.entries.len();
        self.index.insert(package.clone(), h);
        self.entries.push(Entry { package, testing, unstable });
        h
    }

    pub fn depends(&mut self, pkg: usize, alternatives: &[usize]) -> &mut Self {
        self.deps.push((pkg, alternatives.to_vec(), String::new()));
        self
    }

    fn depends_with_text(&mut self, pkg: usize, alternatives: Vec<usize>, text: String) {
        self.deps.push((pkg, alternatives, text));
    }

    /// Declares a conflict; self-conflicts are ignored.
    pub fn conflict(&mut self, a: usize, b: usize) -> &mut Self {
        if a != b {
            self.conflicts.push((a, b));
        }
        self
    }

    pub fn build(self) -> Result<Universe, UniverseError> {
        let n = self.entries.len();
        let check = |h: usize| if h < n { Ok(()) } else { Err(UniverseError::UnknownHandle(h)) };
        for (p, alts, _) in &self.deps {
            check(*p)?;
            alts.iter().try_for_each(|&h| check(h))?;
        }
        for &(a, b) in &self.conflicts {
            check(a)?;
            check(b)?;
        }

        // BTreeMap iteration order is the (name, version) order.
        let mut remap = vec![PkgId(0); n];
        let mut packages = Vec::with_capacity(n);
        let mut testing = Vec::with_capacity(n);
        let mut unstable = Vec::with_capacity(n);
        for (new, (_, &h)) in self.index.iter().enumerate() {
            remap[h] = PkgId(new as u32);
            let e = &self.entries[h];
            packages.push(e.package.clone());
            testing.push(e.testing);
            unstable.push(e.unstable);
        }

        let mut raw_deps: Vec<Vec<(Vec<PkgId>, String)>> = vec![Vec::new(); n];
        for (p, alts, text) in self.deps {
            let mut d: Vec<PkgId> = alts.into_iter().map(|h| remap[h]).collect();
            d.sort_unstable();
            d.dedup();
            raw_deps[remap[p].index()].push((d, text));
        }
        let mut deps = Vec::with_capacity(n);
        let mut dep_text = Vec::with_capacity(n);
        for mut list in raw_deps {
            // Stable sort keeps the first source text for duplicate disjunctions.
            list.sort_by(|a, b| a.0.cmp(&b.0));
            list.dedup_by(|a, b| a.0 == b.0);
            let (d, t): (Vec<_>, Vec<_>) = list.into_iter().unzip();
            deps.push(d);
            dep_text.push(t);
        }

        let mut conflicts = vec![Vec::new(); n];
        let mut pairs = BTreeSet::new();
        for (a, b) in self.conflicts {
            let (a, b) = (remap[a], remap[b]);
            pairs.insert((a.min(b), a.max(b)));
        }
        for &(a, b) in &pairs {
            conflicts[a.index()].push(b);
            conflicts[b.index()].push(a);
        }
        for c in &mut conflicts {
            c.sort_unstable();
        }

        let mut by_name: BTreeMap<String, Vec<PkgId>> = BTreeMap::new();
        for (i, p) in packages.iter().enumerate() {
            by_name.entry(p.name.clone()).or_default().push(PkgId(i as u32));
        }

        Ok(Universe {
            packages,
            deps,
            dep_text,
            conflicts,
            conflict_pairs: pairs.into_iter().collect(),
            testing,
            unstable,
            by_name,
        })
    }
}

/// Builds the universe from testing and unstable stanzas, expanding every
/// relationship into the concrete packages that satisfy it.
///
/// An unversioned constraint matches every package of that name plus every
/// package providing it; a versioned constraint matches real packages only.
/// Conflicts between packages of the same name are dropped.
pub fn build_universe(testing: &[PackageStanza], unstable: &[PackageStanza]) -> Result<Universe, UniverseError> {
    let mut b = UniverseBuilder::new();
    let mut stanzas: Vec<&PackageStanza> = Vec::new();
    for (list, in_t) in [(testing, true), (unstable, false)] {
        for st in list {
            let h = b.add_package(Package::new(st.name.clone(), st.version.clone()), in_t, !in_t);
            if h == stanzas.len() {
                stanzas.push(st);
            } else if !same_metadata(stanzas[h], st) {
                return Err(UniverseError::ConflictingDuplicate(format!("{}/{}", st.name, st.version)));
            }
        }
    }

    let mut real: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    let mut providers: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (h, st) in stanzas.iter().enumerate() {
        real.entry(st.name.as_str()).or_default().push(h);
        for v in &st.provides {
            providers.entry(v.as_str()).or_default().push(h);
        }
    }
    let expand = |c: &VersionConstraint| -> Vec<usize> {
        let mut out: Vec<usize> = real
            .get(c.name.as_str())
            .into_iter()
            .flatten()
            .copied()
            .filter(|&h| c.is_satisfied_by(&stanzas[h].name, &stanzas[h].version))
            .collect();
        if c.restriction.is_none() {
            out.extend(providers.get(c.name.as_str()).into_iter().flatten().copied());
        }
        out
    };

    for (h, st) in stanzas.iter().enumerate() {
        for group in &st.depends {
            let alts: Vec<usize> = group.iter().flat_map(&expand).collect();
            b.depends_with_text(h, alts, format_dependency_expr(std::slice::from_ref(group)));
        }
        for c in &st.conflicts {
            for other in expand(c) {
                if stanzas[other].name != st.name {
                    b.conflict(h, other);
                }
            }
        }
    }
    b.build()
}

fn same_metadata(a: &PackageStanza, b: &PackageStanza) -> bool {
    a.depends == b.depends && a.conflicts == b.conflicts && a.provides == b.provides
}
