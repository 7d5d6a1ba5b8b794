//! The repository model: packages, the expanded dependency function, the
//! conflict relation, and the installability predicates defined over them.

mod health;
mod universe;

use std::fmt;

use crate::version::Version;

pub use health::{
    admissible_migrations, installability_problem, is_admissible, is_healthy, is_installable, is_trimmed,
    Admissibility, InstallCheck, InstallClause, InstallProblem, Installation, RepoError, Violation,
    ORACLE_CONTEXT_LIMIT, ORACLE_UNIVERSE_LIMIT,
};
pub use universe::{build_universe, unique_pairs, Universe, UniverseBuilder, UniverseError};

/// Dense index of a package inside a [`Universe`].
///
/// Ids follow the `(name, version)` order of the packages, so sorting ids
/// sorts packages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PkgId(pub u32);

impl PkgId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A package: a name and a version.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Package {
    pub name: String,
    pub version: Version,
}

impl Package {
    pub fn new(name: impl Into<String>, version: Version) -> Self {
        Package { name: name.into(), version }
    }

    /// Parses `name/version`.
    pub fn parse_spec(spec: &str) -> Option<Package> {
        let (name, version) = spec.split_once('/')?;
        if name.is_empty() {
            return None;
        }
        Some(Package::new(name, Version::parse(version).ok()?))
    }
}

impl fmt::Display for Package {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.version)
    }
}
