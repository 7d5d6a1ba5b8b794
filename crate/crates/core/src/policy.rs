//! Validity rules beyond uniqueness and trimmedness.
//!
//! Rules are plain propositional constraints over "package is in the new
//! testing" literals. Two forms exist: all-or-none groups (for example all
//! binaries of a source package migrating together) and raw clauses.
//!
//! The line format is
//!
//! ```text
//! # comment
//! group: +libfoo1/2.0 +foo-bin/2.0 -libfoo0/1.0
//! clause: -bar/1.0 +baz/3
//! ```
//!
//! where a missing sign means `+`.

use std::fmt;

use thiserror::Error;

use crate::repo::{Package, PkgId, Universe};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolicyError {
    #[error("policy line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("policy refers to unknown package {0}")]
    UnknownPackage(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyLiteral {
    pub package: Package,
    pub positive: bool,
}

impl fmt::Display for PolicyLiteral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", if self.positive { '+' } else { '-' }, self.package)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PolicyRules {
    pub groups: Vec<Vec<PolicyLiteral>>,
    pub extra_clauses: Vec<Vec<PolicyLiteral>>,
}

/// Where a resolved policy clause came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicySource {
    /// `group[from] → group[to]` of the given group.
    Group {
        group: usize,
        from: usize,
        to: usize,
    },
    Extra(usize),
}

/// A policy clause over package literals `(package, must_be_present)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyClause {
    pub literals: Vec<(PkgId, bool)>,
    pub source: PolicySource,
}

impl PolicyClause {
    pub fn holds(&self, present: impl Fn(PkgId) -> bool) -> bool {
        self.literals.iter().any(|&(p, pos)| present(p) == pos)
    }

    pub fn render(&self, u: &Universe) -> String {
        if self.literals.is_empty() {
            return "false".to_owned();
        }
        self.literals
            .iter()
            .map(|&(p, pos)| format!("{}{}", if pos { "" } else { "not " }, u.display(p)))
            .collect::<Vec<_>>()
            .join(" or ")
    }
}

/// Policy rules with package references resolved against a universe.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ResolvedPolicy {
    pub clauses: Vec<PolicyClause>,
}

impl ResolvedPolicy {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }
}

impl PolicyRules {
    pub fn is_empty(&self) -> bool {
        self.groups.is_empty() && self.extra_clauses.is_empty()
    }

    pub fn parse(text: &str) -> Result<Self, PolicyError> {
        let mut rules = PolicyRules::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let syntax = |message: String| PolicyError::Syntax { line: i + 1, message };
            let (kind, rest) = line.split_once(':').ok_or_else(|| syntax("expected `group:` or `clause:`".into()))?;
            let literals = rest
                .split_whitespace()
                .map(|tok| {
                    let (positive, spec) = match tok.as_bytes()[0] {
                        b'+' => (true, &tok[1..]),
                        b'-' => (false, &tok[1..]),
                        _ => (true, tok),
                    };
                    Package::parse_spec(spec)
                        .map(|package| PolicyLiteral { package, positive })
                        .ok_or_else(|| syntax(format!("bad package reference {tok:?}")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            match kind.trim() {
                "group" => rules.groups.push(literals),
                "clause" => rules.extra_clauses.push(literals),
                other => return Err(syntax(format!("unknown rule kind {other:?}"))),
            }
        }
        Ok(rules)
    }

    /// Expands groups into pairwise implications and resolves all packages.
    pub fn resolve(&self, u: &Universe) -> Result<ResolvedPolicy, PolicyError> {
        let lit = |l: &PolicyLiteral| -> Result<(PkgId, bool), PolicyError> {
            let id = u
                .by_name(&l.package.name)
                .iter()
                .copied()
                .find(|&p| u.package(p).version == l.package.version)
                .ok_or_else(|| PolicyError::UnknownPackage(l.package.to_string()))?;
            Ok((id, l.positive))
        };
        let mut clauses = Vec::new();
        for (g, group) in self.groups.iter().enumerate() {
            let resolved = group.iter().map(lit).collect::<Result<Vec<_>, _>>()?;
            for (i, &(pi, si)) in resolved.iter().enumerate() {
                for (j, &(pj, sj)) in resolved.iter().enumerate() {
                    if i != j {
                        clauses.push(PolicyClause {
                            literals: vec![(pi, !si), (pj, sj)],
                            source: PolicySource::Group { group: g, from: i, to: j },
                        });
                    }
                }
            }
        }
        for (k, clause) in self.extra_clauses.iter().enumerate() {
            clauses.push(PolicyClause {
                literals: clause.iter().map(lit).collect::<Result<Vec<_>, _>>()?,
                source: PolicySource::Extra(k),
            });
        }
        Ok(ResolvedPolicy { clauses })
    }
}
