//! Line-oriented text and JSON renderings of command results. The JSON form
//! reads back with [`Document::parse`].

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{render_hints, MigrationResult, Mode};
use crate::encoder::{EncodingKind, EncodingStats, Family};
use crate::repo::{Admissibility, Universe, Violation};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Document {
    Migrate(MigrateDocument),
    Explain(ExplainDocument),
    Check(CheckDocument),
    Stats(StatsDocument),
    Emit(EmitDocument),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MigrateDocument {
    pub mode: String,
    pub encoding: String,
    pub t_prime: Vec<String>,
    pub migrated_in: Vec<String>,
    pub removed: Vec<String>,
    pub delta: usize,
    pub verified: bool,
    pub violation: Option<String>,
    pub optimum: usize,
    pub externally_claimed: bool,
    pub hints: Option<String>,
    pub testing_issues: Vec<String>,
    pub explanation: Option<Vec<String>>,
    /// Further solutions from the alternatives search, as (delta, t_prime).
    pub alternatives: Vec<(usize, Vec<String>)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplainDocument {
    pub package: String,
    pub migrates: bool,
    pub delta: Option<usize>,
    pub explanation: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UninstallableEntry {
    pub package: String,
    pub explanation: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckDocument {
    pub clean: bool,
    pub duplicates: Vec<(String, String)>,
    pub uninstallable: Vec<UninstallableEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsRow {
    pub encoding: String,
    pub atoms: usize,
    pub package_atoms: usize,
    pub installation_atoms: usize,
    pub clauses: usize,
    pub families: BTreeMap<String, usize>,
}

impl From<&EncodingStats> for StatsRow {
    fn from(s: &EncodingStats) -> Self {
        StatsRow {
            encoding: s.kind.name().to_owned(),
            atoms: s.atoms,
            package_atoms: s.package_atoms,
            installation_atoms: s.installation_atoms,
            clauses: s.hard_clauses,
            families: Family::ALL
                .iter()
                .filter(|&&f| s.family(f) > 0)
                .map(|&f| (f.tag().to_owned(), s.family(f)))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsDocument {
    pub packages: usize,
    pub testing: usize,
    pub unstable: usize,
    pub conflicts: usize,
    pub easy: usize,
    pub closure_min: usize,
    pub closure_median: usize,
    pub closure_max: usize,
    pub closure_total: usize,
    pub connecting_total: usize,
    pub with_relevant_conflicts: usize,
    pub encodings: Vec<StatsRow>,
    pub top_closures: Vec<(String, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmitDocument {
    pub encoding: String,
    pub instance: String,
    pub map: String,
    pub variables: usize,
    pub hard: usize,
    pub soft: usize,
}

pub fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Max => "max",
        Mode::MinNonTrivial => "min",
        Mode::Target(_) => "target",
    }
}

fn violation_text(a: &Admissibility, u: &Universe) -> Option<String> {
    match a {
        Admissibility::Ok => None,
        Admissibility::Violation(Violation::Uniqueness(x, y)) => {
            Some(format!("{} and {} share a name", u.display(*x), u.display(*y)))
        }
        Admissibility::Violation(Violation::Trimmedness(p)) => Some(format!("{} is not installable", u.display(*p))),
        Admissibility::Violation(Violation::Policy(k)) => Some(format!("policy clause {k} is violated")),
    }
}

impl MigrateDocument {
    pub fn new(r: &MigrationResult, u: &Universe, mode: Mode, encoding: EncodingKind) -> Self {
        let names = |ids: &mut dyn Iterator<Item = crate::repo::PkgId>| ids.map(|p| u.display(p)).collect();
        MigrateDocument {
            mode: mode_name(mode).to_owned(),
            encoding: encoding.name().to_owned(),
            t_prime: names(&mut r.t_prime.iter().copied()),
            migrated_in: names(&mut r.migrated_in.iter().copied()),
            removed: names(&mut r.removed.iter().copied()),
            delta: r.delta,
            verified: r.verified(),
            violation: violation_text(&r.verification, u),
            optimum: r.optimum,
            externally_claimed: r.externally_claimed,
            hints: render_hints(r, u).ok(),
            testing_issues: Vec::new(),
            explanation: None,
            alternatives: Vec::new(),
        }
    }
}

fn list(items: &[String]) -> String {
    if items.is_empty() {
        "-".to_owned()
    } else {
        items.join(" ")
    }
}

impl Document {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents serialize") + "\n"
    }

    pub fn parse(text: &str) -> Result<Document, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        match self {
            Document::Migrate(d) => {
                for issue in &d.testing_issues {
                    writeln!(s, "warning: {issue}").unwrap();
                }
                writeln!(s, "mode: {}", d.mode).unwrap();
                writeln!(s, "encoding: {}", d.encoding).unwrap();
                writeln!(s, "delta: {}", d.delta).unwrap();
                let claim = if d.externally_claimed { " (optimality claimed by external solver)" } else { "" };
                writeln!(s, "optimum: {}{claim}", d.optimum).unwrap();
                match &d.violation {
                    None => writeln!(s, "verified: yes").unwrap(),
                    Some(v) => writeln!(s, "verified: no ({v})").unwrap(),
                }
                writeln!(s, "migrated in: {}", list(&d.migrated_in)).unwrap();
                writeln!(s, "removed: {}", list(&d.removed)).unwrap();
                writeln!(s, "testing: {}", list(&d.t_prime)).unwrap();
                for (k, (delta, t)) in d.alternatives.iter().enumerate() {
                    writeln!(s, "alternative {}: delta {delta}: {}", k + 1, list(t)).unwrap();
                }
                if let Some(h) = &d.hints {
                    writeln!(s, "hints:").unwrap();
                    s.push_str(h);
                }
            }
            Document::Explain(d) => {
                if d.migrates {
                    writeln!(s, "{} migrates with delta {}", d.package, d.delta.unwrap_or(0)).unwrap();
                } else {
                    writeln!(s, "{} cannot migrate:", d.package).unwrap();
                    for line in &d.explanation {
                        writeln!(s, "  {line}").unwrap();
                    }
                }
            }
            Document::Check(d) => {
                for (a, b) in &d.duplicates {
                    writeln!(s, "duplicate: {a} and {b} share a name").unwrap();
                }
                for e in &d.uninstallable {
                    writeln!(s, "uninstallable: {}", e.package).unwrap();
                    for line in &e.explanation {
                        writeln!(s, "  {line}").unwrap();
                    }
                }
                if d.clean {
                    writeln!(s, "testing is trimmed and has unique names").unwrap();
                }
            }
            Document::Emit(d) => {
                writeln!(s, "wrote {} ({} variables, {} hard, {} soft)", d.instance, d.variables, d.hard, d.soft)
                    .unwrap();
                writeln!(s, "wrote {}", d.map).unwrap();
            }
            Document::Stats(d) => {
                writeln!(s, "packages: {} (testing {}, unstable {})", d.packages, d.testing, d.unstable).unwrap();
                writeln!(s, "conflicts: {}", d.conflicts).unwrap();
                writeln!(s, "easy packages: {}", d.easy).unwrap();
                writeln!(
                    s,
                    "closure size: min {} median {} max {} total {}",
                    d.closure_min, d.closure_median, d.closure_max, d.closure_total
                )
                .unwrap();
                writeln!(s, "connecting dependencies: total {}", d.connecting_total).unwrap();
                writeln!(s, "packages with relevant conflicts: {}", d.with_relevant_conflicts).unwrap();
                writeln!(
                    s,
                    "{:<10} {:>12} {:>12} {:>12} {:>12}  families",
                    "encoding", "atoms", "pkg atoms", "inst atoms", "clauses"
                )
                .unwrap();
                for r in &d.encodings {
                    let fam: Vec<String> = r.families.iter().map(|(k, v)| format!("{k}={v}")).collect();
                    writeln!(
                        s,
                        "{:<10} {:>12} {:>12} {:>12} {:>12}  {}",
                        r.encoding,
                        r.atoms,
                        r.package_atoms,
                        r.installation_atoms,
                        r.clauses,
                        fam.join(" ")
                    )
                    .unwrap();
                }
                if !d.top_closures.is_empty() {
                    writeln!(s, "largest closures:").unwrap();
                    for (p, n) in &d.top_closures {
                        writeln!(s, "  {n:>8}  {p}").unwrap();
                    }
                }
            }
        }
        s
    }
}
