//! Parsing of `Packages` files and package relationship fields.

use std::fmt;

use thiserror::Error;

use crate::version::{Version, VersionError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("stanza {stanza}: missing required field {field}")]
    MissingField { field: &'static str, stanza: usize },
    #[error("stanza {stanza}: field {field} given more than once")]
    DuplicateField { field: String, stanza: usize },
    #[error("line {line}: expected `Key: value`")]
    MalformedLine { line: usize },
    #[error("line {line}: continuation line without a preceding field")]
    OrphanContinuation { line: usize },
    #[error("stanza {stanza}: field {field} contains non-ASCII bytes")]
    NonAscii { field: String, stanza: usize },
    #[error("stanza {stanza}: invalid package name {name:?}")]
    BadName { name: String, stanza: usize },
    #[error("malformed dependency {text:?} at offset {offset}")]
    MalformedDependency { text: String, offset: usize },
    #[error("stanza {stanza}: {source}")]
    MalformedVersion {
        stanza: usize,
        #[source]
        source: VersionError,
    },
}

/// Version relation of a dependency alternative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Relation {
    Less,
    LessEq,
    Eq,
    GreaterEq,
    Greater,
}

impl Relation {
    pub fn as_str(self) -> &'static str {
        match self {
            Relation::Less => "<<",
            Relation::LessEq => "<=",
            Relation::Eq => "=",
            Relation::GreaterEq => ">=",
            Relation::Greater => ">>",
        }
    }

    pub fn holds(self, candidate: &Version, bound: &Version) -> bool {
        use std::cmp::Ordering::*;
        let ord = candidate.cmp(bound);
        match self {
            Relation::Less => ord == Less,
            Relation::LessEq => ord != Greater,
            Relation::Eq => ord == Equal,
            Relation::GreaterEq => ord != Less,
            Relation::Greater => ord == Greater,
        }
    }
}

/// One alternative of a relationship field, e.g. `libc6 (>= 2.14)`.
///
/// A missing version restriction means any version (or any provider).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VersionConstraint {
    pub name: String,
    /// Multiarch qualifier such as `any` in `python3:any`; kept for printing only.
    pub arch_qualifier: Option<String>,
    pub restriction: Option<(Relation, Version)>,
}

impl VersionConstraint {
    pub fn any(name: impl Into<String>) -> Self {
        VersionConstraint { name: name.into(), arch_qualifier: None, restriction: None }
    }

    pub fn versioned(name: impl Into<String>, rel: Relation, bound: Version) -> Self {
        VersionConstraint { name: name.into(), arch_qualifier: None, restriction: Some((rel, bound)) }
    }

    pub fn is_satisfied_by(&self, name: &str, version: &Version) -> bool {
        name == self.name
            && match &self.restriction {
                None => true,
                Some((rel, bound)) => rel.holds(version, bound),
            }
    }
}

impl fmt::Display for VersionConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        if let Some(q) = &self.arch_qualifier {
            write!(f, ":{q}")?;
        }
        if let Some((rel, v)) = &self.restriction {
            write!(f, " ({} {})", rel.as_str(), v)?;
        }
        Ok(())
    }
}

/// AND-list of OR-groups.
pub type DependencyExpr = Vec<Vec<VersionConstraint>>;

/// A single binary package record from a `Packages` file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackageStanza {
    pub name: String,
    pub version: Version,
    pub architecture: Option<String>,
    /// `Depends` and `Pre-Depends`, concatenated.
    pub depends: DependencyExpr,
    /// `Conflicts` and `Breaks`, concatenated.
    pub conflicts: Vec<VersionConstraint>,
    pub provides: Vec<String>,
}

impl PackageStanza {
    pub fn new(name: impl Into<String>, version: Version) -> Self {
        PackageStanza {
            name: name.into(),
            version,
            architecture: None,
            depends: Vec::new(),
            conflicts: Vec::new(),
            provides: Vec::new(),
        }
    }

    /// Renders the stanza in `Packages` syntax, terminated by a blank line.
    pub fn to_deb822(&self) -> String {
        let mut out = format!("Package: {}\nVersion: {}\n", self.name, self.version);
        if let Some(arch) = &self.architecture {
            out.push_str(&format!("Architecture: {arch}\n"));
        }
        if !self.depends.is_empty() {
            out.push_str(&format!("Depends: {}\n", format_dependency_expr(&self.depends)));
        }
        if !self.conflicts.is_empty() {
            let items: Vec<String> = self.conflicts.iter().map(ToString::to_string).collect();
            out.push_str(&format!("Conflicts: {}\n", items.join(", ")));
        }
        if !self.provides.is_empty() {
            out.push_str(&format!("Provides: {}\n", self.provides.join(", ")));
        }
        out.push('\n');
        out
    }
}

fn valid_name(name: &str) -> bool {
    !name.is_empty() && name.bytes().all(|b| b.is_ascii_alphanumeric() || matches!(b, b'+' | b'-' | b'.' | b'_'))
}

/// Parses a relationship field: `,`-separated groups of `|`-separated alternatives.
pub fn parse_dependency_expr(text: &str) -> Result<DependencyExpr, ParseError> {
    let mut groups = Vec::new();
    let mut offset = 0;
    for group in text.split(',') {
        let mut alts = Vec::new();
        let mut alt_offset = offset;
        for alt in group.split('|') {
            alts.push(parse_alternative(text, alt, alt_offset)?);
            alt_offset += alt.len() + 1;
        }
        groups.push(alts);
        offset += group.len() + 1;
    }
    Ok(groups)
}

fn parse_alternative(full: &str, alt: &str, base: usize) -> Result<VersionConstraint, ParseError> {
    let err = |at: usize| ParseError::MalformedDependency { text: full.to_owned(), offset: base + at };
    let lead = alt.len() - alt.trim_start().len();
    let body = alt.trim();
    if body.is_empty() {
        return Err(err(lead));
    }
    let name_end = body.find(|c: char| c.is_ascii_whitespace() || c == '(').unwrap_or(body.len());
    let (name_part, rest) = body.split_at(name_end);
    let (name, qualifier) = match name_part.split_once(':') {
        Some((n, q)) => (n, Some(q)),
        None => (name_part, None),
    };
    if !valid_name(name) || qualifier.is_some_and(|q| !valid_name(q)) {
        return Err(err(lead));
    }
    let rest_trim = rest.trim_start();
    let rest_at = lead + name_end + (rest.len() - rest_trim.len());
    let restriction = if rest_trim.is_empty() {
        None
    } else {
        let inner = rest_trim.strip_prefix('(').and_then(|r| r.strip_suffix(')')).ok_or_else(|| err(rest_at))?;
        let inner_trim = inner.trim_start();
        let op_at = rest_at + 1 + (inner.len() - inner_trim.len());
        let (rel, after) = [
            ("<<", Relation::Less),
            ("<=", Relation::LessEq),
            (">=", Relation::GreaterEq),
            (">>", Relation::Greater),
            ("=", Relation::Eq),
        ]
        .iter()
        .find_map(|(tok, rel)| inner_trim.strip_prefix(tok).map(|r| (*rel, r)))
        .ok_or_else(|| err(op_at))?;
        let ver_text = after.trim();
        let ver_at = op_at + rel.as_str().len() + (after.len() - after.trim_start().len());
        if ver_text.is_empty() {
            return Err(err(ver_at));
        }
        let version = Version::parse(ver_text).map_err(|_| err(ver_at))?;
        Some((rel, version))
    };
    Ok(VersionConstraint { name: name.to_owned(), arch_qualifier: qualifier.map(str::to_owned), restriction })
}

/// Canonical rendering of a relationship field.
pub fn format_dependency_expr(expr: &[Vec<VersionConstraint>]) -> String {
    expr.iter()
        .map(|group| group.iter().map(ToString::to_string).collect::<Vec<_>>().join(" | "))
        .collect::<Vec<_>>()
        .join(", ")
}

struct RawStanza {
    index: usize,
    fields: Vec<(String, Vec<u8>)>,
}

impl RawStanza {
    fn get(&self, key: &str) -> Option<&[u8]> {
        self.fields.iter().find(|(k, _)| k.eq_ignore_ascii_case(key)).map(|(_, v)| v.as_slice())
    }

    fn text(&self, key: &str) -> Result<Option<String>, ParseError> {
        match self.get(key) {
            None => Ok(None),
            Some(bytes) if bytes.is_ascii() => Ok(Some(String::from_utf8_lossy(bytes).trim().to_owned())),
            Some(_) => Err(ParseError::NonAscii { field: key.to_owned(), stanza: self.index }),
        }
    }
}

fn split_stanzas(input: &[u8]) -> Result<Vec<RawStanza>, ParseError> {
    let mut stanzas = Vec::new();
    let mut current: Vec<(String, Vec<u8>)> = Vec::new();
    let flush = |current: &mut Vec<(String, Vec<u8>)>, stanzas: &mut Vec<RawStanza>| {
        if !current.is_empty() {
            let index = stanzas.len();
            stanzas.push(RawStanza { index, fields: std::mem::take(current) });
        }
    };
    for (lineno, raw_line) in input.split(|&b| b == b'\n').enumerate() {
        let line = raw_line.strip_suffix(b"\r").unwrap_or(raw_line);
        if line.iter().all(|b| b.is_ascii_whitespace()) {
            flush(&mut current, &mut stanzas);
            continue;
        }
        if line[0] == b'#' {
            continue;
        }
        if line[0] == b' ' || line[0] == b'\t' {
            let (_, value) = current.last_mut().ok_or(ParseError::OrphanContinuation { line: lineno + 1 })?;
            value.push(b'\n');
            value.extend_from_slice(line.trim_ascii());
            continue;
        }
        let colon = line.iter().position(|&b| b == b':').ok_or(ParseError::MalformedLine { line: lineno + 1 })?;
        let key = String::from_utf8_lossy(&line[..colon]).trim().to_owned();
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(ParseError::MalformedLine { line: lineno + 1 });
        }
        if current.iter().any(|(k, _)| k.eq_ignore_ascii_case(&key)) {
            return Err(ParseError::DuplicateField { field: key, stanza: stanzas.len() });
        }
        current.push((key, line[colon + 1..].trim_ascii().to_vec()));
    }
    flush(&mut current, &mut stanzas);
    Ok(stanzas)
}

fn relationship_field(raw: &RawStanza, key: &str) -> Result<DependencyExpr, ParseError> {
    match raw.text(key)? {
        None => Ok(Vec::new()),
        Some(text) => {
            let flat = text.replace('\n', " ");
            if flat.trim().is_empty() {
                Ok(Vec::new())
            } else {
                parse_dependency_expr(&flat)
            }
        }
    }
}

/// Parses a `Packages` stream into stanzas. Unknown fields are ignored.
pub fn parse_packages_stream(input: &[u8]) -> Result<Vec<PackageStanza>, ParseError> {
    split_stanzas(input)?.into_iter().map(convert_stanza).collect()
}

fn convert_stanza(raw: RawStanza) -> Result<PackageStanza, ParseError> {
    let stanza = raw.index;
    let name = raw.text("Package")?.ok_or(ParseError::MissingField { field: "Package", stanza })?;
    if !valid_name(&name) {
        return Err(ParseError::BadName { name, stanza });
    }
    let version_text = raw.text("Version")?.ok_or(ParseError::MissingField { field: "Version", stanza })?;
    let version = Version::parse(&version_text).map_err(|source| ParseError::MalformedVersion { stanza, source })?;

    let mut depends = relationship_field(&raw, "Pre-Depends")?;
    depends.extend(relationship_field(&raw, "Depends")?);

    let mut conflicts = Vec::new();
    for key in ["Conflicts", "Breaks"] {
        conflicts.extend(relationship_field(&raw, key)?.into_iter().flatten());
    }

    let provides = relationship_field(&raw, "Provides")?.into_iter().flatten().map(|c| c.name).collect();

    Ok(PackageStanza { name, version, architecture: raw.text("Architecture")?, depends, conflicts, provides })
}
