//! Random repositories for tests, benchmarks and the `generate` command.

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::control::PackageStanza;
use crate::policy::{PolicyLiteral, PolicyRules};
use crate::repo::{PkgId, Universe, UniverseBuilder};

/// Shape of a generated universe. Probabilities are per package or per
/// ordered pair of packages.
#[derive(Debug, Clone, PartialEq)]
pub struct GenParams {
    pub packages: usize,
    /// Chance that a new package is a newer version of an existing name.
    pub new_version: f64,
    /// Chance that a package depends on a given other package (self included).
    pub dependency: f64,
    /// Chance of each extra alternative in a disjunction.
    pub alternative: f64,
    /// Chance of a conflict between a given pair of packages.
    pub conflict: f64,
    /// Chance that a package carries an unsatisfiable dependency.
    pub broken: f64,
    /// Chance that a first version sits in both testing and unstable.
    pub shared: f64,
}

impl GenParams {
    pub fn small(packages: usize) -> Self {
        GenParams {
            packages,
            new_version: 0.3,
            dependency: 0.15,
            alternative: 0.3,
            conflict: 0.06,
            broken: 0.05,
            shared: 0.4,
        }
    }
}

/// Generates a universe with unique package names in testing. First
/// versions of a name go to testing, unstable or both; newer versions go to
/// unstable only.
pub fn random_universe<R: Rng + ?Sized>(params: &GenParams, rng: &mut R) -> Universe {
    let mut b = UniverseBuilder::new();
    let mut handles: Vec<usize> = Vec::with_capacity(params.packages);
    let mut names: Vec<(String, u32)> = Vec::new();
    for i in 0..params.packages {
        let h = if !names.is_empty() && rng.random_bool(params.new_version) {
            let k = rng.random_range(0..names.len());
            names[k].1 += 1;
            let (name, v) = &names[k];
            b.add(name, &v.to_string(), false, true).expect("generated version")
        } else {
            let name = format!("p{i}");
            let (t, u) = if rng.random_bool(params.shared) {
                (true, true)
            } else if rng.random_bool(0.5) {
                (true, false)
            } else {
                (false, true)
            };
            names.push((name.clone(), 1));
            b.add(&name, "1", t, u).expect("generated version")
        };
        handles.push(h);
    }
    let n = handles.len();
    for &p in &handles {
        for &q in &handles {
            if rng.random_bool(params.dependency) {
                let mut alts = vec![q];
                while rng.random_bool(params.alternative) {
                    alts.push(handles[rng.random_range(0..n)]);
                }
                b.depends(p, &alts);
            }
        }
        if rng.random_bool(params.broken) {
            b.depends(p, &[]);
        }
    }
    let mut pairs = Vec::new();
    for a in 0..n {
        for c in a + 1..n {
            if rng.random_bool(params.conflict) {
                pairs.push((handles[a], handles[c]));
            }
        }
    }
    for (a, c) in pairs {
        b.conflict(a, c);
    }
    let u = b.build().expect("generated handles are valid");
    strip_same_name_conflicts(u)
}

// Same-name conflicts never matter under uniqueness; the parser drops them
// too, so generated universes follow suit.
fn strip_same_name_conflicts(u: Universe) -> Universe {
    if u.conflict_pairs().iter().all(|&(a, c)| u.name(a) != u.name(c)) {
        return u;
    }
    let mut b = UniverseBuilder::new();
    for p in u.ids() {
        let pkg = u.package(p);
        b.add(&pkg.name, pkg.version.as_str(), u.in_testing(p), u.in_unstable(p)).unwrap();
    }
    for p in u.ids() {
        for d in u.deps(p) {
            let alts: Vec<usize> = d.iter().map(|q| q.index()).collect();
            b.depends(p.index(), &alts);
        }
    }
    for &(a, c) in u.conflict_pairs() {
        if u.name(a) != u.name(c) {
            b.conflict(a.index(), c.index());
        }
    }
    b.build().unwrap()
}

/// A random policy: with probability `chance`, one all-or-none group over
/// two or three packages, and independently one extra clause.
pub fn random_policy<R: Rng + ?Sized>(u: &Universe, chance: f64, rng: &mut R) -> PolicyRules {
    let mut rules = PolicyRules::default();
    let ids: Vec<PkgId> = u.ids().collect();
    if ids.is_empty() {
        return rules;
    }
    let literals = |k: usize, rng: &mut R| -> Vec<PolicyLiteral> {
        (0..k)
            .map(|_| {
                let p = *ids.choose(rng).unwrap();
                PolicyLiteral { package: u.package(p).clone(), positive: rng.random_bool(0.5) }
            })
            .collect()
    };
    if rng.random_bool(chance) {
        let k = rng.random_range(2..=3);
        rules.groups.push(literals(k, rng));
    }
    if rng.random_bool(chance) {
        let k = rng.random_range(1..=3);
        rules.extra_clauses.push(literals(k, rng));
    }
    rules
}

/// Renders a universe as a pair of `Packages` files (testing, unstable).
pub fn packages_files(u: &Universe) -> (String, String) {
    let (t, s) = u.to_stanzas();
    let render = |list: Vec<PackageStanza>| list.iter().map(|st| st.to_deb822()).collect::<Vec<_>>().join("\n");
    (render(t), render(s))
}
