//! Dependency closures and the derived package classes used to shrink
//! encodings.
//!
//! - `may_depend(p)`: union of all dependency disjunctions of `p`.
//! - `closure(p)`: reflexive-transitive closure of `may_depend`.
//! - easy packages: those whose closure contains no conflict endpoint.
//! - `hard_closure(p)`: closure restricted to hard packages (`{p}` for easy `p`).
//! - `relevant_conflicts(p)`: conflicts with both ends in `closure(p)`.
//! - `connecting(p)`: closure members whose own closure reaches an endpoint
//!   of a relevant conflict, plus `p`.

use std::sync::OnceLock;

use rayon::prelude::*;

use crate::pkgset::PkgSet;
use crate::repo::{PkgId, Universe};

#[derive(Debug)]
pub struct ClosureIndex<'u> {
    universe: &'u Universe,
    may_dep: Vec<Vec<PkgId>>,
    component: Vec<u32>,
    closures: Vec<PkgSet>,
    endpoints: PkgSet,
    easy: PkgSet,
    hard: Vec<OnceLock<PkgSet>>,
    relevant: Vec<OnceLock<Vec<(PkgId, PkgId)>>>,
    connecting: Vec<OnceLock<PkgSet>>,
}

/// Summary figures for reporting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClosureStats {
    pub packages: usize,
    pub easy: usize,
    pub closure_min: usize,
    pub closure_median: usize,
    pub closure_max: usize,
    pub closure_total: usize,
    pub connecting_total: usize,
    pub with_relevant_conflicts: usize,
}

pub fn may_depend(u: &Universe, p: PkgId) -> Vec<PkgId> {
    let mut out: Vec<PkgId> = u.deps(p).iter().flatten().copied().collect();
    out.sort_unstable();
    out.dedup();
    out
}

impl<'u> ClosureIndex<'u> {
    pub fn new(universe: &'u Universe) -> Self {
        let n = universe.len();
        let may_dep: Vec<Vec<PkgId>> =
            universe.ids().collect::<Vec<_>>().par_iter().map(|&p| may_depend(universe, p)).collect();
        let (component, order) = strongly_connected(&may_dep);

        // Components come out of Tarjan's algorithm in reverse topological
        // order, so every successor component is finished before its users.
        let mut members: Vec<Vec<PkgId>> = vec![Vec::new(); order];
        for (i, &c) in component.iter().enumerate() {
            members[c as usize].push(PkgId(i as u32));
        }
        let mut closures: Vec<PkgSet> = Vec::with_capacity(order);
        for (c, ms) in members.iter().enumerate() {
            let own = PkgSet::from_ids(n, ms.iter().copied());
            let mut succ: Vec<u32> = ms
                .iter()
                .flat_map(|p| may_dep[p.index()].iter().map(|q| component[q.index()]))
                .filter(|&d| d as usize != c)
                .collect();
            succ.sort_unstable();
            succ.dedup();
            let set = PkgSet::union_of(n, std::iter::once(&own).chain(succ.iter().map(|&d| &closures[d as usize])));
            closures.push(set);
        }

        let endpoints = PkgSet::from_ids(n, universe.conflict_pairs().iter().flat_map(|&(a, b)| [a, b]));
        let easy = PkgSet::from_ids(
            n,
            universe.ids().filter(|p| !closures[component[p.index()] as usize].intersects(&endpoints)),
        );
        ClosureIndex {
            universe,
            may_dep,
            component,
            closures,
            endpoints,
            easy,
            hard: (0..n).map(|_| OnceLock::new()).collect(),
            relevant: (0..n).map(|_| OnceLock::new()).collect(),
            connecting: (0..n).map(|_| OnceLock::new()).collect(),
        }
    }

    pub fn universe(&self) -> &'u Universe {
        self.universe
    }

    pub fn may_depend(&self, p: PkgId) -> &[PkgId] {
        &self.may_dep[p.index()]
    }

    pub fn closure(&self, p: PkgId) -> &PkgSet {
        &self.closures[self.component[p.index()] as usize]
    }

    /// Packages occurring in some conflict.
    pub fn conflict_endpoints(&self) -> &PkgSet {
        &self.endpoints
    }

    pub fn easy(&self) -> &PkgSet {
        &self.easy
    }

    pub fn is_easy(&self, p: PkgId) -> bool {
        self.easy.contains(p)
    }

    /// Closure within the hard packages. Every package on a dependency path
    /// to a hard package is itself hard, so for hard `p` this is simply the
    /// closure minus the easy packages.
    pub fn hard_closure(&self, p: PkgId) -> &PkgSet {
        self.hard[p.index()].get_or_init(|| {
            if self.is_easy(p) {
                PkgSet::from_ids(self.universe.len(), [p])
            } else {
                self.closure(p).difference(&self.easy)
            }
        })
    }

    /// Conflicts inside `closure(p)`, each once as `(a, b)` with `a < b`.
    pub fn relevant_conflicts(&self, p: PkgId) -> &[(PkgId, PkgId)] {
        self.relevant[p.index()].get_or_init(|| {
            if self.is_easy(p) {
                return Vec::new();
            }
            let cl = self.closure(p);
            let mut out = Vec::new();
            for a in cl.iter() {
                for &b in self.universe.conflicts(a) {
                    if b > a && cl.contains(b) {
                        out.push((a, b));
                    }
                }
            }
            out
        })
    }

    pub fn connecting(&self, p: PkgId) -> &PkgSet {
        self.connecting[p.index()].get_or_init(|| {
            let n = self.universe.len();
            let rel = self.relevant_conflicts(p);
            if rel.is_empty() {
                return PkgSet::from_ids(n, [p]);
            }
            let ends = PkgSet::from_ids(n, rel.iter().flat_map(|&(a, b)| [a, b]));
            let members = self.closure(p).iter().filter(|&q| q == p || self.closure(q).intersects(&ends));
            PkgSet::from_ids(n, members)
        })
    }

    /// Fills every lazily computed set, in parallel.
    pub fn warm(&self) {
        (0..self.universe.len() as u32).into_par_iter().for_each(|i| {
            let p = PkgId(i);
            self.hard_closure(p);
            self.connecting(p);
        });
    }

    /// The `k` packages with the largest closures, largest first.
    pub fn top_closures(&self, k: usize) -> Vec<(PkgId, usize)> {
        let mut all: Vec<(PkgId, usize)> = self.universe.ids().map(|p| (p, self.closure(p).len())).collect();
        all.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        all.truncate(k);
        all
    }

    pub fn stats(&self) -> ClosureStats {
        self.warm();
        let mut sizes: Vec<usize> = self.universe.ids().map(|p| self.closure(p).len()).collect();
        sizes.sort_unstable();
        ClosureStats {
            packages: sizes.len(),
            easy: self.easy.len(),
            closure_min: sizes.first().copied().unwrap_or(0),
            closure_median: sizes.get(sizes.len() / 2).copied().unwrap_or(0),
            closure_max: sizes.last().copied().unwrap_or(0),
            closure_total: sizes.iter().sum(),
            connecting_total: self.universe.ids().map(|p| self.connecting(p).len()).sum(),
            with_relevant_conflicts: self.universe.ids().filter(|&p| !self.relevant_conflicts(p).is_empty()).count(),
        }
    }
}

/// Iterative Tarjan. Returns the component of each node and the number of
/// components; components are numbered in the order they are completed.
fn strongly_connected(succ: &[Vec<PkgId>]) -> (Vec<u32>, usize) {
    const UNSEEN: u32 = u32::MAX;
    let n = succ.len();
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0u32; n];
    let mut on_stack = vec![false; n];
    let mut component = vec![UNSEEN; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut next_index = 0u32;
    let mut count = 0u32;
    // (node, position in its successor list)
    let mut work: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        work.push((root, 0));
        while let Some(&(v, pos)) = work.last() {
            if pos == 0 && index[v] == UNSEEN {
                index[v] = next_index;
                low[v] = next_index;
                next_index += 1;
                stack.push(v);
                on_stack[v] = true;
            }
            if let Some(w) = succ[v].get(pos).map(|w| w.index()) {
                work.last_mut().unwrap().1 += 1;
                if index[w] == UNSEEN {
                    work.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            work.pop();
            if let Some(&(parent, _)) = work.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                loop {
                    let w = stack.pop().unwrap();
                    on_stack[w] = false;
                    component[w] = count;
                    if w == v {
                        break;
                    }
                }
                count += 1;
            }
        }
    }
    (component, count as usize)
}
