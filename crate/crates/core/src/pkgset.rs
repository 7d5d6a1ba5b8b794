//! Sets of package ids over a universe of known size.
//!
//! Small sets are sorted vectors; once a set holds more than one id per 32
//! slots of the universe it switches to a bitset. Both forms iterate in
//! ascending order.

use crate::repo::PkgId;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Repr {
    Sparse(Vec<u32>),
    Dense { words: Vec<u64>, len: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PkgSet {
    universe: usize,
    repr: Repr,
}

fn wants_dense(len: usize, universe: usize) -> bool {
    len * 32 > universe
}

impl PkgSet {
    pub fn empty(universe: usize) -> Self {
        PkgSet { universe, repr: Repr::Sparse(Vec::new()) }
    }

    /// Builds a set from ids in any order; duplicates are ignored.
    pub fn from_ids(universe: usize, ids: impl IntoIterator<Item = PkgId>) -> Self {
        let mut v: Vec<u32> = ids.into_iter().map(|p| p.0).collect();
        v.sort_unstable();
        v.dedup();
        debug_assert!(v.last().is_none_or(|&x| (x as usize) < universe));
        Self::from_sorted(universe, v)
    }

    fn from_sorted(universe: usize, v: Vec<u32>) -> Self {
        if wants_dense(v.len(), universe) {
            let mut words = vec![0u64; universe.div_ceil(64)];
            for &x in &v {
                words[x as usize / 64] |= 1 << (x % 64);
            }
            PkgSet { universe, repr: Repr::Dense { words, len: v.len() } }
        } else {
            PkgSet { universe, repr: Repr::Sparse(v) }
        }
    }

    pub fn len(&self) -> usize {
        match &self.repr {
            Repr::Sparse(v) => v.len(),
            Repr::Dense { len, .. } => *len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.repr, Repr::Dense { .. })
    }

    pub fn contains(&self, p: PkgId) -> bool {
        match &self.repr {
            Repr::Sparse(v) => v.binary_search(&p.0).is_ok(),
            Repr::Dense { words, .. } => words.get(p.index() / 64).is_some_and(|w| w >> (p.0 % 64) & 1 == 1),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = PkgId> + '_ {
        let (sparse, dense) = match &self.repr {
            Repr::Sparse(v) => (Some(v.iter().map(|&x| PkgId(x))), None),
            Repr::Dense { words, .. } => (
                None,
                Some(words.iter().enumerate().flat_map(|(i, &w)| BitIter(w).map(move |b| PkgId((i * 64 + b) as u32)))),
            ),
        };
        sparse.into_iter().flatten().chain(dense.into_iter().flatten())
    }

    pub fn to_vec(&self) -> Vec<PkgId> {
        self.iter().collect()
    }

    pub fn intersects(&self, other: &PkgSet) -> bool {
        match (&self.repr, &other.repr) {
            (Repr::Dense { words: a, .. }, Repr::Dense { words: b, .. }) => a.iter().zip(b).any(|(x, y)| x & y != 0),
            (Repr::Sparse(v), _) => v.iter().any(|&x| other.contains(PkgId(x))),
            (_, Repr::Sparse(v)) => v.iter().any(|&x| self.contains(PkgId(x))),
        }
    }

    pub fn is_subset(&self, other: &PkgSet) -> bool {
        self.len() <= other.len() && self.iter().all(|p| other.contains(p))
    }

    /// Union of several sets over the same universe.
    pub fn union_of<'a>(universe: usize, sets: impl IntoIterator<Item = &'a PkgSet>) -> PkgSet {
        let sets: Vec<&PkgSet> = sets.into_iter().collect();
        let total: usize = sets.iter().map(|s| s.len()).sum();
        if wants_dense(total, universe) {
            let mut words = vec![0u64; universe.div_ceil(64)];
            for s in &sets {
                match &s.repr {
                    Repr::Dense { words: w, .. } => {
                        for (a, b) in words.iter_mut().zip(w) {
                            *a |= b;
                        }
                    }
                    Repr::Sparse(v) => {
                        for &x in v {
                            words[x as usize / 64] |= 1 << (x % 64);
                        }
                    }
                }
            }
            let len = words.iter().map(|w| w.count_ones() as usize).sum();
            if wants_dense(len, universe) {
                return PkgSet { universe, repr: Repr::Dense { words, len } };
            }
            let v = words.iter().enumerate().flat_map(|(i, &w)| BitIter(w).map(move |b| (i * 64 + b) as u32)).collect();
            return PkgSet { universe, repr: Repr::Sparse(v) };
        }
        let mut v: Vec<u32> = sets.iter().flat_map(|s| s.iter().map(|p| p.0)).collect();
        v.sort_unstable();
        v.dedup();
        PkgSet { universe, repr: Repr::Sparse(v) }
    }

    /// The members not in `other`.
    pub fn difference(&self, other: &PkgSet) -> PkgSet {
        Self::from_sorted(self.universe, self.iter().filter(|&p| !other.contains(p)).map(|p| p.0).collect())
    }
}

struct BitIter(u64);

impl Iterator for BitIter {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let b = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(b)
    }
}
