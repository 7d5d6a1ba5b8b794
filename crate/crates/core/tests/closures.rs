use std::collections::{BTreeMap, BTreeSet, VecDeque};

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use testmig_core::closure::ClosureIndex;
use testmig_core::generate::{random_universe, GenParams};
use testmig_core::repo::{PkgId, Universe, UniverseBuilder};

fn bfs(u: &Universe, p: PkgId, allowed: impl Fn(PkgId) -> bool) -> BTreeSet<PkgId> {
    let mut seen = BTreeSet::from([p]);
    let mut queue = VecDeque::from([p]);
    while let Some(q) = queue.pop_front() {
        for &s in u.deps(q).iter().flatten() {
            if allowed(s) && seen.insert(s) {
                queue.push_back(s);
            }
        }
    }
    seen
}

fn universe(seed: u64, n: usize, conflict: f64) -> Universe {
    let p = GenParams { conflict, dependency: 0.12, ..GenParams::small(n) };
    random_universe(&p, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[test]
fn index_matches_definitions() {
    for seed in 0..200 {
        let u = universe(seed, 4 + (seed % 30) as usize, 0.03);
        let idx = ClosureIndex::new(&u);
        let endpoints: BTreeSet<PkgId> = u.conflict_pairs().iter().flat_map(|&(a, b)| [a, b]).collect();
        let closures: BTreeMap<PkgId, BTreeSet<PkgId>> = u.ids().map(|p| (p, bfs(&u, p, |_| true))).collect();
        let easy: BTreeSet<PkgId> = u.ids().filter(|p| closures[p].is_disjoint(&endpoints)).collect();
        assert_eq!(idx.easy().to_vec(), easy.iter().copied().collect::<Vec<_>>());
        for p in u.ids() {
            assert_eq!(idx.closure(p).to_vec(), closures[&p].iter().copied().collect::<Vec<_>>());

            let hard = if easy.contains(&p) { BTreeSet::from([p]) } else { bfs(&u, p, |q| !easy.contains(&q)) };
            assert_eq!(idx.hard_closure(p).to_vec(), hard.iter().copied().collect::<Vec<_>>(), "seed {seed}");

            let cl = &closures[&p];
            let relevant: BTreeSet<(PkgId, PkgId)> =
                u.conflict_pairs().iter().copied().filter(|(a, b)| cl.contains(a) && cl.contains(b)).collect();
            assert_eq!(idx.relevant_conflicts(p).iter().copied().collect::<BTreeSet<_>>(), relevant);

            let ends: BTreeSet<PkgId> = relevant.iter().flat_map(|&(a, b)| [a, b]).collect();
            let mut connecting: BTreeSet<PkgId> =
                cl.iter().copied().filter(|q| !closures[q].is_disjoint(&ends)).collect();
            connecting.insert(p);
            assert_eq!(idx.connecting(p).to_vec(), connecting.iter().copied().collect::<Vec<_>>());
        }
    }
}

#[test]
fn stats_report_figures() {
    let mut b = UniverseBuilder::new();
    let p = b.add("p", "1", true, false).unwrap();
    let q = b.add("q", "1", true, false).unwrap();
    let r = b.add("r", "1", true, false).unwrap();
    b.depends(p, &[q]).depends(p, &[r]).conflict(q, r);
    let u = b.build().unwrap();
    let s = ClosureIndex::new(&u).stats();
    assert_eq!((s.packages, s.easy, s.closure_max, s.closure_total), (3, 0, 3, 5));
    assert_eq!(s.with_relevant_conflicts, 1);
    assert_eq!(s.connecting_total, 3 + 1 + 1);
}

fn rebuild_reversed(u: &Universe) -> Universe {
    let mut b = UniverseBuilder::new();
    let mut ids: Vec<PkgId> = u.ids().collect();
    ids.reverse();
    let mut handle = BTreeMap::new();
    for &p in &ids {
        let pkg = u.package(p);
        handle.insert(p, b.add(&pkg.name, pkg.version.as_str(), u.in_testing(p), u.in_unstable(p)).unwrap());
    }
    for &p in &ids {
        for d in u.deps(p).iter().rev() {
            let alts: Vec<usize> = d.iter().rev().map(|q| handle[q]).collect();
            b.depends(handle[&p], &alts);
        }
    }
    for &(a, c) in u.conflict_pairs().iter().rev() {
        b.conflict(handle[&c], handle[&a]);
    }
    b.build().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn containment_chain(seed in any::<u64>(), n in 1usize..40) {
        let u = universe(seed, n, 0.05);
        let idx = ClosureIndex::new(&u);
        for p in u.ids() {
            prop_assert!(idx.closure(p).contains(p));
            prop_assert!(idx.connecting(p).contains(p));
            prop_assert!(idx.connecting(p).is_subset(idx.hard_closure(p)));
            prop_assert!(idx.hard_closure(p).is_subset(idx.closure(p)));
            if idx.is_easy(p) {
                prop_assert!(idx.relevant_conflicts(p).is_empty());
            }
            for q in idx.closure(p).iter() {
                prop_assert!(idx.closure(q).is_subset(idx.closure(p)));
            }
        }
    }

    #[test]
    fn closing_again_changes_nothing(seed in any::<u64>(), n in 1usize..40) {
        let u = universe(seed, n, 0.05);
        let idx = ClosureIndex::new(&u);
        for p in u.ids() {
            let again: BTreeSet<PkgId> = idx.closure(p).iter().flat_map(|q| idx.closure(q).iter()).collect();
            prop_assert_eq!(again.into_iter().collect::<Vec<_>>(), idx.closure(p).to_vec());
        }
    }

    #[test]
    fn insertion_order_is_irrelevant(seed in any::<u64>(), n in 1usize..30) {
        let u = universe(seed, n, 0.08);
        let v = rebuild_reversed(&u);
        let (a, b) = (ClosureIndex::new(&u), ClosureIndex::new(&v));
        prop_assert_eq!(a.easy().to_vec(), b.easy().to_vec());
        for p in u.ids() {
            prop_assert_eq!(u.package(p), v.package(p));
            prop_assert_eq!(a.closure(p).to_vec(), b.closure(p).to_vec());
            prop_assert_eq!(a.relevant_conflicts(p), b.relevant_conflicts(p));
            prop_assert_eq!(a.connecting(p).to_vec(), b.connecting(p).to_vec());
        }
    }
}
