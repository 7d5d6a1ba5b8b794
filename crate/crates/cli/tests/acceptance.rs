//! Acceptance suite: one pass/fail line per criterion. Exits non-zero when
//! any criterion fails.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use testmig_core::closure::ClosureIndex;
use testmig_core::encoder::{encode, soft_max, EncodedProblem, EncodingKind, Family};
use testmig_core::engine::{solve_migration, Document, EngineError, MigrationRequest, Mode};
use testmig_core::generate::{random_policy, random_universe, GenParams};
use testmig_core::policy::ResolvedPolicy;
use testmig_core::repo::{admissible_migrations, is_admissible, PkgId, Universe};
use testmig_core::sat::{
    brute_force_solve, emit_dimacs, extract_mus, parse_dimacs, projected_models, solve_pmaxsat, solve_sat, verify_mus,
    Budget, Clause, DimacsKind, Instance, Lit, SolveResult,
};
use testmig_core::version::{compare_versions, Version};

struct Report {
    failed: usize,
}

impl Report {
    fn record(&mut self, name: &str, started: Instant, outcome: Result<String, String>) {
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] {name}: {detail} ({secs:.1} s)"),
            Err(detail) => {
                self.failed += 1;
                println!("[FAIL] {name}: {detail} ({secs:.1} s)");
            }
        }
    }
}

const UNIVERSES: u64 = 1200;

fn sweep(seed: u64) -> (Universe, ResolvedPolicy) {
    let mut p = GenParams::small(1 + (seed % 10) as usize);
    p.dependency = [0.05, 0.15, 0.3][(seed / 10 % 3) as usize];
    p.conflict = [0.0, 0.05, 0.15, 0.3][(seed / 30 % 4) as usize];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = random_universe(&p, &mut rng);
    let chance = if seed.is_multiple_of(2) { 0.0 } else { 0.25 };
    let policy = random_policy(&u, chance, &mut rng).resolve(&u).unwrap();
    (u, policy)
}

fn projections(e: &EncodedProblem) -> BTreeSet<BTreeSet<PkgId>> {
    let vars: Vec<u32> = (1..=e.atoms.package_atoms() as u32).collect();
    projected_models(&e.to_instance(), &vars, Budget::UNLIMITED)
        .unwrap()
        .into_iter()
        .map(|m| m.into_iter().map(|v| PkgId(v - 1)).collect())
        .collect()
}

fn changes(u: &Universe, t: &BTreeSet<PkgId>) -> usize {
    u.candidates().filter(|&p| t.contains(&p) != u.in_testing(p)).count()
}

const REFINED: [EncodingKind; 5] =
    [EncodingKind::P2, EncodingKind::P3, EncodingKind::P4, EncodingKind::P5Strict, EncodingKind::P5Pruned];

fn encoding_equivalence() -> Result<String, String> {
    let mut mismatches = Vec::new();
    let mut largest = 0;
    for seed in 0..UNIVERSES {
        let (u, policy) = sweep(seed);
        largest = largest.max(u.len());
        let expected: BTreeSet<BTreeSet<PkgId>> = admissible_migrations(&u, &policy).unwrap().into_iter().collect();
        let idx = ClosureIndex::new(&u);
        for kind in REFINED {
            let e = encode(kind, &idx, &policy, 10).map_err(|e| format!("seed {seed} {kind}: {e}"))?;
            if projections(&e) != expected {
                mismatches.push(format!("seed {seed} {kind}"));
            }
        }
    }
    if largest > 10 {
        return Err(format!("generated a universe of {largest} packages"));
    }
    if mismatches.is_empty() {
        Ok(format!("{UNIVERSES} universes of at most {largest} packages, 0 mismatches"))
    } else {
        Err(format!("{} mismatches, first {}", mismatches.len(), mismatches[0]))
    }
}

fn conflict_free_collapse() -> Result<String, String> {
    let mut checked = 0;
    for seed in 0..UNIVERSES {
        let (u, policy) = sweep(seed);
        if !u.conflict_pairs().is_empty() {
            continue;
        }
        checked += 1;
        let idx = ClosureIndex::new(&u);
        let p1 = encode(EncodingKind::P1, &idx, &policy, 10).map_err(|e| format!("seed {seed}: {e}"))?;
        let pruned = encode(EncodingKind::P5Pruned, &idx, &policy, 10).unwrap();
        if pruned.atoms.installation_atoms() != 0 {
            return Err(format!("seed {seed}: pruned encoding has installation atoms"));
        }
        let reference = projections(&p1);
        for kind in REFINED {
            if projections(&encode(kind, &idx, &policy, 10).unwrap()) != reference {
                return Err(format!("seed {seed}: {kind} differs from p1"));
            }
        }
    }
    if checked < 100 {
        return Err(format!("only {checked} conflict-free universes"));
    }
    Ok(format!("{checked} conflict-free universes, 0 mismatches"))
}

fn optimality() -> Result<String, String> {
    let mut solves = 0;
    for seed in 0..UNIVERSES {
        let (u, policy) = sweep(seed);
        let admissible = admissible_migrations(&u, &policy).unwrap();
        let mut req = MigrationRequest::new(Mode::Max);
        req.policy = policy;

        let mut check = |mode: Mode, expected: Option<usize>| -> Result<(), String> {
            req.mode = mode;
            solves += 1;
            let got = match solve_migration(&req, &u) {
                Ok(r) => {
                    if !r.verified() {
                        return Err(format!("seed {seed} {mode:?}: result not admissible"));
                    }
                    if let Mode::Target(p) = mode {
                        if !r.t_prime.contains(&p) {
                            return Err(format!("seed {seed}: target missing"));
                        }
                    }
                    Some(r.delta)
                }
                Err(EngineError::Unsolvable) => None,
                // No candidates at all: the non-trivial objective is undefined.
                Err(EngineError::Encode(_)) if mode == Mode::MinNonTrivial && u.candidates().count() == 0 => None,
                Err(e) => return Err(format!("seed {seed} {mode:?}: {e}")),
            };
            if got != expected {
                return Err(format!("seed {seed} {mode:?}: got {got:?}, brute force {expected:?}"));
            }
            Ok(())
        };

        check(Mode::Max, admissible.iter().map(|t| changes(&u, t)).max())?;
        check(Mode::MinNonTrivial, admissible.iter().map(|t| changes(&u, t)).filter(|&d| d > 0).min())?;
        for p in u.candidates().filter(|&p| u.in_unstable(p)) {
            check(Mode::Target(p), admissible.iter().filter(|t| t.contains(&p)).map(|t| changes(&u, t)).min())?;
        }
    }
    Ok(format!("{solves} solves over {UNIVERSES} universes, all equal to brute force"))
}

fn size_monotonicity() -> Result<String, String> {
    for seed in 0..UNIVERSES {
        let (u, policy) = sweep(seed);
        let idx = ClosureIndex::new(&u);
        let stats: Vec<_> = REFINED.iter().map(|&k| encode(k, &idx, &policy, 10).unwrap().stats()).collect();
        for w in stats.windows(2) {
            if w[1].atoms > w[0].atoms || w[1].hard_clauses > w[0].hard_clauses {
                return Err(format!("seed {seed}: {} larger than {}", w[1].kind, w[0].kind));
            }
        }
    }

    let (mut eligible, mut smaller) = (0, 0);
    for seed in 0..1000 {
        let u = random_universe(&GenParams::small(2 + (seed % 9) as usize), &mut ChaCha8Rng::seed_from_u64(seed));
        let idx = ClosureIndex::new(&u);
        if u.ids().all(|p| idx.is_easy(p)) {
            continue;
        }
        eligible += 1;
        let p3 = encode(EncodingKind::P3, &idx, &Default::default(), 10).unwrap().stats();
        let p5 = encode(EncodingKind::P5Pruned, &idx, &Default::default(), 10).unwrap().stats();
        if p5.atoms < p3.atoms && p5.hard_clauses < p3.hard_clauses {
            smaller += 1;
        }
    }
    let share = smaller as f64 / eligible.max(1) as f64;
    let detail = format!(
        "ordering holds on {UNIVERSES} universes; p5 strictly below p3 on {smaller}/{eligible} universes with a reachable conflict ({:.0}%)",
        share * 100.0
    );
    if eligible > 0 && share >= 0.5 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn closed_form_counts() -> Result<String, String> {
    let mut fixtures = 0;
    for n in 1..=8 {
        for seed in 0..25 {
            let mut p = GenParams::small(n);
            p.new_version = 0.0;
            let u = random_universe(&p, &mut ChaCha8Rng::seed_from_u64(1000 * n as u64 + seed));
            if u.len() != n {
                return Err(format!("fixture n={n} seed {seed} has {} packages", u.len()));
            }
            let idx = ClosureIndex::new(&u);
            let e = encode(EncodingKind::P2, &idx, &Default::default(), 10).unwrap();
            if e.atoms.len() != n + n * n {
                return Err(format!("n={n}: {} atoms", e.atoms.len()));
            }
            let mut raw = 0;
            let mut kept = 0;
            for _context in u.ids() {
                for p in u.ids() {
                    for d in u.deps(p) {
                        raw += 1;
                        if !d.contains(&p) {
                            kept += 1;
                        }
                    }
                }
            }
            let generated = e.generated.get(&Family::Dependency).copied().unwrap_or(0);
            let emitted = e.stats().family(Family::Dependency);
            if (generated, emitted) != (raw, kept) {
                return Err(format!("n={n} seed {seed}: ({generated}, {emitted}) vs ({raw}, {kept})"));
            }
            fixtures += 1;
        }
    }
    Ok(format!("{fixtures} fixtures with n <= 8 match n + n^2 atoms and the summed dependency clauses"))
}

fn random_instance(rng: &mut ChaCha8Rng, soft: bool) -> Instance {
    let vars = rng.random_range(1..=16u32);
    let clause = |rng: &mut ChaCha8Rng| -> Clause {
        let len = rng.random_range(1..=3);
        (0..len).map(|_| Lit::new(rng.random_range(1..=vars), rng.random_bool(0.5))).collect()
    };
    let hard = (0..rng.random_range(0..=60)).map(|_| clause(rng)).collect();
    let soft = if soft { (0..rng.random_range(0..=20)).map(|_| clause(rng)).collect() } else { Vec::new() };
    Instance { num_vars: vars, hard, soft }
}

fn cross_check_one(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inst = random_instance(&mut rng, seed % 2 == 1);
    let reference = brute_force_solve(&inst).unwrap();
    let sat = solve_sat(&Instance { soft: Vec::new(), ..inst.clone() }, Budget::UNLIMITED).unwrap();
    if sat.is_unsat() != reference.is_unsat() {
        return Err(format!("instance {seed}: satisfiability differs"));
    }
    if let Some(a) = sat.assignment() {
        if inst.first_violated(a).is_some() {
            return Err(format!("instance {seed}: invalid model"));
        }
    }
    if !inst.soft.is_empty() {
        let best = |r: &SolveResult| r.assignment().map(|a| inst.soft_satisfied(a));
        let got = solve_pmaxsat(&inst, Budget::UNLIMITED).unwrap();
        if best(&got) != best(&reference) {
            return Err(format!("instance {seed}: optimum {:?} vs {:?}", best(&got), best(&reference)));
        }
    }
    Ok(())
}

fn solver_cross_check() -> Result<String, String> {
    const N: u64 = 10_000;
    let threads = std::thread::available_parallelism().map_or(4, |n| n.get()) as u64;
    let results: Vec<Result<(), String>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..threads)
            .map(|t| s.spawn(move || (t..N).step_by(threads as usize).try_for_each(cross_check_one)))
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    results.into_iter().collect::<Result<(), String>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut checked = 0;
    while checked < 500 {
        let vars = rng.random_range(2..=10u32);
        let clauses: Vec<Clause> = (0..rng.random_range(4..=40))
            .map(|_| {
                (0..rng.random_range(1..=3))
                    .map(|_| Lit::new(rng.random_range(1..=vars), rng.random_bool(0.5)))
                    .collect()
            })
            .collect();
        let inst = Instance::with_hard(vars, clauses.clone());
        if !brute_force_solve(&inst).unwrap().is_unsat() {
            continue;
        }
        checked += 1;
        let mus = extract_mus(vars, &clauses, Budget::UNLIMITED).unwrap();
        let subset = |skip: Option<usize>| {
            let hard = mus.core.iter().filter(|&&i| Some(i) != skip).map(|&i| clauses[i].clone()).collect();
            brute_force_solve(&Instance::with_hard(vars, hard)).unwrap().is_unsat()
        };
        if !subset(None) || mus.core.iter().any(|&i| subset(Some(i))) {
            return Err(format!("MUS {checked} is not minimal unsatisfiable"));
        }
        if !verify_mus(vars, &clauses, &mus, Budget::UNLIMITED).unwrap() {
            return Err(format!("MUS {checked} rejected by its own verifier"));
        }
    }
    Ok(format!("{N} instances agree with brute force; {checked} MUS results minimal"))
}

/// Independent reading of the dpkg ordering: epoch numerically, then upstream
/// and revision with alternating non-digit and digit runs, where `~` sorts
/// before everything and letters before other characters.
fn dpkg_order(a: &str, b: &str) -> Ordering {
    fn split(v: &str) -> (u64, &str, &str) {
        let (epoch, rest) = match v.find(':') {
            Some(i) => (v[..i].parse().unwrap(), &v[i + 1..]),
            None => (0, v),
        };
        match rest.rfind('-') {
            Some(i) => (epoch, &rest[..i], &rest[i + 1..]),
            None => (epoch, rest, ""),
        }
    }
    fn weight(c: Option<u8>) -> i32 {
        match c {
            Some(b'~') => -1,
            None => 0,
            Some(c) if c.is_ascii_alphabetic() => c as i32,
            Some(c) => c as i32 + 256,
        }
    }
    fn part(mut a: &[u8], mut b: &[u8]) -> Ordering {
        while !a.is_empty() || !b.is_empty() {
            let na = a.iter().take_while(|c| !c.is_ascii_digit()).count();
            let nb = b.iter().take_while(|c| !c.is_ascii_digit()).count();
            for i in 0..na.max(nb) {
                let o = weight(a[..na].get(i).copied()).cmp(&weight(b[..nb].get(i).copied()));
                if o != Ordering::Equal {
                    return o;
                }
            }
            a = &a[na..];
            b = &b[nb..];
            let da = a.iter().take_while(|c| c.is_ascii_digit()).count();
            let db = b.iter().take_while(|c| c.is_ascii_digit()).count();
            let num = |s: &[u8]| s.iter().fold(0u128, |n, &c| n * 10 + (c - b'0') as u128);
            let o = num(&a[..da]).cmp(&num(&b[..db]));
            if o != Ordering::Equal {
                return o;
            }
            a = &a[da..];
            b = &b[db..];
        }
        Ordering::Equal
    }
    let (ea, ua, ra) = split(a);
    let (eb, ub, rb) = split(b);
    ea.cmp(&eb).then_with(|| part(ua.as_bytes(), ub.as_bytes())).then_with(|| part(ra.as_bytes(), rb.as_bytes()))
}

const VERSIONS: [&str; 30] = [
    "0.9",
    "0.9a",
    "0.9a1",
    "0.10",
    "1.0~~",
    "1.0~~a",
    "1.0~",
    "1.0~beta",
    "1.0~rc1",
    "1.0~rc2",
    "1.0",
    "1.0-1",
    "1.0-1ubuntu1",
    "1.0-2",
    "1.0a",
    "1.0+b1",
    "1.0.1",
    "1.1",
    "1.2~",
    "1.2",
    "1.10",
    "2",
    "10",
    "1:0.1",
    "1:0.1-0.1",
    "1:1.0",
    "1:1.0+dfsg",
    "2:0",
    "2:0.0",
    "10:0",
];

fn version_table() -> Result<String, String> {
    for w in VERSIONS.windows(2) {
        if dpkg_order(w[0], w[1]) != Ordering::Less {
            return Err(format!("reference ordering disagrees with the table at {} < {}", w[0], w[1]));
        }
    }
    let parsed: Vec<Version> =
        VERSIONS.iter().map(|v| Version::parse(v).map_err(|e| format!("{v}: {e}"))).collect::<Result<_, _>>()?;
    for (i, a) in parsed.iter().enumerate() {
        for (j, b) in parsed.iter().enumerate() {
            let expected = dpkg_order(VERSIONS[i], VERSIONS[j]);
            if compare_versions(VERSIONS[i], VERSIONS[j]) != Ok(expected) || a.cmp(b) != expected {
                return Err(format!("{} vs {}: expected {expected:?}", VERSIONS[i], VERSIONS[j]));
            }
        }
    }
    let mut shuffled = parsed.clone();
    shuffled.reverse();
    shuffled.sort();
    if shuffled != parsed {
        return Err("sorting does not restore the table".to_owned());
    }
    Ok(format!("{} versions, {} ordered pairs", VERSIONS.len(), VERSIONS.len() * VERSIONS.len()))
}

fn round_trip(inst: &Instance) -> Result<(), String> {
    let text = emit_dimacs(inst, DimacsKind::Wcnf);
    let header = format!("p wcnf {} {} {}", inst.num_vars, inst.hard.len() + inst.soft.len(), inst.soft.len() + 1);
    if text.lines().next() != Some(header.as_str()) {
        return Err(format!("bad header {:?}", text.lines().next()));
    }
    let (back, kind) = parse_dimacs(&text).map_err(|e| e.to_string())?;
    if kind != DimacsKind::Wcnf || back != *inst {
        return Err("wcnf round trip changed the instance".to_owned());
    }
    if inst.soft.is_empty() {
        let (back, _) = parse_dimacs(&emit_dimacs(inst, DimacsKind::Cnf)).map_err(|e| e.to_string())?;
        if back != *inst {
            return Err("cnf round trip changed the instance".to_owned());
        }
    }
    Ok(())
}

fn dimacs_round_trip() -> Result<String, String> {
    let mut count = 0;
    for seed in 0..10_000 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng, seed % 2 == 1);
        round_trip(&inst).map_err(|e| format!("instance {seed}: {e}"))?;
        count += 1;
    }
    for seed in 0..UNIVERSES {
        let (u, policy) = sweep(seed);
        let idx = ClosureIndex::new(&u);
        for kind in REFINED {
            let mut e = encode(kind, &idx, &policy, 10).unwrap();
            e.soft = soft_max(&u);
            round_trip(&e.to_instance()).map_err(|err| format!("seed {seed} {kind}: {err}"))?;
            count += 1;
        }
    }
    Ok(format!("{count} instances survive emit and parse"))
}

fn end_to_end() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (t, u) = (dir.path().join("testing"), dir.path().join("unstable"));
    std::fs::write(&t, "Package: a\nVersion: 1\n").unwrap();
    std::fs::write(&u, "Package: a\nVersion: 2\n").unwrap();
    let started = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_testmig"))
        .args(["migrate", "--format", "structured", "--testing"])
        .arg(&t)
        .arg("--unstable")
        .arg(&u)
        .output()
        .map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    if out.status.code() != Some(0) {
        return Err(format!("exit status {:?}", out.status.code()));
    }
    let Ok(Document::Migrate(d)) = Document::parse(&String::from_utf8_lossy(&out.stdout)) else {
        return Err("unreadable report".to_owned());
    };
    if d.delta != 2 || d.hints.as_deref() != Some("easy a/2\n") || !d.verified {
        return Err(format!("delta {}, hints {:?}, verified {}", d.delta, d.hints, d.verified));
    }
    let universe = testmig_core::build_universe(
        &testmig_core::parse_packages_stream(b"Package: a\nVersion: 1\n").unwrap(),
        &testmig_core::parse_packages_stream(b"Package: a\nVersion: 2\n").unwrap(),
    )
    .unwrap();
    let t_prime: BTreeSet<PkgId> = d.t_prime.iter().map(|s| universe.lookup(s).unwrap()).collect();
    if !is_admissible(&t_prime, &universe, &ResolvedPolicy::empty()).unwrap().is_ok() {
        return Err("reported testing is not admissible".to_owned());
    }
    if elapsed >= Duration::from_secs(1) {
        return Err(format!("took {elapsed:?}"));
    }
    Ok(format!("delta 2, hints \"easy a/2\", admissible, exit 0 in {} ms", elapsed.as_millis()))
}

fn main() {
    let mut report = Report { failed: 0 };
    type Criterion = (&'static str, fn() -> Result<String, String>);
    let criteria: [Criterion; 9] = [
        ("encoding equivalence", encoding_equivalence),
        ("conflict-free collapse", conflict_free_collapse),
        ("optimality", optimality),
        ("size monotonicity", size_monotonicity),
        ("closed-form all-pairs counts", closed_form_counts),
        ("solver cross-check", solver_cross_check),
        ("version order table", version_table),
        ("DIMACS round trip", dimacs_round_trip),
        ("end-to-end upgrade fixture", end_to_end),
    ];
    for (name, check) in criteria {
        let started = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".to_owned()));
        report.record(name, started, outcome);
    }
    println!("{} of {} criteria passed", criteria.len() - report.failed, criteria.len());
    if report.failed > 0 {
        std::process::exit(1);
    }
}
