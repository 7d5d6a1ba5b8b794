use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use testmig_core::closure::ClosureIndex;
use testmig_core::encoder::{encode, Atom, EncodingKind, P2_DEFAULT_LIMIT};
use testmig_core::engine::{
    alternatives, build_problem, check_testing, explain_non_migration, solve_migration, CheckDocument, Document,
    EmitDocument, ExplainDocument, MigrateDocument, StatsDocument, StatsRow, TestingReport, UninstallableEntry,
};
use testmig_core::generate::{packages_files, random_universe, GenParams};
use testmig_core::sat::{emit_dimacs, DimacsKind, SatError, DEFAULT_MAXSAT_BUDGET, DEFAULT_SAT_BUDGET};
use testmig_core::{
    build_universe, parse_packages_stream, Budget, EngineError, MigrationRequest, Mode, PkgId, PolicyRules,
    ResolvedPolicy, SolverChoice, Universe,
};

use crate::{
    EmitArgs, EncodingArg, EncodingOptions, ExplainArgs, Format, GenerateArgs, InputArgs, KindArg, MigrateArgs,
    ModeArg, StatsArgs,
};

/// A failed command and its exit status.
#[derive(Debug)]
pub enum Failure {
    Input(String),
    Unsolvable(String),
    Timeout,
    Violations,
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Unsolvable(_) => 2,
            Failure::Timeout => 3,
            Failure::Violations => 4,
        }
    }

    pub fn message(&self) -> Option<String> {
        match self {
            Failure::Input(m) | Failure::Unsolvable(m) => Some(m.clone()),
            Failure::Timeout => Some("the solver ran out of time".to_owned()),
            Failure::Violations => None,
        }
    }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Unsolvable => Failure::Unsolvable(e.to_string()),
            EngineError::Timeout | EngineError::Sat(SatError::Timeout) => Failure::Timeout,
            EngineError::Repo(ref r) if matches!(r, testmig_core::repo::RepoError::Timeout) => Failure::Timeout,
            other => Failure::Input(other.to_string()),
        }
    }
}

struct Loaded {
    universe: Universe,
    policy: ResolvedPolicy,
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load(input: &InputArgs) -> Result<Loaded, Failure> {
    let parse = |path: &Path| {
        parse_packages_stream(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
    };
    let testing = parse(&input.testing)?;
    let unstable = parse(&input.unstable)?;
    let universe = build_universe(&testing, &unstable).map_err(|e| Failure::Input(e.to_string()))?;
    let policy = match &input.policy {
        None => ResolvedPolicy::empty(),
        Some(path) => {
            let text = String::from_utf8(read(path)?)
                .map_err(|_| Failure::Input(format!("{}: not valid UTF-8", path.display())))?;
            let fail = |e: testmig_core::policy::PolicyError| Failure::Input(format!("{}: {e}", path.display()));
            PolicyRules::parse(&text).map_err(fail)?.resolve(&universe).map_err(fail)?
        }
    };
    Ok(Loaded { universe, policy })
}

fn budget(input: &InputArgs, default: Budget) -> Budget {
    input.timeout.map(Budget::seconds).unwrap_or(default)
}

fn encoding_kind(opts: &EncodingOptions) -> Result<EncodingKind, Failure> {
    Ok(match opts.encoding {
        EncodingArg::P1 => EncodingKind::P1,
        EncodingArg::P3 => EncodingKind::P3,
        EncodingArg::P4 => EncodingKind::P4,
        EncodingArg::P5 => EncodingKind::P5Pruned,
        EncodingArg::P5Strict => EncodingKind::P5Strict,
        EncodingArg::P2Oracle if opts.test_oracle => EncodingKind::P2,
        EncodingArg::P2Oracle => {
            return Err(Failure::Input("the p2-oracle encoding requires --test-oracle".to_owned()));
        }
    })
}

/// Close matches for an unknown NAME/VERSION, nearest first.
fn suggestions(u: &Universe, spec: &str) -> Vec<String> {
    let name = spec.split('/').next().unwrap_or(spec);
    let mut scored: Vec<(usize, String)> = u
        .ids()
        .map(|p| {
            let shown = u.display(p);
            let d = if u.name(p) == name { 0 } else { strsim::levenshtein(spec, &shown) };
            (d, shown)
        })
        .filter(|(d, _)| *d <= 3)
        .collect();
    scored.sort();
    scored.dedup();
    scored.into_iter().take(5).map(|(_, s)| s).collect()
}

fn resolve_package(u: &Universe, spec: &str) -> Result<PkgId, Failure> {
    if let Some(p) = u.lookup(spec) {
        return Ok(p);
    }
    let mut msg = format!("unknown package {spec:?}");
    let near = suggestions(u, spec);
    if !near.is_empty() {
        write!(msg, "; did you mean: {}", near.join(", ")).unwrap();
    }
    Err(Failure::Input(msg))
}

fn mode_for(u: &Universe, mode: ModeArg, target: Option<&str>) -> Result<Mode, Failure> {
    match (mode, target) {
        (ModeArg::Max, None) => Ok(Mode::Max),
        (ModeArg::Min, None) => Ok(Mode::MinNonTrivial),
        (ModeArg::Target, Some(spec)) => Ok(Mode::Target(resolve_package(u, spec)?)),
        (ModeArg::Target, None) => Err(Failure::Input("--mode target needs --target NAME/VER".to_owned())),
        (_, Some(_)) => Err(Failure::Input("--target is only valid with --mode target".to_owned())),
    }
}

fn print(doc: &Document, format: Format) {
    match format {
        Format::Text => print!("{}", doc.to_text()),
        Format::Structured => print!("{}", doc.to_json()),
    }
}

fn issues(report: &TestingReport, u: &Universe) -> Vec<String> {
    let mut out: Vec<String> = report
        .duplicates
        .iter()
        .map(|&(a, b)| format!("testing holds both {} and {}", u.display(a), u.display(b)))
        .collect();
    out.extend(report.uninstallable.iter().map(|e| format!("{} is not installable in testing", u.display(e.subject))));
    out
}

pub fn migrate(args: &MigrateArgs) -> Result<(), Failure> {
    let Loaded { universe: u, policy } = load(&args.input)?;
    let mode = mode_for(&u, args.mode, args.target.as_deref())?;
    let encoding = encoding_kind(&args.encoding)?;
    let mut req = MigrationRequest::new(mode);
    req.encoding = encoding;
    req.policy = policy;
    req.budget = budget(&args.input, DEFAULT_MAXSAT_BUDGET);
    if let Some(cmd) = &args.solver {
        let argv: Vec<String> = cmd.split_whitespace().map(str::to_owned).collect();
        if argv.is_empty() {
            return Err(Failure::Input("--solver is empty".to_owned()));
        }
        req.solver = SolverChoice::External(argv);
    }

    let testing_issues = issues(&check_testing(&u, budget(&args.input, DEFAULT_SAT_BUDGET))?, &u);
    for issue in &testing_issues {
        eprintln!("testmig: warning: {issue}");
    }

    let (result, rest) = match args.all_deltas {
        None => (solve_migration(&req, &u)?, Vec::new()),
        Some(k) => {
            let mut found = alternatives(&req, &u, k)?;
            let rest = found.split_off(1);
            (found.remove(0), rest)
        }
    };
    let mut doc = MigrateDocument::new(&result, &u, mode, encoding);
    doc.alternatives = rest.iter().map(|r| (r.delta, r.t_prime.iter().map(|&p| u.display(p)).collect())).collect();
    if args.input.format == Format::Structured {
        doc.testing_issues = testing_issues;
    }
    if let (Some(path), Some(hints)) = (&args.hints, &doc.hints) {
        fs::write(path, hints).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    }
    let verified = doc.verified;
    print(&Document::Migrate(doc), args.input.format);
    if !verified {
        return Err(Failure::Input("the computed migration failed verification".to_owned()));
    }
    Ok(())
}

pub fn explain(args: &ExplainArgs) -> Result<(), Failure> {
    let Loaded { universe: u, policy } = load(&args.input)?;
    let p = resolve_package(&u, &args.package)?;
    if u.in_testing(p) {
        return Err(Failure::Input(format!("{} is already in testing", u.display(p))));
    }
    let mut req = MigrationRequest::new(Mode::Target(p));
    req.encoding = encoding_kind(&args.encoding)?;
    req.policy = policy;
    req.budget = budget(&args.input, DEFAULT_MAXSAT_BUDGET);
    let doc = match explain_non_migration(p, &u, &req) {
        Ok(e) => ExplainDocument {
            package: u.display(p),
            migrates: false,
            delta: None,
            explanation: e.render(&u, &req.policy),
        },
        Err(EngineError::ActuallySolvable { delta }) => {
            ExplainDocument { package: u.display(p), migrates: true, delta: Some(delta), explanation: Vec::new() }
        }
        Err(e) => return Err(e.into()),
    };
    print(&Document::Explain(doc), args.input.format);
    Ok(())
}

pub fn check(args: &InputArgs) -> Result<(), Failure> {
    let Loaded { universe: u, policy } = load(args)?;
    let report = check_testing(&u, budget(args, DEFAULT_SAT_BUDGET))?;
    let doc = CheckDocument {
        clean: report.is_clean(),
        duplicates: report.duplicates.iter().map(|&(a, b)| (u.display(a), u.display(b))).collect(),
        uninstallable: report
            .uninstallable
            .iter()
            .map(|e| UninstallableEntry { package: u.display(e.subject), explanation: e.render(&u, &policy) })
            .collect(),
    };
    let clean = doc.clean;
    print(&Document::Check(doc), args.format);
    if clean {
        Ok(())
    } else {
        Err(Failure::Violations)
    }
}

pub fn stats(args: &StatsArgs) -> Result<(), Failure> {
    let Loaded { universe: u, policy } = load(&args.input)?;
    let idx = ClosureIndex::new(&u);
    let s = idx.stats();
    let mut kinds = Vec::new();
    if u.conflict_pairs().is_empty() {
        kinds.push(EncodingKind::P1);
    }
    kinds.extend([EncodingKind::P3, EncodingKind::P4, EncodingKind::P5Strict, EncodingKind::P5Pruned]);
    let encodings = kinds
        .into_iter()
        .map(|k| {
            let e = encode(k, &idx, &policy, P2_DEFAULT_LIMIT).map_err(|e| Failure::Input(e.to_string()))?;
            Ok(StatsRow::from(&e.stats()))
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    let doc = StatsDocument {
        packages: s.packages,
        testing: u.testing().len(),
        unstable: u.unstable().len(),
        conflicts: u.conflict_pairs().len(),
        easy: s.easy,
        closure_min: s.closure_min,
        closure_median: s.closure_median,
        closure_max: s.closure_max,
        closure_total: s.closure_total,
        connecting_total: s.connecting_total,
        with_relevant_conflicts: s.with_relevant_conflicts,
        encodings,
        top_closures: idx.top_closures(args.top).into_iter().map(|(p, n)| (u.display(p), n)).collect(),
    };
    print(&Document::Stats(doc), args.input.format);
    Ok(())
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn emit(args: &EmitArgs) -> Result<(), Failure> {
    let Loaded { universe: u, policy } = load(&args.input)?;
    let encoding = encoding_kind(&args.encoding)?;
    if args.kind == KindArg::Cnf && args.mode.is_some() {
        return Err(Failure::Input(
            "cnf output cannot carry the soft clauses of an objective; use --kind wcnf".to_owned(),
        ));
    }
    let idx = ClosureIndex::new(&u);
    let problem = match args.mode {
        None if args.target.is_some() => {
            return Err(Failure::Input("--target is only valid with --mode target".to_owned()));
        }
        None => encode(encoding, &idx, &policy, P2_DEFAULT_LIMIT).map_err(|e| Failure::Input(e.to_string()))?,
        Some(m) => {
            let mut req = MigrationRequest::new(mode_for(&u, m, args.target.as_deref())?);
            req.encoding = encoding;
            req.policy = policy;
            build_problem(&req, &idx)?
        }
    };
    let instance = problem.to_instance();
    let (kind, ext) = match args.kind {
        KindArg::Cnf => (DimacsKind::Cnf, ".cnf"),
        KindArg::Wcnf => (DimacsKind::Wcnf, ".wcnf"),
    };
    let mut map = String::new();
    for var in 1..=problem.atoms.len() as u32 {
        match problem.atoms.atom(var) {
            Some(Atom::Pkg(p)) => writeln!(map, "{var} pkg {}", u.display(p)).unwrap(),
            Some(Atom::Inst { member, context }) => {
                writeln!(map, "{var} inst {} @ {}", u.display(member), u.display(context)).unwrap()
            }
            None => unreachable!("every variable below the atom count is an atom"),
        }
    }
    let instance_path = with_suffix(&args.out, ext);
    let map_path = with_suffix(&args.out, ".map");
    let write =
        |path: &Path, text: &str| fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())));
    write(&instance_path, &emit_dimacs(&instance, kind))?;
    write(&map_path, &map)?;
    let doc = EmitDocument {
        encoding: encoding.name().to_owned(),
        instance: instance_path.display().to_string(),
        map: map_path.display().to_string(),
        variables: instance.num_vars as usize,
        hard: instance.hard.len(),
        soft: instance.soft.len(),
    };
    print(&Document::Emit(doc), args.input.format);
    Ok(())
}

pub fn generate(args: &GenerateArgs) -> Result<(), Failure> {
    let u = random_universe(&GenParams::small(args.packages), &mut ChaCha8Rng::seed_from_u64(args.seed));
    let (testing, unstable) = packages_files(&u);
    let io = |e: std::io::Error| Failure::Input(format!("{}: {e}", args.out_dir.display()));
    fs::create_dir_all(&args.out_dir).map_err(io)?;
    fs::write(args.out_dir.join("testing"), testing).map_err(io)?;
    fs::write(args.out_dir.join("unstable"), unstable).map_err(io)?;
    println!("wrote {} packages to {}", u.len(), args.out_dir.display());
    Ok(())
}
