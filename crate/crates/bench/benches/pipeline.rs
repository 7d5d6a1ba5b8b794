use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use testmig_core::closure::ClosureIndex;
use testmig_core::encoder::{encode, EncodingKind};
use testmig_core::generate::{packages_files, random_universe, GenParams};
use testmig_core::repo::Universe;
use testmig_core::{build_universe, compare_versions, parse_packages_stream, MigrationRequest, Mode};

fn universe(packages: usize) -> Universe {
    let mut p = GenParams::small(packages);
    // Keep the expected degree roughly constant as the universe grows.
    p.dependency = 0.8 / packages as f64;
    p.conflict = 0.3 / packages as f64;
    random_universe(&p, &mut ChaCha8Rng::seed_from_u64(packages as u64))
}

fn parsing(c: &mut Criterion) {
    let (testing, unstable) = packages_files(&universe(2000));
    c.bench_function("parse and expand 2000 packages", |b| {
        b.iter(|| {
            let t = parse_packages_stream(testing.as_bytes()).unwrap();
            let u = parse_packages_stream(unstable.as_bytes()).unwrap();
            build_universe(black_box(&t), black_box(&u)).unwrap()
        })
    });
    let versions = ["1.0~rc1", "1.0", "1:0.9-3", "2.4.1+dfsg-2ubuntu1", "2.4.1~beta3-1"];
    c.bench_function("compare versions", |b| {
        b.iter(|| {
            for a in versions {
                for v in versions {
                    black_box(compare_versions(a, v).unwrap());
                }
            }
        })
    });
}

fn closures(c: &mut Criterion) {
    let mut group = c.benchmark_group("closure index");
    for n in [500, 2000] {
        let u = universe(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &u, |b, u| {
            b.iter(|| {
                let idx = ClosureIndex::new(u);
                idx.warm();
                idx
            })
        });
    }
    group.finish();
}

fn encodings(c: &mut Criterion) {
    let u = universe(1000);
    let idx = ClosureIndex::new(&u);
    idx.warm();
    let mut group = c.benchmark_group("encode 1000 packages");
    for kind in [EncodingKind::P3, EncodingKind::P4, EncodingKind::P5Strict, EncodingKind::P5Pruned] {
        group.bench_function(kind.name(), |b| b.iter(|| encode(kind, &idx, &Default::default(), 10).unwrap()));
    }
    group.finish();
}

fn solving(c: &mut Criterion) {
    let mut group = c.benchmark_group("migrate");
    group.sample_size(20);
    for n in [100, 400] {
        let u = universe(n);
        group.bench_with_input(BenchmarkId::new("max", n), &u, |b, u| {
            b.iter(|| testmig_core::engine::solve_migration(&MigrationRequest::new(Mode::Max), u).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, parsing, closures, encodings, solving);
criterion_main!(benches);
