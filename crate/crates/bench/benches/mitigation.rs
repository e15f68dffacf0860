use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mfree_bench::{fixture, rhs};
use mfree_core::amatrix::{tensored_element, StorageKind};
use mfree_core::solver::{solve_iterative, Method, SolveOptions};
use mfree_core::{build_reduced, mitigate, BitString};

fn element(c: &mut Criterion) {
    let f = fixture(42, 50, 2000, 1);
    let keys: Vec<BitString> = f.counts.keys().take(2).cloned().collect();
    c.bench_function("tensored_element/42", |b| {
        b.iter(|| tensored_element(&f.cal, black_box(&keys[0]), black_box(&keys[1])).unwrap())
    });
}

fn build(c: &mut Criterion) {
    let mut group = c.benchmark_group("build_reduced");
    group.sample_size(10);
    for shots in [2000u64, 8000] {
        let f = fixture(20, 50, shots, 2);
        group.bench_with_input(BenchmarkId::new("csc", f.counts.len()), &f, |b, f| {
            b.iter(|| build_reduced(&f.cal, &f.counts, 3, StorageKind::Csc).unwrap())
        });
    }
    group.finish();
}

fn matvec(c: &mut Criterion) {
    let f = fixture(20, 50, 8000, 3);
    let x = rhs(&f.counts);
    let mut group = c.benchmark_group("matvec");
    group.sample_size(10);
    for kind in [StorageKind::Csc, StorageKind::Implicit] {
        let a = build_reduced(&f.cal, &f.counts, 3, kind).unwrap();
        group.bench_function(format!("{kind:?}/{}", a.dim()), |b| b.iter(|| a.matvec(black_box(&x)).unwrap()));
    }
    group.finish();
}

fn gmres(c: &mut Criterion) {
    let f = fixture(20, 50, 8000, 4);
    let a = build_reduced(&f.cal, &f.counts, 3, StorageKind::Csc).unwrap();
    let b = rhs(&f.counts);
    let opts = SolveOptions {
        method: Method::Iterative,
        ..Default::default()
    };
    c.bench_function(&format!("gmres/csc/{}", a.dim()), |bench| {
        bench.iter(|| solve_iterative(&a, black_box(&b), &opts).unwrap())
    });
}

fn end_to_end(c: &mut Criterion) {
    let f = fixture(42, 60, 2000, 5);
    let opts = SolveOptions {
        method: Method::Iterative,
        ..Default::default()
    };
    let mut group = c.benchmark_group("mitigate");
    group.sample_size(10);
    group.bench_function(format!("42q/{}", f.counts.len()), |b| {
        b.iter(|| mitigate(&f.cal, &f.counts, 3, &opts).unwrap())
    });
    group.finish();
}

criterion_group!(benches, element, build, matvec, gmres, end_to_end);
criterion_main!(benches);
