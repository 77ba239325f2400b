// SPDX-License-Identifier: Apache-2.0

//! Parallel against sequential execution of the same suites.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nklab::catalog::ImmersionId;
use nklab::lag::constraints::grid;
use nklab::lag::grid_spread;
use nklab::report::{verify_catalog, verify_structure, RunConfig};
use nklab::Tolerances;

fn structure(c: &mut Criterion) {
    let mut g = c.benchmark_group("structure suite");
    for parallel in [false, true] {
        let cfg = RunConfig { samples: 2000, parallel, ..RunConfig::default() };
        g.bench_with_input(BenchmarkId::from_parameter(if parallel { "parallel" } else { "sequential" }), &cfg, |b, cfg| {
            b.iter(|| verify_structure(cfg).unwrap())
        });
    }
    g.finish();
}

fn spreads(c: &mut Criterion) {
    let tol = Tolerances::default();
    let id = ImmersionId::BianchiVIJmath;
    let points = grid(id.domain(), 4);
    let mut g = c.benchmark_group("jmath grid spread");
    g.sample_size(10);
    for parallel in [false, true] {
        g.bench_with_input(BenchmarkId::from_parameter(if parallel { "parallel" } else { "sequential" }), &parallel, |b, &p| {
            b.iter(|| grid_spread(&id, &points, &tol, p).unwrap())
        });
    }
    g.finish();
}

fn catalog_row(c: &mut Criterion) {
    let mut g = c.benchmark_group("psl catalog row");
    g.sample_size(10);
    for parallel in [false, true] {
        let cfg = RunConfig { samples: 20, parallel, ..RunConfig::default() };
        g.bench_with_input(BenchmarkId::from_parameter(if parallel { "parallel" } else { "sequential" }), &cfg, |b, cfg| {
            b.iter(|| verify_catalog(cfg, Some("psl")).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, structure, spreads, catalog_row);
criterion_main!(benches);
