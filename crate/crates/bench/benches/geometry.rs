use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use foliq_bench::{Fixture, SPECS};
use foliq_core::connections::curvature_table;
use foliq_core::structures::{structure_tensor_h, structure_tensor_q};
use foliq_core::suite::{run_model, RunConfig};

fn point_geometry(c: &mut Criterion) {
    let mut group = c.benchmark_group("point_geometry");
    for spec in SPECS {
        let f = Fixture::new(spec);
        group.bench_with_input(BenchmarkId::from_parameter(spec), &f, |b, f| b.iter(|| f.geometry(1)));
    }
    group.finish();
}

fn structure_tensors(c: &mut Criterion) {
    let mut group = c.benchmark_group("structure_tensors");
    for spec in SPECS {
        let f = Fixture::new(spec);
        let g = f.geometry(0);
        group.bench_with_input(BenchmarkId::from_parameter(spec), &g, |b, g| {
            b.iter(|| structure_tensor_q(g, &structure_tensor_h(g)))
        });
    }
    group.finish();
}

fn curvature(c: &mut Criterion) {
    let mut group = c.benchmark_group("curvature_table");
    for spec in SPECS {
        let f = Fixture::new(spec);
        let g = f.geometry(1);
        let gamma = f.model.twistor_connection().gamma(&g).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(spec), &(g, gamma), |b, (g, gamma)| {
            b.iter(|| curvature_table(g, gamma).unwrap())
        });
    }
    group.finish();
}

fn full_suite(c: &mut Criterion) {
    let mut group = c.benchmark_group("suite_8_points");
    group.sample_size(10);
    for spec in ["flat", "s7_sasakian"] {
        let f = Fixture::new(spec);
        let cfg = RunConfig { model: spec.into(), samples: 8, threads: Some(1), ..RunConfig::default() };
        group.bench_with_input(BenchmarkId::from_parameter(spec), &f, |b, f| {
            b.iter(|| run_model(&f.model, &cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, point_geometry, structure_tensors, curvature, full_suite);
criterion_main!(benches);
