use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use qjc_bench::{atlas, model};
use qjc_core::channel::{choi_cp_check, complementary_graph_identity, kraus_of_psi_hat};
use qjc_core::coherent::YMode;
use qjc_core::graph::{graph_from_atlas, kl_check, SetFamily};
use qjc_core::operator::DEFAULT_RANK_TOL;

fn atlas_build(c: &mut Criterion) {
    let mut group = c.benchmark_group("atlas_build");
    group.sample_size(10);
    for n_max in [20, 40] {
        let m = model(n_max);
        group.bench_with_input(BenchmarkId::from_parameter(n_max), &m, |b, m| {
            b.iter(|| atlas(m, YMode::ExactMean))
        });
    }
    group.finish();
}

fn graph(c: &mut Criterion) {
    let m = model(40);
    let a = atlas(&m, YMode::ExactMean);
    let family = SetFamily::atoms(&a);
    let mut group = c.benchmark_group("graph");
    group.sample_size(10);
    group.bench_function("from_atoms", |b| {
        b.iter(|| graph_from_atlas(&a, &family, DEFAULT_RANK_TOL).unwrap())
    });
    let v = graph_from_atlas(&a, &family, DEFAULT_RANK_TOL).unwrap();
    group.bench_function("kl_check", |b| b.iter(|| kl_check(a.p3(), &v).unwrap()));
    group.bench_function("complementary_identity", |b| {
        b.iter(|| complementary_graph_identity(&a, DEFAULT_RANK_TOL).unwrap())
    });
    group.finish();
}

fn choi(c: &mut Criterion) {
    let m = model(40);
    let a = atlas(&m, YMode::ExactMean);
    let (ch, _) = kraus_of_psi_hat(&a).unwrap();
    let mut group = c.benchmark_group("choi");
    group.sample_size(10);
    group.bench_function("cp_check", |b| {
        b.iter(|| choi_cp_check(&ch, Some(a.interior())).unwrap())
    });
    group.finish();
}

criterion_group!(benches, atlas_build, graph, choi);
criterion_main!(benches);
