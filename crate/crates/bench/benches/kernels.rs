use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use decohist_bench::model_with_state;
use decohist_core::discrimination::average_success;
use decohist_core::ensembles::{gram_matrix, haar_family};
use decohist_core::histories::{branch_states, tau};
use decohist_core::{HistorySet, ModelParams, ModelSpec, WeightVector};

fn eigensolve(c: &mut Criterion) {
    let mut g = c.benchmark_group("eigensolve");
    g.sample_size(10);
    for d0 in [50, 200] {
        let params = ModelParams::new(d0, 1);
        g.bench_with_input(BenchmarkId::from_parameter(3 * d0), &params, |b, p| {
            b.iter(|| ModelSpec::from_params(p.clone()).unwrap())
        });
    }
    g.finish();
}

fn gram_and_success(c: &mut Criterion) {
    let mut g = c.benchmark_group("gram");
    g.sample_size(10);
    for d in [200, 500] {
        let fam = haar_family(d, d, 3).unwrap();
        g.bench_with_input(BenchmarkId::new("gram_matrix", d), &fam, |b, f| b.iter(|| gram_matrix(f).unwrap()));
        let gm = gram_matrix(&fam).unwrap();
        let w = WeightVector::uniform(d).unwrap();
        g.bench_with_input(BenchmarkId::new("sqrt_success", d), &gm, |b, gm| b.iter(|| average_success(gm, &w).unwrap()));
    }
    g.finish();
}

fn propagation(c: &mut Criterion) {
    let mut g = c.benchmark_group("propagation");
    g.sample_size(10);
    let (m, psi) = model_with_state(200);
    let dt = 8.0 * tau(&m);
    let prop = m.propagator(dt);
    g.bench_function("single_step_600", |b| b.iter(|| prop.apply(&psi)));
    let tree = HistorySet::full_tree(8, Some(0)).unwrap();
    g.bench_function("full_tree_l8_600", |b| b.iter(|| branch_states(&m, &psi, &tree, dt).unwrap()));
    g.finish();
}

criterion_group!(benches, eigensolve, gram_and_success, propagation);
criterion_main!(benches);
