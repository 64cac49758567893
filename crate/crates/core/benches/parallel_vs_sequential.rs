//! Word-tree folds on the default rayon pool against a one-thread pool.
//!
//! `cargo bench -p gasketlab` runs both; building with
//! `--no-default-features` removes rayon entirely and is not benchmarked here.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gasketlab::capacity::{a3_report, A3Config};
use gasketlab::energy::{index_estimate, EnergyBasis};
use gasketlab::gasket::{Gasket, GasketSpec};
use rayon::ThreadPool;

fn pools() -> Vec<(String, ThreadPool)> {
    let all = rayon::current_num_threads();
    let mut out = vec![("sequential".to_string(), rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap())];
    if all > 1 {
        out.push((format!("rayon-{all}"), rayon::ThreadPoolBuilder::new().num_threads(all).build().unwrap()));
    }
    out
}

fn rank_statistics(c: &mut Criterion) {
    let g = Gasket::new(GasketSpec::homogeneous(2, 2).unwrap()).unwrap();
    let basis = EnergyBasis::standard(2).unwrap().to_f64();
    let mut group = c.benchmark_group("index_estimate_sg_depth8");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(&name), |b| {
            b.iter(|| pool.install(|| index_estimate(&g, 8, 1e-8, 1e-3, &basis).unwrap()))
        });
    }
    group.finish();
}

fn natural_mass(c: &mut Criterion) {
    let g = Gasket::new(GasketSpec::seeded(2, &[(2, 0.5), (3, 0.5)], 1).unwrap()).unwrap();
    let mut group = c.benchmark_group("total_mass_seeded_depth7");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(&name), |b| {
            b.iter(|| pool.install(|| g.total_mass(7).unwrap()))
        });
    }
    group.finish();
}

fn balance_report(c: &mut Criterion) {
    let g = Gasket::new(GasketSpec::homogeneous(2, 2).unwrap()).unwrap();
    let mut cfg = A3Config::new(3, 4);
    cfg.samples = 8;
    let mut group = c.benchmark_group("a3_report_sg_depth3_float");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(&name), |b| {
            b.iter(|| pool.install(|| a3_report::<f64>(&g, &cfg).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, rank_statistics, natural_mass, balance_report);
criterion_main!(benches);
