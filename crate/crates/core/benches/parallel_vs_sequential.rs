use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use cvtest_core::bootstrap::{bootstrap_test, BootstrapConfig, SmoothingConfig};
use cvtest_core::generators::{generate, ModelId, ModelSpec};
use cvtest_core::harness::{execute, CellSpec, McPlan};
use cvtest_core::rng::stream;
use cvtest_core::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn bootstrap(c: &mut Criterion) {
    let mut group = c.benchmark_group("bootstrap_test");
    group.sample_size(10);
    for n in [100, 200] {
        let spec = ModelSpec::regression(ModelId::S6, 1.0, n);
        let sample = generate(&spec, &mut stream(7, &[n as u64])).unwrap().into_sample();
        let cfg = BootstrapConfig::default();
        let smoothing = SmoothingConfig::default();
        for (name, mode) in MODES {
            group.bench_with_input(BenchmarkId::new(name, n), &sample, |b, s| {
                b.iter(|| bootstrap_test(s, &cfg, &smoothing, false, mode).unwrap())
            });
        }
    }
    group.finish();
}

fn harness(c: &mut Criterion) {
    let mut group = c.benchmark_group("monte_carlo");
    group.sample_size(10);
    let cells = vec![
        CellSpec::new(ModelSpec::regression(ModelId::S6, 1.0, 100)),
        CellSpec::new(ModelSpec::series(ModelId::Sta1, 100)),
    ];
    for (name, mode) in MODES {
        let mut plan = McPlan::new(cells.clone(), 20, 1);
        plan.bootstrap.replicates = 50;
        plan.execution = mode;
        group.bench_function(BenchmarkId::new(name, "2 cells x 20 runs"), |b| b.iter(|| execute(&plan).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, bootstrap, harness);
criterion_main!(benches);
