use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use fishsim::harness::{sweep, Execution, SteadyOptions};
use fishsim::{RobotParams, SimConfig};

fn schedules(c: &mut Criterion) {
    let params = RobotParams::default();
    let cfg = SimConfig {
        max_duration: 10.0,
        ..SimConfig::default()
    };
    let opts = SteadyOptions::default();
    let amps = [20.0, 40.0, 60.0, 80.0];
    let freqs = [1.0, 2.0, 3.0, 5.0, 7.0];

    let mut group = c.benchmark_group("sweep_4x5_10s");
    group.sample_size(10);
    for (name, execution) in [
        ("sequential", Execution::Sequential),
        ("parallel", Execution::Parallel),
    ] {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| sweep(&amps, &freqs, &cfg, &params, &opts, execution).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, schedules);
criterion_main!(benches);
