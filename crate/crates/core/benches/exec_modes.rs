//! Sequential against data-parallel execution on the three batch workloads.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use cpdual_core::crossed::{nsharpd_boundedness, Theta};
use cpdual_core::duality::{random_ladder_batch, DualChoice};
use cpdual_core::exec::Execution;
use cpdual_core::fock::commutator_decay;
use cpdual_core::graph::fixtures;
use cpdual_core::watatani::PathWeights;

const MODES: [Execution; 2] = [Execution::Sequential, Execution::Parallel];

fn ladders(c: &mut Criterion) {
    let mut group = c.benchmark_group("random_ladder_batch");
    group.sample_size(10);
    for exec in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| random_ladder_batch(50, 6, 1000, DualChoice::Eop, exec))
        });
    }
    group.finish();
}

fn path_weights(c: &mut Criterion) {
    let g = fixtures::two_loop_bridge();
    let mut group = c.benchmark_group("path_weights");
    group.sample_size(10);
    for exec in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| PathWeights::new(&g, 4, 32, exec).unwrap())
        });
    }
    group.finish();
}

fn commutators(c: &mut Criterion) {
    let g = fixtures::cuntz(2);
    let theta = Theta::turns(3, 10).unwrap();
    let mut group = c.benchmark_group("commutator_tables");
    group.sample_size(10);
    for exec in MODES {
        group.bench_with_input(BenchmarkId::new("decay", format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| commutator_decay(&g, 0, &[8, 16, 32], 34, 64, exec).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("nsharpd", format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| nsharpd_boundedness(&[16, 32, 64, 128], 8, theta, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, ladders, path_weights, commutators);
criterion_main!(benches);
