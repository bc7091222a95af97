//! Data-parallel map against the sequential fallback, on the two workloads
//! that use it: batches of brute-force oracle runs, and frontier expansion in
//! explicit-state exploration.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use chc_core::cfa::{forward_transform, successors};
use chc_core::chc::{ground_truth_oracle, Bounds, ChcSystem};
use chc_core::par;
use chc_core::term::Value;
use chc_core::testkit::{random_bv_system, rng, BvSystemShape};

fn systems(n: usize) -> Vec<ChcSystem> {
    let mut r = rng(99);
    (0..n).map(|_| random_bv_system(&mut r, BvSystemShape { widths: (4, 4), ..BvSystemShape::default() })).collect()
}

fn oracle_batch(c: &mut Criterion) {
    let batch = systems(16);
    let bounds = Bounds::default();
    let mut g = c.benchmark_group("oracle_batch");
    g.sample_size(10);
    g.bench_function(BenchmarkId::new("parallel", batch.len()), |b| {
        b.iter(|| par::map(&batch, |s| ground_truth_oracle(s, &bounds).is_ok()))
    });
    g.bench_function(BenchmarkId::new("sequential", batch.len()), |b| {
        b.iter(|| par::map_sequential(&batch, |s| ground_truth_oracle(s, &bounds).is_ok()))
    });
    g.finish();
}

fn frontier_expansion(c: &mut Criterion) {
    // One wide frontier: valuations of the first system at its init location.
    let sys = systems(1).remove(0);
    let (cfa, _) = forward_transform(&sys).expect("linear system");
    let bounds = Bounds::default();
    let live = cfa.live_vars();
    let domains: Vec<Vec<Value>> = cfa.vars.iter().map(|v| bounds.domain(v.sort()).unwrap()).collect();
    let mut frontier = vec![(cfa.init, vec![])];
    for d in &domains {
        frontier = frontier
            .into_iter()
            .flat_map(|(l, vals): (usize, Vec<Value>)| {
                d.iter().take(4).map(move |x| {
                    let mut v = vals.clone();
                    v.push(x.clone());
                    (l, v)
                })
            })
            .collect();
    }
    frontier.truncate(256);
    let mut g = c.benchmark_group("explore");
    g.sample_size(10);
    g.bench_function(BenchmarkId::new("parallel", frontier.len()), |b| {
        b.iter(|| par::map(&frontier, |s| successors(&cfa, &bounds, &live, s).map(|v| v.len())))
    });
    g.bench_function(BenchmarkId::new("sequential", frontier.len()), |b| {
        b.iter(|| par::map_sequential(&frontier, |s| successors(&cfa, &bounds, &live, s).map(|v| v.len())))
    });
    g.finish();
}

criterion_group!(benches, oracle_batch, frontier_expansion);
criterion_main!(benches);
