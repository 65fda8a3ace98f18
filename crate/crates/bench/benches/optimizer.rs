use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fockgrad::optimizer::{backward, forward, initial_params};
use fockgrad::state::StateVector;

/// One forward plus backward pass, the per-step cost of state preparation.
fn step(c: &mut Criterion) {
    let mut group = c.benchmark_group("forward_backward");
    for (layers, cutoff) in [(8, 25), (20, 30)] {
        let params = initial_params(layers, 0.01, 0);
        let target = StateVector::fock(1, cutoff, &[1]).unwrap();
        group.bench_with_input(BenchmarkId::new(format!("{layers}_layers"), cutoff), &cutoff, |b, &n| {
            b.iter(|| backward(&forward(&params, n).unwrap(), &target).unwrap())
        });
    }
    group.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = step
}
criterion_main!(benches);
