use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use hfgn::tape::Tape;
use hfgn::tensor::Tensor;

fn seeded_tensor(rows: usize, cols: usize, salt: u64) -> Tensor {
    // cheap deterministic fill, no rng dependency needed here
    let data = (0..rows * cols)
        .map(|i| (((i as u64).wrapping_mul(2654435761).wrapping_add(salt) % 1000) as f64) / 500.0 - 1.0)
        .collect();
    Tensor::from_vec(rows, cols, data)
}

fn bench_matmul(c: &mut Criterion) {
    let mut group = c.benchmark_group("matmul");
    for &n in &[16usize, 64, 128] {
        let a = seeded_tensor(n, n, 1);
        let b = seeded_tensor(n, n, 2);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |bench, _| {
            bench.iter(|| black_box(&a).matmul(black_box(&b)));
        });
    }
    group.finish();
}

fn bench_forward_backward(c: &mut Criterion) {
    // a small two-layer computation with a scalar loss, forward + backward
    let w1 = seeded_tensor(64, 64, 3);
    let w2 = seeded_tensor(64, 64, 4);
    let x = seeded_tensor(64, 1, 5);
    c.bench_function("tape_forward_backward_64", |bench| {
        bench.iter(|| {
            let mut tape = Tape::new();
            let w1n = tape.param(w1.clone());
            let w2n = tape.param(w2.clone());
            let xn = tape.constant(x.clone());
            let h = tape.matmul(w1n, xn);
            let h = tape.leaky_relu(h, 0.2);
            let y = tape.matmul(w2n, h);
            let loss = tape.sum(y);
            let grads = tape.backward(loss);
            black_box(grads.get(w1n).is_some())
        });
    });
}

fn bench_softmax_rows(c: &mut Criterion) {
    let logits = seeded_tensor(8, 512, 6);
    c.bench_function("softmax_rows_8x512", |bench| {
        bench.iter(|| {
            let mut tape = Tape::new();
            let x = tape.constant(logits.clone());
            let y = tape.softmax_rows(x);
            black_box(tape.value(y).at(0, 0))
        });
    });
}

criterion_group!(benches, bench_matmul, bench_forward_backward, bench_softmax_rows);
criterion_main!(benches);
