use criterion::{criterion_group, criterion_main, Criterion};
use ddorder_bench::{features, instance, samples};
use ddorder_core::qnet::{self, Sample};
use ddorder_core::{QParams, Rng};
use rand_chacha::rand_core::SeedableRng;

fn network(c: &mut Criterion) {
    let g = instance(25, false, 5);
    let gf = features(&g);
    let params = QParams::random(64, 4, &mut Rng::seed_from_u64(0));
    let transitions = samples(&g, 32);
    let batch: Vec<Sample<'_>> = transitions.iter().map(|t| (&gf, t)).collect();
    let prefix = &transitions[10].inserted_before;

    c.bench_function("qvalues/n25", |b| b.iter(|| qnet::qvalues(&params, &gf, prefix)));
    c.bench_function("td-loss-grad/batch32", |b| {
        b.iter(|| qnet::td_loss_grad(&params, &batch, 1.0).unwrap())
    });
}

criterion_group!(benches, network);
criterion_main!(benches);
