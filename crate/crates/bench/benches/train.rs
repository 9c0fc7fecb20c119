use std::hint::black_box;

use arcgate::experiments::HIDDEN;
use arcgate::nn::data::synthetic_split;
use arcgate::nn::{
    softmax_cross_entropy, train, Granularity, InitStrategy, Mlp, ModelSpec, Tensor, TrainConfig,
};
use criterion::{criterion_group, criterion_main, Criterion};

fn spec() -> ModelSpec {
    ModelSpec {
        input_dim: 784,
        hidden: HIDDEN.to_vec(),
        n_classes: 10,
    }
}

fn step(c: &mut Criterion) {
    let data = synthetic_split(32, 1, 0);
    let rows: Vec<Vec<f64>> = (0..32).map(|i| data.train.inputs.row(i).to_vec()).collect();
    let batch = Tensor::from_rows(&rows).unwrap();
    let labels = data.train.labels.clone();
    for (name, init) in [("arcgate", InitStrategy::SoftRelu), ("relu", InitStrategy::ReluBaseline)] {
        let model = Mlp::new(&spec(), init, Granularity::LayerWise, 0).unwrap();
        c.bench_function(&format!("forward+backward 32x784 {name}"), |b| {
            b.iter(|| {
                let (logits, cache) = model.forward(black_box(&batch)).unwrap();
                let (_, g) = softmax_cross_entropy(&logits, &labels).unwrap();
                model.backward(&cache, &g).unwrap()
            })
        });
    }
}

fn epoch(c: &mut Criterion) {
    let data = synthetic_split(512, 128, 0);
    let config = TrainConfig {
        epochs: 1,
        ..TrainConfig::desk_scale()
    };
    let mut group = c.benchmark_group("train");
    group.sample_size(10);
    group.bench_function("one epoch 512 glyphs", |b| {
        b.iter(|| train(&spec(), black_box(&data), &config).unwrap())
    });
    group.finish();
}

criterion_group!(benches, step, epoch);
criterion_main!(benches);
