use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use hfgn::data::{split_dataset, SplitSpec};
use hfgn::eval::{build_fitb_queries, evaluate_topk, fitb_accuracy, EvalTarget};
use hfgn::graph::build_category_graph;
use hfgn::model::{Model, ModelConfig};
use hfgn::synth::{generate_synthetic, SyntheticSpec};
use hfgn::train::{train, TrainConfig};

fn bench_spec() -> SyntheticSpec {
    SyntheticSpec {
        users: 60,
        outfits: 90,
        items: 150,
        categories: 8,
        interactions_per_user: 10,
        fitb_holdout: 10,
        seed: 33,
        ..SyntheticSpec::default()
    }
}

fn bench_model_config() -> ModelConfig {
    ModelConfig {
        d: 32,
        feature_dim: 8,
        r_views: 2,
        attn_hidden: 16,
        encoder_hidden: 32,
        ..ModelConfig::default()
    }
}

fn bench_category_graph(c: &mut Criterion) {
    let ds = generate_synthetic(&bench_spec()).unwrap();
    c.bench_function("category_graph_build", |b| {
        b.iter(|| {
            black_box(build_category_graph(
                &ds.outfit_items,
                &ds.item_category,
                ds.category_count(),
            ))
        });
    });
}

fn bench_train_epoch(c: &mut Criterion) {
    let ds = generate_synthetic(&bench_spec()).unwrap();
    let split = split_dataset(&ds, &SplitSpec::default()).unwrap();
    let config = bench_model_config();
    let tc = TrainConfig {
        epochs: 1,
        batch_rec: 128,
        batch_com: 64,
        ..TrainConfig::default()
    };
    c.bench_function("train_one_epoch", |b| {
        b.iter(|| black_box(train(&ds, &split, &config, &tc).unwrap()));
    });
}

fn bench_eval_and_fitb(c: &mut Criterion) {
    let ds = generate_synthetic(&bench_spec()).unwrap();
    let split = split_dataset(&ds, &SplitSpec::default()).unwrap();
    let graph = ds.hierarchical_graph(&split.train);
    let cats = build_category_graph(&ds.outfit_items, &ds.item_category, ds.category_count());
    let model = Model::new(bench_model_config(), ds.index.counts()).unwrap();
    c.bench_function("evaluate_topk_test_split", |b| {
        b.iter(|| {
            black_box(
                evaluate_topk(&model, &graph, &cats, &ds, &split, EvalTarget::Test, 10).unwrap(),
            )
        });
    });
    let queries = build_fitb_queries(&ds, &ds.fitb_pool(), 200, 5, false).unwrap();
    c.bench_function("fitb_200_queries", |b| {
        b.iter(|| black_box(fitb_accuracy(&model, &graph, &cats, &ds, &queries).unwrap()));
    });
}

criterion_group!(benches, bench_category_graph, bench_train_epoch, bench_eval_and_fitb);
criterion_main!(benches);
