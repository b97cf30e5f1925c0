// scratch: second tuning grid
use std::time::Instant;

use hfgn::data::{split_dataset, SplitSpec};
use hfgn::eval::{build_fitb_queries, evaluate_topk, fitb_accuracy, EvalTarget};
use hfgn::graph::build_category_graph;
use hfgn::model::{Model, ModelConfig};
use hfgn::synth::{generate_synthetic, SyntheticSpec};
use hfgn::train::{train, TrainConfig};

fn main() {
    let spec = SyntheticSpec { users: 200, outfits: 300, items: 500, categories: 8,
        style_dim: 8, outfit_len_min: 3, outfit_len_max: 5, interactions_per_user: 15,
        fitb_holdout: 30, noise: 0.1, seed: 42 };
    let ds = generate_synthetic(&spec).unwrap();
    let split = split_dataset(&ds, &SplitSpec::default()).unwrap();
    let graph = ds.hierarchical_graph(&split.train);
    let cats = build_category_graph(&ds.outfit_items, &ds.item_category, ds.category_count());
    let queries = build_fitb_queries(&ds, &ds.fitb_pool(), 2000, 1234, false).unwrap();
    let queries_cm = build_fitb_queries(&ds, &ds.fitb_pool(), 2000, 1234, true).unwrap();

    for (label, lr_rec, lr_com, r_views, attn_hidden) in [
        ("A", 1e-3, 5e-3, 2usize, 16usize),
        ("B", 5e-4, 5e-3, 2, 16),
        ("C", 1e-3, 5e-3, 4, 32),
        ("D", 5e-4, 1e-2, 4, 32),
    ] {
        let config = ModelConfig { d: 32, feature_dim: 8, r_views, attn_hidden,
            encoder_hidden: 32, leaky_slope: 0.2, enable_item_prop: true,
            enable_item_to_outfit: true, enable_outfit_to_user: true, init_seed: 44 };
        let untrained = Model::new(config.clone(), ds.index.counts()).unwrap();
        let u = evaluate_topk(&untrained, &graph, &cats, &ds, &split, EvalTarget::Test, 10).unwrap();
        let tc = TrainConfig { lr_rec, lr_com, reg_lambda: 1e-4,
            batch_rec: 256, batch_com: 64, epochs: 50, rng_seed: 7, ..TrainConfig::default() };
        let started = Instant::now();
        let outcome = train(&ds, &split, &config, &tc).unwrap();
        let t = started.elapsed();
        let last = outcome.history.last().unwrap();
        let trained = Model::from_parts(config.clone(), ds.index.counts(), outcome.params);
        let r = evaluate_topk(&trained, &graph, &cats, &ds, &split, EvalTarget::Test, 10).unwrap();
        let fitb = fitb_accuracy(&trained, &graph, &cats, &ds, &queries).unwrap();
        let fitb_cm = fitb_accuracy(&trained, &graph, &cats, &ds, &queries_cm).unwrap();
        println!(
            "{label}: L_com_end {:7.2} ndcg {:.4} ({:.1}x) fitb {:.4} fitb_catmatch {:.4} [{:.0?}]",
            last.loss_com, r.ndcg, r.ndcg / u.ndcg.max(1e-12), fitb, fitb_cm, t
        );
    }
}
