//! Joint pairwise-ranking training of both heads.
//!
//! Each epoch draws one BPR triple per training interaction and one
//! positive/negative composition pair per training outfit, batches them,
//! and interleaves recommendation and compatibility batches proportionally.
//! The two tasks use separate learning rates and separate Adam moment
//! state over the shared parameters.

use std::collections::HashSet;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{DataSplit, Dataset};
use crate::eval::{evaluate_topk, EvalTarget};
use crate::graph::build_category_graph;
use crate::model::{ForwardPass, Model, ModelConfig, ModelParams};
use crate::tape::{NodeRef, Tape};
use crate::tensor::Tensor;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Learning rate for the recommendation task.
    pub lr_rec: f64,
    /// Learning rate for the compatibility task.
    pub lr_com: f64,
    /// L2 coefficient applied to the parameters each batch touches.
    pub reg_lambda: f64,
    pub batch_rec: usize,
    pub batch_com: usize,
    pub epochs: usize,
    pub rng_seed: u64,
    pub adam: AdamConfig,
    /// Draw fresh negatives every epoch instead of freezing the first draw.
    pub neg_resample_per_epoch: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr_rec: 1e-3,
            lr_com: 5e-4,
            reg_lambda: 1e-4,
            batch_rec: 256,
            batch_com: 256,
            epochs: 30,
            rng_seed: 7,
            adam: AdamConfig::default(),
            neg_resample_per_epoch: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lr_rec < 0.0 || self.lr_com < 0.0 {
            return Err(Error::Config("learning rates must be >= 0".into()));
        }
        if self.reg_lambda < 0.0 {
            return Err(Error::Config("reg_lambda must be >= 0".into()));
        }
        if self.batch_rec < 1 || self.batch_com < 1 {
            return Err(Error::Config("batch sizes must be >= 1".into()));
        }
        Ok(())
    }
}

/// One BPR training instance for the recommendation head.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecTriple {
    pub user: usize,
    /// Observed (positive) outfit.
    pub pos: usize,
    /// Outfit the user never interacted with in training.
    pub neg: usize,
}

/// One BPR instance for the compatibility head: an observed outfit against
/// a generated composition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompatPair {
    pub pos: usize,
    /// Generated negative: the positive with one item swapped within its
    /// category.
    pub neg_items: Vec<usize>,
}

/// Per-parameter Adam moment accumulators.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<Tensor>,
    v: Vec<Tensor>,
    t: u64,
}

impl AdamState {
    pub fn new(params: &ModelParams) -> Self {
        let m = params
            .named()
            .iter()
            .map(|(_, t)| Tensor::zeros_like(t))
            .collect::<Vec<_>>();
        AdamState {
            v: m.clone(),
            m,
            t: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    pub fn moments(&self, idx: usize) -> (&Tensor, &Tensor) {
        (&self.m[idx], &self.v[idx])
    }
}

/// One Adam update with bias correction. `grads` aligns with the canonical
/// parameter order. A non-finite gradient aborts with a diagnostic naming
/// the parameter.
pub fn adam_step(
    params: &mut ModelParams,
    grads: &[Tensor],
    state: &mut AdamState,
    lr: f64,
    cfg: &AdamConfig,
) -> Result<()> {
    let mut named = params.named_mut();
    assert_eq!(named.len(), grads.len(), "gradient list misaligned");
    for ((name, _), g) in named.iter().zip(grads) {
        if !g.all_finite() {
            return Err(Error::Train(format!("NaN gradient in parameter '{name}'")));
        }
    }
    state.t += 1;
    let bc1 = 1.0 - cfg.beta1.powi(state.t as i32);
    let bc2 = 1.0 - cfg.beta2.powi(state.t as i32);
    for (idx, ((_, p), g)) in named.iter_mut().zip(grads).enumerate() {
        let m = &mut state.m[idx];
        let v = &mut state.v[idx];
        let pd = p.data_mut();
        for (i, &gi) in g.data().iter().enumerate() {
            let mi = cfg.beta1 * m.data()[i] + (1.0 - cfg.beta1) * gi;
            let vi = cfg.beta2 * v.data()[i] + (1.0 - cfg.beta2) * gi * gi;
            m.data_mut()[i] = mi;
            v.data_mut()[i] = vi;
            let m_hat = mi / bc1;
            let v_hat = vi / bc2;
            pd[i] -= lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }
    Ok(())
}

/// One BPR triple per training interaction, in shuffled order, each with a
/// negative outfit rejection-sampled from `universe` until it is unobserved
/// for the user. Users whose positives cover the whole universe are skipped;
/// the second return value counts them.
pub fn sample_rec_triples(
    train_pairs: &[(usize, usize)],
    train_by_user: &[Vec<usize>],
    universe: &[usize],
    rng: &mut ChaCha8Rng,
) -> (Vec<RecTriple>, usize) {
    let mut order: Vec<(usize, usize)> = train_pairs.to_vec();
    order.shuffle(rng);
    let mut triples = Vec::with_capacity(order.len());
    let mut skipped = 0;
    for (user, pos) in order {
        if train_by_user[user].len() >= universe.len() {
            skipped += 1;
            continue;
        }
        let neg = loop {
            let cand = universe[rng.gen_range(0..universe.len())];
            if train_by_user[user].binary_search(&cand).is_err() {
                break cand;
            }
        };
        triples.push(RecTriple { user, pos, neg });
    }
    (triples, skipped)
}

/// One compatibility pair per training outfit, in shuffled order. The
/// negative swaps one uniformly chosen item for a different item of the
/// same category and is re-rolled if it reproduces an observed training
/// composition. Outfits with no swappable position are skipped.
pub fn sample_compat_pairs(
    positives: &[usize],
    outfit_items: &[Vec<usize>],
    item_category: &[usize],
    items_by_category: &[Vec<usize>],
    observed: &HashSet<Vec<usize>>,
    rng: &mut ChaCha8Rng,
) -> (Vec<CompatPair>, usize) {
    let mut order: Vec<usize> = positives.to_vec();
    order.shuffle(rng);
    let mut pairs = Vec::with_capacity(order.len());
    let mut skipped = 0;
    'outer: for pos in order {
        let items = &outfit_items[pos];
        let viable: Vec<usize> = (0..items.len())
            .filter(|&p| items_by_category[item_category[items[p]]].len() >= 2)
            .collect();
        if viable.is_empty() {
            skipped += 1;
            continue;
        }
        for _ in 0..100 {
            let p = viable[rng.gen_range(0..viable.len())];
            let original = items[p];
            let pool = &items_by_category[item_category[original]];
            let orig_pos = pool.binary_search(&original).expect("item in its category pool");
            let k = rng.gen_range(0..pool.len() - 1);
            let replacement = pool[if k >= orig_pos { k + 1 } else { k }];
            let mut neg_items = items.clone();
            neg_items[p] = replacement;
            let mut key = neg_items.clone();
            key.sort_unstable();
            if !observed.contains(&key) {
                pairs.push(CompatPair { pos, neg_items });
                continue 'outer;
            }
        }
        skipped += 1;
    }
    (pairs, skipped)
}

/// `-ln(sigmoid(pos - neg))` via the stable log-sigmoid.
pub fn bpr_pair_loss(tape: &mut Tape, pos: NodeRef, neg: NodeRef) -> NodeRef {
    let diff = tape.sub(pos, neg);
    let ls = tape.log_sigmoid(diff);
    tape.scale(ls, -1.0)
}

fn add_opt(tape: &mut Tape, acc: Option<NodeRef>, term: NodeRef) -> Option<NodeRef> {
    Some(match acc {
        Some(a) => tape.add(a, term),
        None => term,
    })
}

/// Summed recommendation BPR loss over a batch, plus the L2 term over
/// everything the batch touched.
pub fn bpr_loss_rec(fwd: &mut ForwardPass, batch: &[RecTriple], reg_lambda: f64) -> NodeRef {
    assert!(!batch.is_empty(), "empty recommendation batch");
    let mut acc = None;
    for t in batch {
        let pos = fwd.rec_score(t.user, t.pos);
        let neg = fwd.rec_score(t.user, t.neg);
        let loss = bpr_pair_loss(&mut fwd.tape, pos, neg);
        acc = add_opt(&mut fwd.tape, acc, loss);
    }
    let mut total = acc.unwrap();
    if reg_lambda > 0.0 {
        let reg = fwd.l2_penalty();
        let scaled = fwd.tape.scale(reg, reg_lambda);
        total = fwd.tape.add(total, scaled);
    }
    total
}

/// Summed compatibility BPR loss over a batch, with the same L2 treatment.
pub fn bpr_loss_compat(
    fwd: &mut ForwardPass,
    batch: &[CompatPair],
    reg_lambda: f64,
) -> Result<NodeRef> {
    assert!(!batch.is_empty(), "empty compatibility batch");
    let mut acc = None;
    for pair in batch {
        let pos = fwd.compat_score_outfit(pair.pos);
        let neg = fwd.compat_score_items(&pair.neg_items)?;
        let loss = bpr_pair_loss(&mut fwd.tape, pos, neg);
        acc = add_opt(&mut fwd.tape, acc, loss);
    }
    let mut total = acc.unwrap();
    if reg_lambda > 0.0 {
        let reg = fwd.l2_penalty();
        let scaled = fwd.tape.scale(reg, reg_lambda);
        total = fwd.tape.add(total, scaled);
    }
    Ok(total)
}

/// Per-epoch training record. `seconds` is wall time and is the only
/// non-deterministic field.
#[derive(Debug, Clone)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss_rec: f64,
    pub loss_com: f64,
    pub val_hr: f64,
    pub val_ndcg: f64,
    pub seconds: f64,
}

#[derive(Debug)]
pub struct TrainOutcome {
    /// Best-validation parameters, or the last good state if training
    /// diverged (or validation was empty).
    pub params: ModelParams,
    pub history: Vec<EpochStats>,
    pub best_epoch: Option<usize>,
    /// Set when training aborted early on a non-finite loss or gradient.
    pub diverged: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Task {
    Rec(usize),
    Com(usize),
}

/// Proportional round-robin order over `n_rec` recommendation batches and
/// `n_com` compatibility batches.
fn interleave(n_rec: usize, n_com: usize) -> Vec<Task> {
    let mut slots: Vec<(f64, Task)> = Vec::with_capacity(n_rec + n_com);
    for i in 0..n_rec {
        slots.push(((i as f64 + 0.5) / n_rec.max(1) as f64, Task::Rec(i)));
    }
    for j in 0..n_com {
        slots.push(((j as f64 + 0.5) / n_com.max(1) as f64, Task::Com(j)));
    }
    // stable sort keeps recommendation batches first on ties
    slots.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    slots.into_iter().map(|(_, t)| t).collect()
}

fn chunk_ranges(len: usize, batch: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    while start < len {
        let end = (start + batch).min(len);
        out.push((start, end));
        start = end;
    }
    out
}

/// Joint training loop. Deterministic: the final checkpoint is a function
/// of (dataset, split, configs).
pub fn train(
    dataset: &Dataset,
    split: &DataSplit,
    model_config: &ModelConfig,
    train_config: &TrainConfig,
) -> Result<TrainOutcome> {
    model_config.validate()?;
    train_config.validate()?;
    if model_config.feature_dim != dataset.feature_dim {
        return Err(Error::Config(format!(
            "model feature_dim {} does not match dataset feature_dim {}",
            model_config.feature_dim, dataset.feature_dim
        )));
    }

    let graph = dataset.hierarchical_graph(&split.train);
    let train_by_user = DataSplit::by_user(&split.train, dataset.user_count());

    // compatibility positives: outfits observed in training interactions
    let mut compat_outfits: Vec<usize> = split.train.iter().map(|&(_, o)| o).collect();
    compat_outfits.sort_unstable();
    compat_outfits.dedup();

    let categories = build_category_graph(
        &compat_outfits
            .iter()
            .map(|&o| dataset.outfit_items[o].clone())
            .collect::<Vec<_>>(),
        &dataset.item_category,
        dataset.category_count(),
    );

    let universe = dataset.interacted_outfits();
    let items_by_category = dataset.items_by_category();
    let observed: HashSet<Vec<usize>> = compat_outfits
        .iter()
        .map(|&o| {
            let mut key = dataset.outfit_items[o].clone();
            key.sort_unstable();
            key
        })
        .collect();

    let mut model = Model::new(model_config.clone(), dataset.index.counts())?;
    let mut rng = ChaCha8Rng::seed_from_u64(train_config.rng_seed);
    let mut state_rec = AdamState::new(&model.params);
    let mut state_com = AdamState::new(&model.params);

    let mut history = Vec::with_capacity(train_config.epochs);
    let mut last_good = model.params.clone();
    let mut best: Option<(f64, usize, ModelParams)> = None;
    let mut frozen_triples: Option<Vec<RecTriple>> = None;
    let mut frozen_pairs: Option<Vec<CompatPair>> = None;
    let mut diverged = None;

    'epochs: for epoch in 1..=train_config.epochs {
        let started = Instant::now();

        let triples = match (&frozen_triples, train_config.neg_resample_per_epoch) {
            (Some(t), false) => t.clone(),
            _ => {
                let (t, skipped) =
                    sample_rec_triples(&split.train, &train_by_user, &universe, &mut rng);
                if skipped > 0 {
                    eprintln!(
                        "warning: epoch {epoch}: skipped {skipped} interactions of users with \
                         no unobserved outfit to sample"
                    );
                }
                if !train_config.neg_resample_per_epoch {
                    frozen_triples = Some(t.clone());
                }
                t
            }
        };
        let pairs = match (&frozen_pairs, train_config.neg_resample_per_epoch) {
            (Some(p), false) => p.clone(),
            _ => {
                let (p, skipped) = sample_compat_pairs(
                    &compat_outfits,
                    &dataset.outfit_items,
                    &dataset.item_category,
                    &items_by_category,
                    &observed,
                    &mut rng,
                );
                if skipped > 0 {
                    eprintln!(
                        "warning: epoch {epoch}: skipped {skipped} outfits with no valid \
                         negative composition"
                    );
                }
                if !train_config.neg_resample_per_epoch {
                    frozen_pairs = Some(p.clone());
                }
                p
            }
        };

        let rec_batches = chunk_ranges(triples.len(), train_config.batch_rec);
        let com_batches = chunk_ranges(pairs.len(), train_config.batch_com);
        let schedule = interleave(rec_batches.len(), com_batches.len());

        let mut loss_rec = 0.0;
        let mut loss_com = 0.0;
        for task in schedule {
            let (loss_value, grads, lr, state) = match task {
                Task::Rec(i) => {
                    let (start, end) = rec_batches[i];
                    let mut fwd =
                        ForwardPass::new(&model, &graph, &categories, &dataset.features);
                    let loss = bpr_loss_rec(&mut fwd, &triples[start..end], train_config.reg_lambda);
                    let value = fwd.tape.scalar_value(loss);
                    let grads = collect_grads(fwd, loss, &model.params);
                    (value, grads, train_config.lr_rec, &mut state_rec)
                }
                Task::Com(j) => {
                    let (start, end) = com_batches[j];
                    let mut fwd =
                        ForwardPass::new(&model, &graph, &categories, &dataset.features);
                    let loss =
                        bpr_loss_compat(&mut fwd, &pairs[start..end], train_config.reg_lambda)?;
                    let value = fwd.tape.scalar_value(loss);
                    let grads = collect_grads(fwd, loss, &model.params);
                    (value, grads, train_config.lr_com, &mut state_com)
                }
            };
            if !loss_value.is_finite() {
                diverged = Some(format!("non-finite loss at epoch {epoch}"));
                break 'epochs;
            }
            match task {
                Task::Rec(_) => loss_rec += loss_value,
                Task::Com(_) => loss_com += loss_value,
            }
            if let Err(e) = adam_step(&mut model.params, &grads, state, lr, &train_config.adam) {
                diverged = Some(format!("epoch {epoch}: {e}"));
                break 'epochs;
            }
        }

        // small datasets can end up with an empty validation split; best
        // checkpoint selection then falls back to the final state
        let val_metrics = if split.val.is_empty() {
            None
        } else {
            Some(evaluate_topk(
                &model,
                &graph,
                &categories,
                dataset,
                split,
                EvalTarget::Validation,
                10,
            )?)
        };
        history.push(EpochStats {
            epoch,
            loss_rec,
            loss_com,
            val_hr: val_metrics.as_ref().map_or(0.0, |r| r.hr),
            val_ndcg: val_metrics.as_ref().map_or(0.0, |r| r.ndcg),
            seconds: started.elapsed().as_secs_f64(),
        });

        last_good = model.params.clone();
        if let Some(report) = val_metrics {
            let improved = match &best {
                Some((ndcg, _, _)) => report.ndcg > *ndcg,
                None => true,
            };
            if improved {
                best = Some((report.ndcg, epoch, model.params.clone()));
            }
        }
    }

    let (params, best_epoch) = match (&diverged, best) {
        (None, Some((_, epoch, params))) => (params, Some(epoch)),
        _ => (last_good, None),
    };
    Ok(TrainOutcome {
        params,
        history,
        best_epoch,
        diverged,
    })
}

fn collect_grads(mut fwd: ForwardPass, loss: NodeRef, params: &ModelParams) -> Vec<Tensor> {
    let node_list = fwd.nodes.named();
    let grads = fwd.tape.backward(loss);
    params
        .named()
        .iter()
        .zip(node_list)
        .map(|((_, tensor), (_, node))| grads.dense(node, tensor))
        .collect()
}
