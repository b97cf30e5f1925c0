//! HFGN forward pass: category-aware item encoders, three message
//! propagation stages and the two prediction heads.
//!
//! Item embeddings are produced from visual features by per-category
//! two-layer encoders. Within each outfit, items exchange messages weighted
//! by category co-occurrence; refined items aggregate into the outfit
//! embedding, and historical outfits aggregate into the user embedding.
//! The recommendation head scores a user-outfit pair by inner product; the
//! compatibility head scores an item set through paired multi-view
//! attention and score maps.
//!
//! [`ForwardPass`] builds a differentiable computation on a [`Tape`] for
//! training; [`InferenceEngine`] runs the same primitives on frozen
//! parameters with per-entity value caches for cheap large-scale scoring.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{CategoryGraph, EntityCounts, HierarchicalGraph, OutfitItemGraph};
use crate::tape::{NodeRef, Tape};
use crate::tensor::Tensor;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    /// Embedding size.
    pub d: usize,
    /// Item feature vector length (must match the dataset).
    pub feature_dim: usize,
    /// Number of attention views in the compatibility head.
    pub r_views: usize,
    /// Hidden width of the attention and score projections.
    pub attn_hidden: usize,
    /// Hidden width of the category encoders.
    pub encoder_hidden: usize,
    /// LeakyReLU negative slope, in (0,1).
    pub leaky_slope: f64,
    /// Item-to-item propagation within outfits.
    pub enable_item_prop: bool,
    /// Item-to-outfit aggregation.
    pub enable_item_to_outfit: bool,
    /// Outfit-to-user aggregation.
    pub enable_outfit_to_user: bool,
    pub init_seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            d: 64,
            feature_dim: 8,
            r_views: 4,
            attn_hidden: 32,
            encoder_hidden: 128,
            leaky_slope: 0.2,
            enable_item_prop: true,
            enable_item_to_outfit: true,
            enable_outfit_to_user: true,
            init_seed: 42,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d < 1 || self.r_views < 1 || self.attn_hidden < 1 || self.encoder_hidden < 1 {
            return Err(Error::Config(
                "d, r_views, attn_hidden and encoder_hidden must be >= 1".into(),
            ));
        }
        if self.feature_dim < 1 {
            return Err(Error::Config("feature_dim must be >= 1".into()));
        }
        if !(self.leaky_slope > 0.0 && self.leaky_slope < 1.0) {
            return Err(Error::Config(format!(
                "leaky_slope must be in (0,1), got {}",
                self.leaky_slope
            )));
        }
        Ok(())
    }
}

/// Two-layer encoder weights for one category.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryEncoder {
    pub hidden_w: Tensor,
    pub hidden_b: Tensor,
    pub out_w: Tensor,
    pub out_b: Tensor,
}

/// All trainable state.
///
/// The embedding table stacks item rows first, then outfits, then users.
/// Item rows exist for layout completeness but the forward pass derives
/// item embeddings from the category encoders, so they stay at their
/// initial values.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub embedding: Tensor,
    pub encoders: Vec<CategoryEncoder>,
    /// Item-to-item message transform.
    pub item_prop: Tensor,
    /// Item-to-outfit message transform.
    pub outfit_agg: Tensor,
    /// Outfit-to-user message transform.
    pub user_agg: Tensor,
    /// Attention view mixing, `r_views x attn_hidden`.
    pub attn_views: Tensor,
    /// Attention input projection, `attn_hidden x d`.
    pub attn_proj: Tensor,
    /// Score view mixing, `r_views x attn_hidden`.
    pub score_views: Tensor,
    /// Score input projection, `attn_hidden x d`.
    pub score_proj: Tensor,
}

fn xavier(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    Tensor::from_vec(
        rows,
        cols,
        (0..rows * cols).map(|_| rng.gen_range(-bound..bound)).collect(),
    )
}

impl ModelParams {
    /// Xavier-uniform initialization, deterministic for a given seed.
    /// Encoder biases start at zero.
    pub fn init(config: &ModelConfig, counts: &EntityCounts) -> Result<Self> {
        config.validate()?;
        if counts.users == 0 || counts.outfits == 0 || counts.items == 0 {
            return Err(Error::Config(format!(
                "cannot initialize embeddings for zero entities (users={}, outfits={}, items={})",
                counts.users, counts.outfits, counts.items
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.init_seed);
        let total = counts.items + counts.outfits + counts.users;
        let embedding = xavier(&mut rng, total, config.d);
        let item_prop = xavier(&mut rng, config.d, config.d);
        let outfit_agg = xavier(&mut rng, config.d, config.d);
        let user_agg = xavier(&mut rng, config.d, config.d);
        let attn_views = xavier(&mut rng, config.r_views, config.attn_hidden);
        let attn_proj = xavier(&mut rng, config.attn_hidden, config.d);
        let score_views = xavier(&mut rng, config.r_views, config.attn_hidden);
        let score_proj = xavier(&mut rng, config.attn_hidden, config.d);
        let encoders = (0..counts.categories)
            .map(|_| CategoryEncoder {
                hidden_w: xavier(&mut rng, config.encoder_hidden, config.feature_dim),
                hidden_b: Tensor::zeros(config.encoder_hidden, 1),
                out_w: xavier(&mut rng, config.d, config.encoder_hidden),
                out_b: Tensor::zeros(config.d, 1),
            })
            .collect();
        Ok(ModelParams {
            embedding,
            encoders,
            item_prop,
            outfit_agg,
            user_agg,
            attn_views,
            attn_proj,
            score_views,
            score_proj,
        })
    }

    /// Canonical (name, tensor) listing; the order is the storage and
    /// optimizer-state order.
    pub fn named(&self) -> Vec<(String, &Tensor)> {
        let mut out: Vec<(String, &Tensor)> = vec![
            ("embedding".into(), &self.embedding),
            ("item_prop".into(), &self.item_prop),
            ("outfit_agg".into(), &self.outfit_agg),
            ("user_agg".into(), &self.user_agg),
            ("attn_views".into(), &self.attn_views),
            ("attn_proj".into(), &self.attn_proj),
            ("score_views".into(), &self.score_views),
            ("score_proj".into(), &self.score_proj),
        ];
        for (c, enc) in self.encoders.iter().enumerate() {
            out.push((format!("encoder_{c}_hidden_w"), &enc.hidden_w));
            out.push((format!("encoder_{c}_hidden_b"), &enc.hidden_b));
            out.push((format!("encoder_{c}_out_w"), &enc.out_w));
            out.push((format!("encoder_{c}_out_b"), &enc.out_b));
        }
        out
    }

    pub fn named_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let mut out: Vec<(String, &mut Tensor)> = vec![
            ("embedding".into(), &mut self.embedding),
            ("item_prop".into(), &mut self.item_prop),
            ("outfit_agg".into(), &mut self.outfit_agg),
            ("user_agg".into(), &mut self.user_agg),
            ("attn_views".into(), &mut self.attn_views),
            ("attn_proj".into(), &mut self.attn_proj),
            ("score_views".into(), &mut self.score_views),
            ("score_proj".into(), &mut self.score_proj),
        ];
        for (c, enc) in self.encoders.iter_mut().enumerate() {
            out.push((format!("encoder_{c}_hidden_w"), &mut enc.hidden_w));
            out.push((format!("encoder_{c}_hidden_b"), &mut enc.hidden_b));
            out.push((format!("encoder_{c}_out_w"), &mut enc.out_w));
            out.push((format!("encoder_{c}_out_b"), &mut enc.out_b));
        }
        out
    }

    /// Expected tensor shapes for a config and entity counts, used to
    /// validate checkpoints.
    pub fn expected_shapes(config: &ModelConfig, counts: &EntityCounts) -> Vec<(String, (usize, usize))> {
        let total = counts.items + counts.outfits + counts.users;
        let mut out = vec![
            ("embedding".to_string(), (total, config.d)),
            ("item_prop".to_string(), (config.d, config.d)),
            ("outfit_agg".to_string(), (config.d, config.d)),
            ("user_agg".to_string(), (config.d, config.d)),
            ("attn_views".to_string(), (config.r_views, config.attn_hidden)),
            ("attn_proj".to_string(), (config.attn_hidden, config.d)),
            ("score_views".to_string(), (config.r_views, config.attn_hidden)),
            ("score_proj".to_string(), (config.attn_hidden, config.d)),
        ];
        for c in 0..counts.categories {
            out.push((format!("encoder_{c}_hidden_w"), (config.encoder_hidden, config.feature_dim)));
            out.push((format!("encoder_{c}_hidden_b"), (config.encoder_hidden, 1)));
            out.push((format!("encoder_{c}_out_w"), (config.d, config.encoder_hidden)));
            out.push((format!("encoder_{c}_out_b"), (config.d, 1)));
        }
        out
    }
}

/// Config, entity counts and parameters bundled together.
#[derive(Debug, Clone)]
pub struct Model {
    pub config: ModelConfig,
    pub counts: EntityCounts,
    pub params: ModelParams,
}

impl Model {
    pub fn new(config: ModelConfig, counts: EntityCounts) -> Result<Self> {
        let params = ModelParams::init(&config, &counts)?;
        Ok(Model {
            config,
            counts,
            params,
        })
    }

    pub fn from_parts(config: ModelConfig, counts: EntityCounts, params: ModelParams) -> Self {
        Model {
            config,
            counts,
            params,
        }
    }

    /// Embedding table row of an item.
    pub fn item_row(&self, item: usize) -> usize {
        item
    }

    /// Embedding table row of an outfit.
    pub fn outfit_row(&self, outfit: usize) -> usize {
        self.counts.items + outfit
    }

    /// Embedding table row of a user.
    pub fn user_row(&self, user: usize) -> usize {
        self.counts.items + self.counts.outfits + user
    }
}

// ---------------------------------------------------------------------------
// Forward primitives. These operate on raw tape nodes so tests can drive
// them with hand-set weights.

/// Two-layer category encoder: `out_w * leaky(hidden_w * x + hidden_b) + out_b`.
pub fn encode_item(
    tape: &mut Tape,
    enc: &EncoderNodes,
    features: NodeRef,
    slope: f64,
) -> NodeRef {
    let h = tape.matmul(enc.hidden_w, features);
    let h = tape.add(h, enc.hidden_b);
    let h = tape.leaky_relu(h, slope);
    let e = tape.matmul(enc.out_w, h);
    tape.add(e, enc.out_b)
}

/// Item-to-item propagation within one outfit.
///
/// Each item receives `w(a,b) * leaky(W (i_a ⊙ i_b))` from every other item
/// and adds the message sum onto its own embedding. Zero-weight pairs are
/// skipped; their message is exactly zero.
pub fn propagate_items(
    tape: &mut Tape,
    items: &[NodeRef],
    graph: &OutfitItemGraph,
    transform: NodeRef,
    slope: f64,
) -> Vec<NodeRef> {
    assert_eq!(items.len(), graph.len(), "item node count must match graph");
    let n = items.len();
    (0..n)
        .map(|a| {
            let mut acc = items[a];
            for b in 0..n {
                if b == a {
                    continue;
                }
                let w = graph.weight(a, b);
                if w == 0.0 {
                    continue;
                }
                let prod = tape.hadamard(items[a], items[b]);
                let t = tape.matmul(transform, prod);
                let act = tape.leaky_relu(t, slope);
                let msg = tape.scale(act, w);
                acc = tape.add(acc, msg);
            }
            acc
        })
        .collect()
}

/// Item-to-outfit aggregation: `o + sum_i leaky(W i*) / n`.
pub fn propagate_outfit(
    tape: &mut Tape,
    outfit_emb: NodeRef,
    refined_items: &[NodeRef],
    transform: NodeRef,
    slope: f64,
) -> NodeRef {
    assert!(!refined_items.is_empty(), "outfit aggregation needs items");
    let norm = 1.0 / refined_items.len() as f64;
    let mut acc = outfit_emb;
    for &i in refined_items {
        let t = tape.matmul(transform, i);
        let act = tape.leaky_relu(t, slope);
        let msg = tape.scale(act, norm);
        acc = tape.add(acc, msg);
    }
    acc
}

/// Outfit-to-user aggregation: `u + sum_o leaky(W o*) / |history|`.
/// An empty history returns the user embedding unchanged.
pub fn propagate_user(
    tape: &mut Tape,
    user_emb: NodeRef,
    refined_outfits: &[NodeRef],
    transform: NodeRef,
    slope: f64,
) -> NodeRef {
    if refined_outfits.is_empty() {
        return user_emb;
    }
    let norm = 1.0 / refined_outfits.len() as f64;
    let mut acc = user_emb;
    for &o in refined_outfits {
        let t = tape.matmul(transform, o);
        let act = tape.leaky_relu(t, slope);
        let msg = tape.scale(act, norm);
        acc = tape.add(acc, msg);
    }
    acc
}

/// Inner product of the refined user and outfit representations.
pub fn recommendation_score(tape: &mut Tape, user_repr: NodeRef, outfit_repr: NodeRef) -> NodeRef {
    tape.dot(user_repr, outfit_repr)
}

/// Multi-view attention map over an outfit's refined items: each row is a
/// softmax over items.
pub fn attention_map(
    tape: &mut Tape,
    item_matrix: NodeRef,
    views: NodeRef,
    proj: NodeRef,
    slope: f64,
) -> NodeRef {
    let h = tape.matmul(proj, item_matrix);
    let h = tape.leaky_relu(h, slope);
    let logits = tape.matmul(views, h);
    tape.softmax_rows(logits)
}

/// Multi-view score map over an outfit's refined items.
pub fn score_map(
    tape: &mut Tape,
    item_matrix: NodeRef,
    views: NodeRef,
    proj: NodeRef,
    slope: f64,
) -> NodeRef {
    let h = tape.matmul(proj, item_matrix);
    let h = tape.leaky_relu(h, slope);
    let pre = tape.matmul(views, h);
    tape.leaky_relu(pre, slope)
}

/// Compatibility score of an item set: the attention-weighted sum of the
/// score map over all views.
pub fn compatibility_score(
    tape: &mut Tape,
    refined_items: &[NodeRef],
    attn_views: NodeRef,
    attn_proj: NodeRef,
    score_views: NodeRef,
    score_proj: NodeRef,
    slope: f64,
) -> NodeRef {
    assert!(!refined_items.is_empty(), "compatibility score needs items");
    let mat = tape.concat_cols(refined_items);
    let attn = attention_map(tape, mat, attn_views, attn_proj, slope);
    let scores = score_map(tape, mat, score_views, score_proj, slope);
    tape.dot(attn, scores)
}

/// Tape handles of every parameter tensor.
#[derive(Debug, Clone)]
pub struct ParamNodes {
    pub embedding: NodeRef,
    pub item_prop: NodeRef,
    pub outfit_agg: NodeRef,
    pub user_agg: NodeRef,
    pub attn_views: NodeRef,
    pub attn_proj: NodeRef,
    pub score_views: NodeRef,
    pub score_proj: NodeRef,
    pub encoders: Vec<EncoderNodes>,
}

#[derive(Debug, Clone, Copy)]
pub struct EncoderNodes {
    pub hidden_w: NodeRef,
    pub hidden_b: NodeRef,
    pub out_w: NodeRef,
    pub out_b: NodeRef,
}

impl ParamNodes {
    fn register(tape: &mut Tape, params: &ModelParams) -> Self {
        ParamNodes {
            embedding: tape.param(params.embedding.clone()),
            item_prop: tape.param(params.item_prop.clone()),
            outfit_agg: tape.param(params.outfit_agg.clone()),
            user_agg: tape.param(params.user_agg.clone()),
            attn_views: tape.param(params.attn_views.clone()),
            attn_proj: tape.param(params.attn_proj.clone()),
            score_views: tape.param(params.score_views.clone()),
            score_proj: tape.param(params.score_proj.clone()),
            encoders: params
                .encoders
                .iter()
                .map(|e| EncoderNodes {
                    hidden_w: tape.param(e.hidden_w.clone()),
                    hidden_b: tape.param(e.hidden_b.clone()),
                    out_w: tape.param(e.out_w.clone()),
                    out_b: tape.param(e.out_b.clone()),
                })
                .collect(),
        }
    }

    /// (name, node) pairs in the canonical parameter order.
    pub fn named(&self) -> Vec<(String, NodeRef)> {
        let mut out: Vec<(String, NodeRef)> = vec![
            ("embedding".into(), self.embedding),
            ("item_prop".into(), self.item_prop),
            ("outfit_agg".into(), self.outfit_agg),
            ("user_agg".into(), self.user_agg),
            ("attn_views".into(), self.attn_views),
            ("attn_proj".into(), self.attn_proj),
            ("score_views".into(), self.score_views),
            ("score_proj".into(), self.score_proj),
        ];
        for (c, enc) in self.encoders.iter().enumerate() {
            out.push((format!("encoder_{c}_hidden_w"), enc.hidden_w));
            out.push((format!("encoder_{c}_hidden_b"), enc.hidden_b));
            out.push((format!("encoder_{c}_out_w"), enc.out_w));
            out.push((format!("encoder_{c}_out_b"), enc.out_b));
        }
        out
    }
}

/// Differentiable forward pass over a training batch.
///
/// Item encodings, per-outfit refined states and user representations are
/// computed once per pass and shared by every score that touches them.
pub struct ForwardPass<'a> {
    model: &'a Model,
    graph: &'a HierarchicalGraph,
    categories: &'a CategoryGraph,
    features: &'a [Vec<f64>],
    pub tape: Tape,
    pub nodes: ParamNodes,
    row_cache: Vec<Option<NodeRef>>,
    item_enc: Vec<Option<NodeRef>>,
    outfit_refined: Vec<Option<Vec<NodeRef>>>,
    outfit_repr: Vec<Option<NodeRef>>,
    user_state: Vec<Option<NodeRef>>,
    rows_used: BTreeSet<usize>,
    cats_used: BTreeSet<usize>,
}

impl<'a> ForwardPass<'a> {
    pub fn new(
        model: &'a Model,
        graph: &'a HierarchicalGraph,
        categories: &'a CategoryGraph,
        features: &'a [Vec<f64>],
    ) -> Self {
        let mut tape = Tape::new();
        let nodes = ParamNodes::register(&mut tape, &model.params);
        ForwardPass {
            model,
            graph,
            categories,
            features,
            tape,
            nodes,
            row_cache: vec![None; model.params.embedding.rows()],
            item_enc: vec![None; graph.item_count()],
            outfit_refined: vec![None; graph.outfit_count()],
            outfit_repr: vec![None; graph.outfit_count()],
            user_state: vec![None; graph.user_count()],
            rows_used: BTreeSet::new(),
            cats_used: BTreeSet::new(),
        }
    }

    fn embedding_row(&mut self, row: usize) -> NodeRef {
        if let Some(n) = self.row_cache[row] {
            return n;
        }
        let n = self.tape.row_as_col(self.nodes.embedding, row);
        self.row_cache[row] = Some(n);
        self.rows_used.insert(row);
        n
    }

    pub fn item_encoding(&mut self, item: usize) -> NodeRef {
        if let Some(n) = self.item_enc[item] {
            return n;
        }
        let cat = self.graph.item_category[item];
        self.cats_used.insert(cat);
        let feat = self
            .tape
            .constant(Tensor::col(self.features[item].clone()));
        let enc = self.nodes.encoders[cat];
        let n = encode_item(&mut self.tape, &enc, feat, self.model.config.leaky_slope);
        self.item_enc[item] = Some(n);
        n
    }

    /// Refined item embeddings of an outfit, cached.
    pub fn refined_outfit_items(&mut self, outfit: usize) -> Vec<NodeRef> {
        if let Some(refined) = &self.outfit_refined[outfit] {
            return refined.clone();
        }
        let items: Vec<usize> = self.graph.outfit_items(outfit).to_vec();
        let encodings: Vec<NodeRef> = items.iter().map(|&i| self.item_encoding(i)).collect();
        let slope = self.model.config.leaky_slope;
        let refined = if self.model.config.enable_item_prop {
            let og = OutfitItemGraph::for_items(&items, &self.graph.item_category, self.categories)
                .expect("outfits in the graph are nonempty");
            propagate_items(&mut self.tape, &encodings, &og, self.nodes.item_prop, slope)
        } else {
            encodings
        };
        self.outfit_refined[outfit] = Some(refined.clone());
        refined
    }

    /// Outfit representation (ID embedding plus aggregated items), cached.
    pub fn outfit_repr(&mut self, outfit: usize) -> NodeRef {
        if let Some(n) = self.outfit_repr[outfit] {
            return n;
        }
        let refined = self.refined_outfit_items(outfit);
        let emb = self.embedding_row(self.model.outfit_row(outfit));
        let repr = if self.model.config.enable_item_to_outfit {
            propagate_outfit(
                &mut self.tape,
                emb,
                &refined,
                self.nodes.outfit_agg,
                self.model.config.leaky_slope,
            )
        } else {
            emb
        };
        self.outfit_repr[outfit] = Some(repr);
        repr
    }

    pub fn user_repr(&mut self, user: usize) -> NodeRef {
        if let Some(n) = self.user_state[user] {
            return n;
        }
        let emb = self.embedding_row(self.model.user_row(user));
        let n = if self.model.config.enable_outfit_to_user {
            let history: Vec<usize> = self.graph.user_history(user).to_vec();
            let outfit_reprs: Vec<NodeRef> =
                history.iter().map(|&o| self.outfit_repr(o)).collect();
            propagate_user(
                &mut self.tape,
                emb,
                &outfit_reprs,
                self.nodes.user_agg,
                self.model.config.leaky_slope,
            )
        } else {
            emb
        };
        self.user_state[user] = Some(n);
        n
    }

    pub fn rec_score(&mut self, user: usize, outfit: usize) -> NodeRef {
        let u = self.user_repr(user);
        let o = self.outfit_repr(outfit);
        recommendation_score(&mut self.tape, u, o)
    }

    pub fn compat_score_outfit(&mut self, outfit: usize) -> NodeRef {
        let refined = self.refined_outfit_items(outfit);
        compatibility_score(
            &mut self.tape,
            &refined,
            self.nodes.attn_views,
            self.nodes.attn_proj,
            self.nodes.score_views,
            self.nodes.score_proj,
            self.model.config.leaky_slope,
        )
    }

    /// Compatibility score of an ad-hoc composition (generated negatives,
    /// fill-in-the-blank candidates). Refined items are recomputed within
    /// the given composition.
    pub fn compat_score_items(&mut self, items: &[usize]) -> Result<NodeRef> {
        let og = OutfitItemGraph::for_items(items, &self.graph.item_category, self.categories)?;
        let encodings: Vec<NodeRef> = items.iter().map(|&i| self.item_encoding(i)).collect();
        let slope = self.model.config.leaky_slope;
        let refined = if self.model.config.enable_item_prop {
            propagate_items(&mut self.tape, &encodings, &og, self.nodes.item_prop, slope)
        } else {
            encodings
        };
        Ok(compatibility_score(
            &mut self.tape,
            &refined,
            self.nodes.attn_views,
            self.nodes.attn_proj,
            self.nodes.score_views,
            self.nodes.score_proj,
            slope,
        ))
    }

    /// Squared L2 norm of everything this pass touched: embedding rows in
    /// use, the propagation and head matrices, and the encoders of any
    /// category that was encoded.
    pub fn l2_penalty(&mut self) -> NodeRef {
        let mut acc: Option<NodeRef> = None;
        let rows: Vec<usize> = self.rows_used.iter().copied().collect();
        for row in rows {
            let r = self.embedding_row(row);
            let sq = self.tape.dot(r, r);
            acc = Some(match acc {
                Some(a) => self.tape.add(a, sq),
                None => sq,
            });
        }
        let mats = [
            self.nodes.item_prop,
            self.nodes.outfit_agg,
            self.nodes.user_agg,
            self.nodes.attn_views,
            self.nodes.attn_proj,
            self.nodes.score_views,
            self.nodes.score_proj,
        ];
        for m in mats {
            let sq = self.tape.dot(m, m);
            acc = Some(match acc {
                Some(a) => self.tape.add(a, sq),
                None => sq,
            });
        }
        let cats: Vec<usize> = self.cats_used.iter().copied().collect();
        for c in cats {
            let enc = self.nodes.encoders[c];
            for t in [enc.hidden_w, enc.hidden_b, enc.out_w, enc.out_b] {
                let sq = self.tape.dot(t, t);
                acc = Some(match acc {
                    Some(a) => self.tape.add(a, sq),
                    None => sq,
                });
            }
        }
        acc.expect("l2 penalty always covers the shared matrices")
    }

    /// Embedding rows referenced so far.
    pub fn rows_used(&self) -> &BTreeSet<usize> {
        &self.rows_used
    }

    pub fn cats_used(&self) -> &BTreeSet<usize> {
        &self.cats_used
    }
}

/// Frozen-parameter scorer with per-entity value caches.
///
/// Every representation is produced by the same primitive functions as the
/// training pass (run on throwaway tapes), so inference values match
/// training-forward values bit for bit.
pub struct InferenceEngine<'a> {
    model: &'a Model,
    graph: &'a HierarchicalGraph,
    categories: &'a CategoryGraph,
    features: &'a [Vec<f64>],
    item_enc: Vec<Option<Tensor>>,
    outfit_refined: Vec<Option<Vec<Tensor>>>,
    outfit_repr: Vec<Option<Tensor>>,
    user_state: Vec<Option<Tensor>>,
}

impl<'a> InferenceEngine<'a> {
    pub fn new(
        model: &'a Model,
        graph: &'a HierarchicalGraph,
        categories: &'a CategoryGraph,
        features: &'a [Vec<f64>],
    ) -> Self {
        InferenceEngine {
            model,
            graph,
            categories,
            features,
            item_enc: vec![None; graph.item_count()],
            outfit_refined: vec![None; graph.outfit_count()],
            outfit_repr: vec![None; graph.outfit_count()],
            user_state: vec![None; graph.user_count()],
        }
    }

    pub fn item_encoding(&mut self, item: usize) -> &Tensor {
        if self.item_enc[item].is_none() {
            let cat = self.graph.item_category[item];
            let slope = self.model.config.leaky_slope;
            let p = &self.model.params;
            let mut tape = Tape::new();
            let enc = EncoderNodes {
                hidden_w: tape.constant(p.encoders[cat].hidden_w.clone()),
                hidden_b: tape.constant(p.encoders[cat].hidden_b.clone()),
                out_w: tape.constant(p.encoders[cat].out_w.clone()),
                out_b: tape.constant(p.encoders[cat].out_b.clone()),
            };
            let feat = tape.constant(Tensor::col(self.features[item].clone()));
            let node = encode_item(&mut tape, &enc, feat, slope);
            self.item_enc[item] = Some(tape.value(node).clone());
        }
        self.item_enc[item].as_ref().unwrap()
    }

    fn refine_composition(&mut self, items: &[usize]) -> Result<Vec<Tensor>> {
        let encodings: Vec<Tensor> = items
            .iter()
            .map(|&i| self.item_encoding(i).clone())
            .collect();
        if !self.model.config.enable_item_prop {
            return Ok(encodings);
        }
        let og = OutfitItemGraph::for_items(items, &self.graph.item_category, self.categories)?;
        let slope = self.model.config.leaky_slope;
        let mut tape = Tape::new();
        let transform = tape.constant(self.model.params.item_prop.clone());
        let nodes: Vec<NodeRef> = encodings.into_iter().map(|e| tape.constant(e)).collect();
        let refined = propagate_items(&mut tape, &nodes, &og, transform, slope);
        Ok(refined.into_iter().map(|n| tape.value(n).clone()).collect())
    }

    /// Refined item embeddings of an outfit, cached.
    pub fn refined_outfit_items(&mut self, outfit: usize) -> &[Tensor] {
        if self.outfit_refined[outfit].is_none() {
            let items: Vec<usize> = self.graph.outfit_items(outfit).to_vec();
            let refined = self
                .refine_composition(&items)
                .expect("outfits in the graph are nonempty");
            self.outfit_refined[outfit] = Some(refined);
        }
        self.outfit_refined[outfit].as_ref().unwrap()
    }

    /// Outfit representation, cached.
    pub fn outfit_repr(&mut self, outfit: usize) -> &Tensor {
        if self.outfit_repr[outfit].is_none() {
            let refined = self.refined_outfit_items(outfit).to_vec();
            let emb = self
                .model
                .params
                .embedding
                .row_as_col(self.model.outfit_row(outfit));
            let repr = if self.model.config.enable_item_to_outfit {
                let slope = self.model.config.leaky_slope;
                let mut tape = Tape::new();
                let transform = tape.constant(self.model.params.outfit_agg.clone());
                let emb_node = tape.constant(emb);
                let refined_nodes: Vec<NodeRef> =
                    refined.into_iter().map(|t| tape.constant(t)).collect();
                let node =
                    propagate_outfit(&mut tape, emb_node, &refined_nodes, transform, slope);
                tape.value(node).clone()
            } else {
                emb
            };
            self.outfit_repr[outfit] = Some(repr);
        }
        self.outfit_repr[outfit].as_ref().unwrap()
    }

    pub fn user_repr(&mut self, user: usize) -> &Tensor {
        if self.user_state[user].is_none() {
            let emb = self
                .model
                .params
                .embedding
                .row_as_col(self.model.user_row(user));
            let repr = if self.model.config.enable_outfit_to_user {
                let history: Vec<usize> = self.graph.user_history(user).to_vec();
                let outfit_reprs: Vec<Tensor> = history
                    .iter()
                    .map(|&o| self.outfit_repr(o).clone())
                    .collect();
                let slope = self.model.config.leaky_slope;
                let mut tape = Tape::new();
                let transform = tape.constant(self.model.params.user_agg.clone());
                let emb_node = tape.constant(emb);
                let nodes: Vec<NodeRef> =
                    outfit_reprs.into_iter().map(|t| tape.constant(t)).collect();
                let node = propagate_user(&mut tape, emb_node, &nodes, transform, slope);
                tape.value(node).clone()
            } else {
                emb
            };
            self.user_state[user] = Some(repr);
        }
        self.user_state[user].as_ref().unwrap()
    }

    /// Recommendation score, computed as a plain dot product over cached
    /// representations.
    pub fn rec_score(&mut self, user: usize, outfit: usize) -> f64 {
        let o = self.outfit_repr(outfit).clone();
        let u = self.user_repr(user);
        u.hadamard(&o).sum()
    }

    pub fn compat_score_outfit(&mut self, outfit: usize) -> f64 {
        let refined = self.refined_outfit_items(outfit).to_vec();
        self.compat_from_refined(&refined)
    }

    /// Compatibility score of an ad-hoc composition.
    pub fn compat_score_items(&mut self, items: &[usize]) -> Result<f64> {
        let refined = self.refine_composition(items)?;
        Ok(self.compat_from_refined(&refined))
    }

    fn compat_from_refined(&self, refined: &[Tensor]) -> f64 {
        let p = &self.model.params;
        let mut tape = Tape::new();
        let attn_views = tape.constant(p.attn_views.clone());
        let attn_proj = tape.constant(p.attn_proj.clone());
        let score_views = tape.constant(p.score_views.clone());
        let score_proj = tape.constant(p.score_proj.clone());
        let nodes: Vec<NodeRef> = refined.iter().map(|t| tape.constant(t.clone())).collect();
        let node = compatibility_score(
            &mut tape,
            &nodes,
            attn_views,
            attn_proj,
            score_views,
            score_proj,
            self.model.config.leaky_slope,
        );
        tape.scalar_value(node)
    }
}
