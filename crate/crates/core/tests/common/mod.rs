//! Shared fixtures and independent oracles for the integration suites.
//! Oracles are deliberately written as naive scans, separate from the
//! library's implementation paths.

use std::collections::HashSet;

use hfgn::data::Dataset;
use hfgn::graph::RawRecords;
use hfgn::model::{CategoryEncoder, ModelParams};
use hfgn::tensor::Tensor;

/// Builds a dense dataset from interaction pairs and explicit compositions.
pub fn dataset_from_parts(
    interactions: &[(usize, usize)],
    outfit_items: &[Vec<usize>],
    item_category: &[usize],
    category_count: usize,
    features: &[Vec<f64>],
) -> Dataset {
    let raw = RawRecords {
        interactions: interactions
            .iter()
            .map(|&(u, o)| (format!("u{u:04}"), format!("o{o:04}")))
            .collect(),
        outfits: outfit_items
            .iter()
            .enumerate()
            .map(|(o, items)| {
                (
                    format!("o{o:04}"),
                    items.iter().map(|&i| format!("i{i:04}")).collect(),
                )
            })
            .collect(),
        items: item_category
            .iter()
            .enumerate()
            .map(|(i, &c)| (format!("i{i:04}"), format!("c{c:04}")))
            .collect(),
    };
    assert!(category_count >= item_category.iter().map(|&c| c + 1).max().unwrap_or(0));
    let feature_records = features
        .iter()
        .enumerate()
        .map(|(i, f)| (format!("i{i:04}"), f.clone()))
        .collect();
    Dataset::from_raw(raw, feature_records, "test fixture".into()).unwrap()
}

/// Brute-force category co-occurrence counts: for every ordered category
/// pair, scan every outfit and count membership directly.
pub fn oracle_category_counts(
    outfit_items: &[Vec<usize>],
    item_category: &[usize],
    k: usize,
) -> (Vec<Vec<u64>>, Vec<u64>) {
    let mut cooccur = vec![vec![0u64; k]; k];
    let mut freq = vec![0u64; k];
    for items in outfit_items {
        for &i in items {
            freq[item_category[i]] += 1;
        }
    }
    for c in 0..k {
        for c2 in 0..k {
            for items in outfit_items {
                let n_c = items.iter().filter(|&&i| item_category[i] == c).count();
                let n_c2 = items.iter().filter(|&&i| item_category[i] == c2).count();
                let present = if c == c2 {
                    n_c >= 2
                } else {
                    n_c >= 1 && n_c2 >= 1
                };
                if present {
                    cooccur[c][c2] += 1;
                }
            }
        }
    }
    (cooccur, freq)
}

/// Normalized weights computed straight from the formula on oracle counts.
pub fn oracle_category_weights(cooccur: &[Vec<u64>], freq: &[u64], k: usize) -> Vec<Vec<f64>> {
    let mut weights = vec![vec![0.0; k]; k];
    for c in 0..k {
        let denom: f64 = (0..k)
            .filter(|&c2| freq[c2] > 0)
            .map(|c2| cooccur[c][c2] as f64 / freq[c2] as f64)
            .sum();
        if denom > 0.0 {
            for c2 in 0..k {
                if freq[c2] > 0 {
                    weights[c][c2] = (cooccur[c][c2] as f64 / freq[c2] as f64) / denom;
                }
            }
        }
    }
    weights
}

/// Exhaustive-scan ranking metrics: (hr, ndcg, recall, precision).
pub fn oracle_ranking_metrics(
    ranked: &[usize],
    relevant: &HashSet<usize>,
    k: usize,
) -> (f64, f64, f64, f64) {
    let top: Vec<usize> = ranked.iter().take(k).copied().collect();
    let mut hits = 0usize;
    let mut dcg = 0.0;
    for (pos, o) in top.iter().enumerate() {
        if relevant.iter().any(|r| r == o) {
            hits += 1;
            dcg += 1.0 / ((pos + 2) as f64).log2();
        }
    }
    let mut idcg = 0.0;
    for pos in 0..relevant.len().min(k) {
        idcg += 1.0 / ((pos + 2) as f64).log2();
    }
    (
        if hits > 0 { 1.0 } else { 0.0 },
        dcg / idcg,
        hits as f64 / relevant.len() as f64,
        hits as f64 / k as f64,
    )
}

/// Naive repeated-scan k-core fixed point; returns survivor masks.
pub fn oracle_kcore(
    interactions: &[(usize, usize)],
    users: usize,
    outfits: usize,
    min_user: usize,
    min_outfit: usize,
) -> (Vec<bool>, Vec<bool>) {
    let mut ua = vec![true; users];
    let mut oa = vec![true; outfits];
    loop {
        let mut changed = false;
        for u in 0..users {
            if ua[u] {
                let deg = interactions.iter().filter(|&&(x, o)| x == u && oa[o]).count();
                if deg < min_user {
                    ua[u] = false;
                    changed = true;
                }
            }
        }
        for o in 0..outfits {
            if oa[o] {
                let deg = interactions.iter().filter(|&&(u, x)| x == o && ua[u]).count();
                if deg < min_outfit {
                    oa[o] = false;
                    changed = true;
                }
            }
        }
        if !changed {
            return (ua, oa);
        }
    }
}

/// Rebuilds parameters from the canonical tensor order (eight shared
/// tensors, then four per category). Used by gradient checks that perturb
/// flattened parameter lists.
pub fn params_from_list(categories: usize, tensors: &[Tensor]) -> ModelParams {
    assert_eq!(tensors.len(), 8 + 4 * categories);
    let mut it = tensors.iter().cloned();
    let mut next = || it.next().unwrap();
    ModelParams {
        embedding: next(),
        item_prop: next(),
        outfit_agg: next(),
        user_agg: next(),
        attn_views: next(),
        attn_proj: next(),
        score_views: next(),
        score_proj: next(),
        encoders: (0..categories)
            .map(|_| CategoryEncoder {
                hidden_w: next(),
                hidden_b: next(),
                out_w: next(),
                out_b: next(),
            })
            .collect(),
    }
}
