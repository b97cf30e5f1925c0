//! Top-K ranking evaluation and the fill-in-the-blank protocol.
//!
//! Ranking uses the full candidate universe: every interacted outfit except
//! the ones the user's model was fitted on. Fill-in-the-blank masks one item
//! of a held-out outfit, adds three distractor items, and asks the
//! compatibility head to pick the original.

use std::collections::HashSet;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{DataSplit, Dataset};
use crate::graph::{CategoryGraph, HierarchicalGraph};
use crate::model::{InferenceEngine, Model};
use crate::{Error, Result};

/// Sorts candidates by score descending; ties broken by ascending outfit
/// index so rankings are deterministic.
pub fn rank_candidates(mut scored: Vec<(usize, f64)>) -> Vec<usize> {
    scored.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .expect("scores must be finite")
            .then(a.0.cmp(&b.0))
    });
    scored.into_iter().map(|(o, _)| o).collect()
}

/// 1.0 if any relevant outfit appears in the top `k` positions.
pub fn hit_rate(ranked: &[usize], relevant: &HashSet<usize>, k: usize) -> f64 {
    debug_assert!(k >= 1 && !relevant.is_empty());
    if ranked.iter().take(k).any(|o| relevant.contains(o)) {
        1.0
    } else {
        0.0
    }
}

/// (recall, precision) at `k`.
pub fn recall_precision(ranked: &[usize], relevant: &HashSet<usize>, k: usize) -> (f64, f64) {
    debug_assert!(k >= 1 && !relevant.is_empty());
    let hits = ranked.iter().take(k).filter(|o| relevant.contains(o)).count();
    (hits as f64 / relevant.len() as f64, hits as f64 / k as f64)
}

/// Binary-relevance NDCG with the ideal DCG truncated at
/// `min(|relevant|, k)`.
pub fn ndcg(ranked: &[usize], relevant: &HashSet<usize>, k: usize) -> f64 {
    debug_assert!(k >= 1 && !relevant.is_empty());
    let mut dcg = 0.0;
    for (pos, o) in ranked.iter().take(k).enumerate() {
        if relevant.contains(o) {
            dcg += 1.0 / ((pos + 2) as f64).log2();
        }
    }
    let ideal_hits = relevant.len().min(k);
    let mut idcg = 0.0;
    for pos in 0..ideal_hits {
        idcg += 1.0 / ((pos + 2) as f64).log2();
    }
    dcg / idcg
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserMetrics {
    pub user: usize,
    pub hr: f64,
    pub ndcg: f64,
    pub recall: f64,
    pub precision: f64,
}

/// Mean metrics over evaluated users plus the per-user breakdown.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub k: usize,
    pub hr: f64,
    pub ndcg: f64,
    pub recall: f64,
    pub precision: f64,
    pub per_user: Vec<UserMetrics>,
}

impl MetricsReport {
    pub fn user_count(&self) -> usize {
        self.per_user.len()
    }

    /// Human-readable summary table.
    pub fn render_table(&self) -> String {
        let k = self.k;
        format!(
            "metric\tvalue\n\
             hr@{k}\t{:.6}\n\
             ndcg@{k}\t{:.6}\n\
             recall@{k}\t{:.6}\n\
             precision@{k}\t{:.6}\n\
             users\t{}\n",
            self.hr,
            self.ndcg,
            self.recall,
            self.precision,
            self.user_count()
        )
    }

    /// Machine-readable key-value file, six decimal places.
    pub fn write_kv(&self, path: &Path) -> Result<()> {
        let k = self.k;
        let mut f = fs::File::create(path)?;
        write!(
            f,
            "hr@{k}\t{:.6}\nndcg@{k}\t{:.6}\nrecall@{k}\t{:.6}\nprecision@{k}\t{:.6}\n",
            self.hr, self.ndcg, self.recall, self.precision
        )?;
        Ok(())
    }
}

/// Which split supplies the relevant sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalTarget {
    /// Relevant = validation positives; candidates exclude fitted training
    /// interactions.
    Validation,
    /// Relevant = test positives; candidates exclude training and
    /// validation interactions.
    Test,
}

/// Ranks the candidate universe for every user with at least one relevant
/// outfit and averages the four metrics. Read-only on the model.
pub fn evaluate_topk(
    model: &Model,
    graph: &HierarchicalGraph,
    categories: &CategoryGraph,
    dataset: &Dataset,
    split: &DataSplit,
    target: EvalTarget,
    k: usize,
) -> Result<MetricsReport> {
    if k < 1 {
        return Err(Error::Config("k must be >= 1".into()));
    }
    let user_count = dataset.user_count();
    let train_by_user = DataSplit::by_user(&split.train, user_count);
    let val_by_user = DataSplit::by_user(&split.val, user_count);
    let test_by_user = DataSplit::by_user(&split.test, user_count);
    let universe = dataset.interacted_outfits();

    let mut engine = InferenceEngine::new(model, graph, categories, &dataset.features);
    let mut per_user = Vec::new();
    for user in 0..user_count {
        let relevant_list = match target {
            EvalTarget::Validation => &val_by_user[user],
            EvalTarget::Test => &test_by_user[user],
        };
        if relevant_list.is_empty() {
            continue;
        }
        let mut excluded: HashSet<usize> = train_by_user[user].iter().copied().collect();
        if target == EvalTarget::Test {
            excluded.extend(val_by_user[user].iter().copied());
        }
        let relevant: HashSet<usize> = relevant_list.iter().copied().collect();
        let scored: Vec<(usize, f64)> = universe
            .iter()
            .filter(|o| !excluded.contains(o))
            .map(|&o| (o, engine.rec_score(user, o)))
            .collect();
        if scored.is_empty() {
            continue;
        }
        let ranked = rank_candidates(scored);
        let (recall, precision) = recall_precision(&ranked, &relevant, k);
        per_user.push(UserMetrics {
            user,
            hr: hit_rate(&ranked, &relevant, k),
            ndcg: ndcg(&ranked, &relevant, k),
            recall,
            precision,
        });
    }

    if per_user.is_empty() {
        return Err(Error::Data("no evaluable users for this split".into()));
    }
    let n = per_user.len() as f64;
    Ok(MetricsReport {
        k,
        hr: per_user.iter().map(|m| m.hr).sum::<f64>() / n,
        ndcg: per_user.iter().map(|m| m.ndcg).sum::<f64>() / n,
        recall: per_user.iter().map(|m| m.recall).sum::<f64>() / n,
        precision: per_user.iter().map(|m| m.precision).sum::<f64>() / n,
        per_user,
    })
}

/// One fill-in-the-blank instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FitbQuery {
    pub outfit: usize,
    pub masked_pos: usize,
    pub truth: usize,
    pub distractors: [usize; 3],
    /// Presentation order of the four candidates.
    pub candidates: Vec<usize>,
    /// Seed of the candidate shuffle, kept for export reproducibility.
    pub seed: u64,
}

fn shuffle_candidates(truth: usize, distractors: &[usize; 3], seed: u64) -> Vec<usize> {
    let mut candidates = vec![truth, distractors[0], distractors[1], distractors[2]];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    candidates.shuffle(&mut rng);
    candidates
}

/// Builds `count` queries over the held-out pool. Each query masks a
/// uniformly chosen position and draws three distinct distractors from
/// outside the source outfit, uniformly over all items (or over the
/// masked item's category when `category_matched` is set).
pub fn build_fitb_queries(
    dataset: &Dataset,
    pool: &[usize],
    count: usize,
    master_seed: u64,
    category_matched: bool,
) -> Result<Vec<FitbQuery>> {
    if pool.is_empty() {
        return Err(Error::Data(
            "no held-out outfits available for fill-in-the-blank".into(),
        ));
    }
    let item_count = dataset.item_count();
    let items_by_category = dataset.items_by_category();
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    let mut queries = Vec::with_capacity(count);
    for _ in 0..count {
        let outfit = pool[rng.gen_range(0..pool.len())];
        let items = &dataset.outfit_items[outfit];
        let masked_pos = rng.gen_range(0..items.len());
        let truth = items[masked_pos];
        let in_outfit: HashSet<usize> = items.iter().copied().collect();

        let mut distractors = [0usize; 3];
        if category_matched {
            let cat = dataset.item_category[truth];
            let eligible: Vec<usize> = items_by_category[cat]
                .iter()
                .copied()
                .filter(|i| !in_outfit.contains(i))
                .collect();
            if eligible.len() < 3 {
                return Err(Error::Data(format!(
                    "category {cat} has only {} items outside the outfit; cannot draw 3 distractors",
                    eligible.len()
                )));
            }
            let mut chosen = HashSet::new();
            for d in distractors.iter_mut() {
                loop {
                    let cand = eligible[rng.gen_range(0..eligible.len())];
                    if chosen.insert(cand) {
                        *d = cand;
                        break;
                    }
                }
            }
        } else {
            if item_count.saturating_sub(in_outfit.len()) < 3 {
                return Err(Error::Data(
                    "item pool too small to draw 3 distractors".into(),
                ));
            }
            let mut chosen = HashSet::new();
            for d in distractors.iter_mut() {
                loop {
                    let cand = rng.gen_range(0..item_count);
                    if !in_outfit.contains(&cand) && chosen.insert(cand) {
                        *d = cand;
                        break;
                    }
                }
            }
        }

        let seed = rng.gen::<u64>();
        let candidates = shuffle_candidates(truth, &distractors, seed);
        queries.push(FitbQuery {
            outfit,
            masked_pos,
            truth,
            distractors,
            candidates,
            seed,
        });
    }
    Ok(queries)
}

/// Accuracy of an arbitrary composition scorer over a query set. The
/// predicted candidate is the argmax; ties resolve to the lowest item
/// index, making the result independent of presentation order.
pub fn fitb_accuracy_with<F>(
    outfit_items: &[Vec<usize>],
    queries: &[FitbQuery],
    mut score: F,
) -> Result<f64>
where
    F: FnMut(&[usize]) -> Result<f64>,
{
    assert!(!queries.is_empty(), "empty fill-in-the-blank query set");
    let mut correct = 0usize;
    for q in queries {
        let mut best: Option<(f64, usize)> = None;
        for &candidate in &q.candidates {
            let mut completed = outfit_items[q.outfit].clone();
            completed[q.masked_pos] = candidate;
            let s = score(&completed)?;
            let better = match best {
                None => true,
                Some((bs, bi)) => s > bs || (s == bs && candidate < bi),
            };
            if better {
                best = Some((s, candidate));
            }
        }
        if best.map(|(_, i)| i) == Some(q.truth) {
            correct += 1;
        }
    }
    Ok(correct as f64 / queries.len() as f64)
}

/// Fill-in-the-blank accuracy of the model's compatibility head. Candidate
/// completions are re-refined within their own composition.
pub fn fitb_accuracy(
    model: &Model,
    graph: &HierarchicalGraph,
    categories: &CategoryGraph,
    dataset: &Dataset,
    queries: &[FitbQuery],
) -> Result<f64> {
    let mut engine = InferenceEngine::new(model, graph, categories, &dataset.features);
    fitb_accuracy_with(&dataset.outfit_items, queries, |items| {
        engine.compat_score_items(items)
    })
}

/// Writes queries as line-delimited records:
/// `outfit TAB masked_pos TAB truth TAB d1 TAB d2 TAB d3 TAB seed`.
pub fn write_fitb_queries(path: &Path, dataset: &Dataset, queries: &[FitbQuery]) -> Result<()> {
    let mut f = fs::File::create(path)?;
    for q in queries {
        writeln!(
            f,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            dataset.index.outfits.name(q.outfit),
            q.masked_pos,
            dataset.index.items.name(q.truth),
            dataset.index.items.name(q.distractors[0]),
            dataset.index.items.name(q.distractors[1]),
            dataset.index.items.name(q.distractors[2]),
            q.seed,
        )?;
    }
    Ok(())
}

/// Reads queries written by [`write_fitb_queries`], restoring candidate
/// order from the recorded seed and validating consistency against the
/// dataset.
pub fn read_fitb_queries(path: &Path, dataset: &Dataset) -> Result<Vec<FitbQuery>> {
    let file = fs::File::open(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    let reader = BufReader::new(file);
    let mut queries = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |msg: String| Error::Parse {
            path: path.display().to_string(),
            line: lineno + 1,
            msg,
        };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 7 {
            return Err(parse_err(format!("expected 7 fields, got {}", fields.len())));
        }
        let outfit = dataset
            .index
            .outfits
            .index_of(fields[0])
            .ok_or_else(|| parse_err(format!("unknown outfit '{}'", fields[0])))?;
        let masked_pos: usize = fields[1]
            .parse()
            .map_err(|_| parse_err(format!("bad position '{}'", fields[1])))?;
        let item = |s: &str| {
            dataset
                .index
                .items
                .index_of(s)
                .ok_or_else(|| parse_err(format!("unknown item '{s}'")))
        };
        let truth = item(fields[2])?;
        let distractors = [item(fields[3])?, item(fields[4])?, item(fields[5])?];
        let seed: u64 = fields[6]
            .parse()
            .map_err(|_| parse_err(format!("bad seed '{}'", fields[6])))?;
        let items = &dataset.outfit_items[outfit];
        if masked_pos >= items.len() || items[masked_pos] != truth {
            return Err(parse_err(format!(
                "query inconsistent with outfit '{}'",
                fields[0]
            )));
        }
        let candidates = shuffle_candidates(truth, &distractors, seed);
        queries.push(FitbQuery {
            outfit,
            masked_pos,
            truth,
            distractors,
            candidates,
            seed,
        });
    }
    Ok(queries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_synthetic, SyntheticSpec};

    fn rel(items: &[usize]) -> HashSet<usize> {
        items.iter().copied().collect()
    }

    #[test]
    fn ranking_orders_by_score_then_index() {
        assert_eq!(rank_candidates(vec![(7, 0.5)]), vec![7]);
        assert_eq!(
            rank_candidates(vec![(3, 1.0), (1, 1.0), (2, 2.0)]),
            vec![2, 1, 3]
        );
    }

    #[test]
    fn hit_rate_boundaries() {
        let ranked: Vec<usize> = (0..20).collect();
        assert_eq!(hit_rate(&ranked, &rel(&[0]), 10), 1.0);
        assert_eq!(hit_rate(&ranked, &rel(&[10]), 10), 0.0);
    }

    #[test]
    fn recall_precision_cases() {
        let ranked: Vec<usize> = (0..20).collect();
        let (r, p) = recall_precision(&ranked, &rel(&[0]), 10);
        assert_eq!((r, p), (1.0, 0.1));
        let (r, p) = recall_precision(&ranked, &rel(&[50, 51]), 10);
        assert_eq!((r, p), (0.0, 0.0));
    }

    #[test]
    fn ndcg_reference_values() {
        let ranked: Vec<usize> = (0..20).collect();
        assert_eq!(ndcg(&ranked, &rel(&[0]), 10), 1.0);
        // single relevant at rank 3: 1/log2(4) = 0.5
        assert!((ndcg(&ranked, &rel(&[2]), 10) - 0.5).abs() < 1e-12);
        // all top-k relevant with |relevant| = k
        let all: Vec<usize> = (0..10).collect();
        assert!((ndcg(&ranked, &rel(&all), 10) - 1.0).abs() < 1e-12);
    }

    /// Exhaustive-scan oracle for all four metrics.
    fn oracle_metrics(
        ranked: &[usize],
        relevant: &HashSet<usize>,
        k: usize,
    ) -> (f64, f64, f64, f64) {
        let top: Vec<usize> = ranked.iter().take(k).copied().collect();
        let mut hits = 0;
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

    #[test]
    fn metrics_match_exhaustive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..500 {
            let n = rng.gen_range(1..=50usize);
            let mut scored: Vec<(usize, f64)> = (0..n)
                .map(|o| (o, (rng.gen::<f64>() * 8.0).round() / 8.0))
                .collect();
            scored.shuffle(&mut rng);
            let ranked = rank_candidates(scored);
            let rel_count = rng.gen_range(1..=n);
            let mut rel_items: Vec<usize> = (0..n).collect();
            rel_items.shuffle(&mut rng);
            let relevant: HashSet<usize> = rel_items.into_iter().take(rel_count).collect();
            let k = rng.gen_range(1..=12usize);
            let (hr_o, ndcg_o, rec_o, prec_o) = oracle_metrics(&ranked, &relevant, k);
            assert_eq!(hit_rate(&ranked, &relevant, k), hr_o);
            assert_eq!(ndcg(&ranked, &relevant, k), ndcg_o);
            let (r, p) = recall_precision(&ranked, &relevant, k);
            assert_eq!((r, p), (rec_o, prec_o));
            // bounds and per-user orderings
            assert!(ndcg_o >= 0.0 && ndcg_o <= 1.0);
            assert!(rec_o <= hr_o && prec_o <= hr_o);
        }
    }

    fn fitb_fixture() -> (Dataset, Vec<usize>) {
        let ds = generate_synthetic(&SyntheticSpec {
            users: 15,
            outfits: 25,
            items: 80,
            categories: 6,
            style_dim: 4,
            outfit_len_min: 2,
            outfit_len_max: 4,
            interactions_per_user: 5,
            fitb_holdout: 8,
            noise: 0.2,
            seed: 21,
        })
        .unwrap();
        let pool = ds.fitb_pool();
        (ds, pool)
    }

    #[test]
    fn fitb_queries_respect_constraints() {
        let (ds, pool) = fitb_fixture();
        let queries = build_fitb_queries(&ds, &pool, 500, 3, false).unwrap();
        assert_eq!(queries.len(), 500);
        for q in &queries {
            assert!(pool.contains(&q.outfit));
            let items = &ds.outfit_items[q.outfit];
            assert_eq!(items[q.masked_pos], q.truth);
            for d in q.distractors {
                assert!(!items.contains(&d), "distractor from the source outfit");
                assert_ne!(d, q.truth);
            }
            let mut sorted = q.candidates.clone();
            sorted.sort_unstable();
            let mut expect = vec![q.truth, q.distractors[0], q.distractors[1], q.distractors[2]];
            expect.sort_unstable();
            assert_eq!(sorted, expect);
        }
    }

    #[test]
    fn fitb_single_item_outfit_masks_position_zero() {
        let ds = generate_synthetic(&SyntheticSpec {
            users: 4,
            outfits: 6,
            items: 30,
            categories: 5,
            style_dim: 3,
            outfit_len_min: 1,
            outfit_len_max: 1,
            interactions_per_user: 2,
            fitb_holdout: 2,
            noise: 0.3,
            seed: 8,
        })
        .unwrap();
        let queries = build_fitb_queries(&ds, &ds.fitb_pool(), 20, 5, false).unwrap();
        assert!(queries.iter().all(|q| q.masked_pos == 0));
    }

    #[test]
    fn fitb_mask_position_is_uniform() {
        let ds = generate_synthetic(&SyntheticSpec {
            users: 6,
            outfits: 10,
            items: 60,
            categories: 4,
            style_dim: 3,
            outfit_len_min: 4,
            outfit_len_max: 4,
            interactions_per_user: 3,
            fitb_holdout: 4,
            noise: 0.2,
            seed: 13,
        })
        .unwrap();
        let queries = build_fitb_queries(&ds, &ds.fitb_pool(), 10_000, 11, false).unwrap();
        let mut counts = [0usize; 4];
        for q in &queries {
            counts[q.masked_pos] += 1;
        }
        let expect = 10_000.0 / 4.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - expect;
                d * d / expect
            })
            .sum();
        // chi-squared critical value at p = 0.01 for 3 degrees of freedom
        assert!(chi2 < 11.345, "chi2 {chi2}; counts {counts:?}");
    }

    #[test]
    fn fitb_oracle_scorer_reaches_full_accuracy() {
        let (ds, pool) = fitb_fixture();
        let queries = build_fitb_queries(&ds, &pool, 300, 9, false).unwrap();
        // score a completion by its best overlap with any held-out outfit;
        // the ground-truth completion matches its source outfit in full
        let acc = fitb_accuracy_with(&ds.outfit_items, &queries, |completed| {
            let comp: HashSet<usize> = completed.iter().copied().collect();
            let best = pool
                .iter()
                .map(|&o| {
                    ds.outfit_items[o]
                        .iter()
                        .filter(|i| comp.contains(i))
                        .count()
                })
                .max()
                .unwrap();
            Ok(best as f64)
        })
        .unwrap();
        assert_eq!(acc, 1.0);
    }

    /// Dataset whose held-out outfits draw items uniformly, so a tied
    /// argmax (lowest item index) has no systematic preference for the
    /// ground truth.
    fn uniform_fixture() -> Dataset {
        use crate::graph::RawRecords;
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let item_count = 40;
        let outfits: Vec<(String, Vec<String>)> = (0..12)
            .map(|o| {
                let mut items: Vec<usize> = (0..item_count).collect();
                items.shuffle(&mut rng);
                (
                    format!("o{o:02}"),
                    items[..4].iter().map(|i| format!("i{i:02}")).collect(),
                )
            })
            .collect();
        let raw = RawRecords {
            interactions: vec![],
            outfits,
            items: (0..item_count)
                .map(|i| (format!("i{i:02}"), format!("c{}", i % 2)))
                .collect(),
        };
        let features = (0..item_count)
            .map(|i| (format!("i{i:02}"), vec![0.0]))
            .collect();
        Dataset::from_raw(raw, features, "uniform fitb fixture".into()).unwrap()
    }

    #[test]
    fn fitb_constant_scorer_is_chance_level() {
        let ds = uniform_fixture();
        let pool = ds.fitb_pool();
        assert_eq!(pool.len(), 12);
        let queries = build_fitb_queries(&ds, &pool, 2000, 31, false).unwrap();
        let acc = fitb_accuracy_with(&ds.outfit_items, &queries, |_| Ok(0.0)).unwrap();
        assert!(
            (acc - 0.25).abs() < 0.03,
            "constant scorer accuracy {acc} not near chance"
        );
    }

    #[test]
    fn fitb_accuracy_ignores_candidate_order() {
        let (ds, pool) = fitb_fixture();
        let mut queries = build_fitb_queries(&ds, &pool, 200, 15, false).unwrap();
        let base = fitb_accuracy_with(&ds.outfit_items, &queries, |items| {
            Ok(items.iter().map(|&i| ds.features[i][0]).sum::<f64>())
        })
        .unwrap();
        for q in &mut queries {
            q.candidates.reverse();
        }
        let flipped = fitb_accuracy_with(&ds.outfit_items, &queries, |items| {
            Ok(items.iter().map(|&i| ds.features[i][0]).sum::<f64>())
        })
        .unwrap();
        assert_eq!(base, flipped);
    }

    #[test]
    fn fitb_round_trips_through_files() {
        let (ds, pool) = fitb_fixture();
        let queries = build_fitb_queries(&ds, &pool, 50, 27, false).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("queries.tsv");
        write_fitb_queries(&path, &ds, &queries).unwrap();
        let loaded = read_fitb_queries(&path, &ds).unwrap();
        assert_eq!(loaded, queries);
    }
}
