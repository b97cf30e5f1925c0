//! Synthetic dataset generator with planted structure.
//!
//! Every item carries a latent unit-norm style vector. Positive outfits pick
//! one item per category, biased toward a per-outfit style center, so items
//! within an outfit are style-coherent. Item features are the style vector
//! plus Gaussian noise, which makes the planted signal recoverable from
//! features alone. Users carry style preference vectors and interact with
//! the outfits whose centers they like best. A configurable pool of extra
//! outfits receives no interactions and serves as the held-out
//! fill-in-the-blank test set.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::Dataset;
use crate::graph::RawRecords;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub users: usize,
    /// Outfits that participate in interactions.
    pub outfits: usize,
    pub items: usize,
    pub categories: usize,
    /// Dimensionality of the latent style space; also the feature length.
    pub style_dim: usize,
    pub outfit_len_min: usize,
    pub outfit_len_max: usize,
    pub interactions_per_user: usize,
    /// Extra zero-interaction outfits reserved for compatibility evaluation.
    pub fitb_holdout: usize,
    /// Noise level in [0,1]: feature corruption and sampling temperature.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            users: 200,
            outfits: 300,
            items: 500,
            categories: 8,
            style_dim: 8,
            outfit_len_min: 3,
            outfit_len_max: 5,
            interactions_per_user: 15,
            fitb_holdout: 30,
            noise: 0.1,
            seed: 42,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.users < 1 || self.outfits < 1 || self.items < 1 || self.categories < 1 {
            return Err(Error::Config("synthetic counts must be >= 1".into()));
        }
        if self.style_dim < 1 {
            return Err(Error::Config("style_dim must be >= 1".into()));
        }
        if self.outfit_len_min < 1 || self.outfit_len_min > self.outfit_len_max {
            return Err(Error::Config(format!(
                "invalid outfit length range [{}, {}]",
                self.outfit_len_min, self.outfit_len_max
            )));
        }
        if self.outfit_len_max > self.categories {
            return Err(Error::Config(format!(
                "outfit length {} exceeds category count {} (one item per category)",
                self.outfit_len_max, self.categories
            )));
        }
        if self.items < self.categories {
            return Err(Error::Config("need at least one item per category".into()));
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return Err(Error::Config(format!("noise must be in [0,1], got {}", self.noise)));
        }
        if self.interactions_per_user < 1 || self.interactions_per_user > self.outfits {
            return Err(Error::Config(format!(
                "interactions_per_user {} out of range 1..={}",
                self.interactions_per_user, self.outfits
            )));
        }
        Ok(())
    }
}

/// Standard normal draw via Box-Muller, driven by the given rng.
fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn unit_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| gaussian(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.iter().map(|x| x / norm).collect();
        }
    }
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Samples an index with probability proportional to `exp(score / tau)`.
/// As `tau` approaches zero this degenerates to argmax.
fn sample_softmax(rng: &mut ChaCha8Rng, scores: &[f64], tau: f64) -> usize {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if tau < 1e-9 {
        // deterministic argmax, first occurrence wins
        return scores.iter().position(|&s| s == max).unwrap();
    }
    let weights: Vec<f64> = scores.iter().map(|&s| ((s - max) / tau).exp()).collect();
    let total: f64 = weights.iter().sum();
    let mut draw = rng.gen::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        draw -= w;
        if draw <= 0.0 {
            return i;
        }
    }
    weights.len() - 1
}

fn pad_width(count: usize) -> usize {
    count.max(1).to_string().len().max(3)
}

/// Generates a planted-structure dataset. Deterministic for a given spec.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let k = spec.categories;
    let total_outfits = spec.outfits + spec.fitb_holdout;

    let uw = pad_width(spec.users);
    let ow = pad_width(total_outfits);
    let iw = pad_width(spec.items);
    let cw = pad_width(k);

    // items: balanced categories, unit style vectors, noisy features
    let item_category: Vec<usize> = (0..spec.items).map(|i| i % k).collect();
    let styles: Vec<Vec<f64>> = (0..spec.items)
        .map(|_| unit_vector(&mut rng, spec.style_dim))
        .collect();
    let features: Vec<Vec<f64>> = styles
        .iter()
        .map(|s| {
            s.iter()
                .map(|&v| v + spec.noise * gaussian(&mut rng))
                .collect()
        })
        .collect();

    let mut items_by_category = vec![Vec::new(); k];
    for (i, &c) in item_category.iter().enumerate() {
        items_by_category[c].push(i);
    }

    // outfits: choose categories, then one style-coherent item per category
    let mut outfit_items = Vec::with_capacity(total_outfits);
    let mut outfit_centers = Vec::with_capacity(total_outfits);
    let mut cats: Vec<usize> = (0..k).collect();
    for _ in 0..total_outfits {
        let len = rng.gen_range(spec.outfit_len_min..=spec.outfit_len_max);
        // partial Fisher-Yates for a uniform category subset
        for pos in 0..len {
            let j = rng.gen_range(pos..k);
            cats.swap(pos, j);
        }
        let mut chosen: Vec<usize> = cats[..len].to_vec();
        chosen.sort_unstable();
        let center = unit_vector(&mut rng, spec.style_dim);
        let items: Vec<usize> = chosen
            .iter()
            .map(|&c| {
                let pool = &items_by_category[c];
                let scores: Vec<f64> = pool.iter().map(|&i| cosine(&styles[i], &center)).collect();
                pool[sample_softmax(&mut rng, &scores, spec.noise)]
            })
            .collect();
        outfit_items.push(items);
        outfit_centers.push(center);
    }

    // users: style preferences, interactions with best-scoring outfits
    let mut interactions = Vec::with_capacity(spec.users * spec.interactions_per_user);
    for u in 0..spec.users {
        let pref = unit_vector(&mut rng, spec.style_dim);
        let mut scored: Vec<(f64, usize)> = (0..spec.outfits)
            .map(|o| {
                let s = cosine(&pref, &outfit_centers[o]) + spec.noise * gaussian(&mut rng);
                (s, o)
            })
            .collect();
        scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        for &(_, o) in scored.iter().take(spec.interactions_per_user) {
            interactions.push((u, o));
        }
    }

    let raw = RawRecords {
        interactions: interactions
            .iter()
            .map(|&(u, o)| (format!("u{u:0uw$}"), format!("o{o:0ow$}")))
            .collect(),
        outfits: outfit_items
            .iter()
            .enumerate()
            .map(|(o, items)| {
                (
                    format!("o{o:0ow$}"),
                    items.iter().map(|&i| format!("i{i:0iw$}")).collect(),
                )
            })
            .collect(),
        items: item_category
            .iter()
            .enumerate()
            .map(|(i, &c)| (format!("i{i:0iw$}"), format!("c{c:0cw$}")))
            .collect(),
    };
    let feature_records = features
        .into_iter()
        .enumerate()
        .map(|(i, f)| (format!("i{i:0iw$}"), f))
        .collect();

    Dataset::from_raw(
        raw,
        feature_records,
        format!("synthetic seed={} noise={}", spec.seed, spec.noise),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_is_deterministic() {
        let spec = SyntheticSpec {
            users: 20,
            outfits: 30,
            items: 60,
            categories: 6,
            interactions_per_user: 5,
            fitb_holdout: 5,
            ..SyntheticSpec::default()
        };
        let a = generate_synthetic(&spec).unwrap();
        let b = generate_synthetic(&spec).unwrap();
        assert_eq!(a.interactions, b.interactions);
        assert_eq!(a.outfit_items, b.outfit_items);
        assert_eq!(a.features, b.features);
    }

    #[test]
    fn generated_files_are_bit_identical() {
        let spec = SyntheticSpec {
            users: 10,
            outfits: 15,
            items: 30,
            categories: 5,
            interactions_per_user: 4,
            fitb_holdout: 3,
            seed: 7,
            ..SyntheticSpec::default()
        };
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        generate_synthetic(&spec).unwrap().save(d1.path()).unwrap();
        generate_synthetic(&spec).unwrap().save(d2.path()).unwrap();
        for file in ["interactions.tsv", "outfits.tsv", "items.tsv", "features.bin"] {
            let a = std::fs::read(d1.path().join(file)).unwrap();
            let b = std::fs::read(d2.path().join(file)).unwrap();
            assert_eq!(a, b, "{file} differs between runs");
        }
    }

    #[test]
    fn noise_free_outfits_are_style_coherent() {
        let spec = SyntheticSpec {
            users: 30,
            outfits: 60,
            items: 200,
            categories: 8,
            noise: 0.0,
            interactions_per_user: 6,
            fitb_holdout: 6,
            seed: 5,
            ..SyntheticSpec::default()
        };
        let ds = generate_synthetic(&spec).unwrap();
        // with zero noise, features equal the latent styles
        let mut within = Vec::new();
        for items in &ds.outfit_items {
            for a in 0..items.len() {
                for b in a + 1..items.len() {
                    within.push(cosine(&ds.features[items[a]], &ds.features[items[b]]));
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut random_pairs = Vec::new();
        for _ in 0..2000 {
            let a = rng.gen_range(0..ds.item_count());
            let b = rng.gen_range(0..ds.item_count());
            if a != b {
                random_pairs.push(cosine(&ds.features[a], &ds.features[b]));
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let (mw, mr) = (mean(&within), mean(&random_pairs));
        assert!(
            mw - mr >= 0.2,
            "planted signal too weak: within {mw:.3} vs random {mr:.3}"
        );
    }

    #[test]
    fn generated_graph_validates_cleanly() {
        let ds = generate_synthetic(&SyntheticSpec::default()).unwrap();
        assert_eq!(ds.user_count(), 200);
        assert_eq!(ds.outfit_count(), 330);
        assert_eq!(ds.item_count(), 500);
        assert_eq!(ds.category_count(), 8);
        assert_eq!(ds.fitb_pool().len(), 30);
        let graph = ds.hierarchical_graph(&ds.interactions);
        let report = graph.validate();
        assert!(report.is_clean(), "{report}");
        // one item per category within each outfit
        for items in &ds.outfit_items {
            let mut cats: Vec<usize> = items.iter().map(|&i| ds.item_category[i]).collect();
            cats.sort_unstable();
            cats.dedup();
            assert_eq!(cats.len(), items.len());
        }
    }

    #[test]
    fn infeasible_spec_is_rejected() {
        let spec = SyntheticSpec {
            categories: 3,
            outfit_len_min: 4,
            outfit_len_max: 5,
            ..SyntheticSpec::default()
        };
        assert!(generate_synthetic(&spec).is_err());
    }
}
