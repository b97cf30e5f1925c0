//! Dataset ingestion, validation, k-core filtering and per-user splitting.
//!
//! On-disk layout of a dataset directory:
//!
//! - `interactions.tsv` — `user_id TAB outfit_id`, one pair per line
//! - `outfits.tsv` — `outfit_id TAB item_id,item_id,...` (order preserved)
//! - `items.tsv` — `item_id TAB category_id`
//! - `features.bin` — binary: 8-byte magic `HFGNFT01`, `u32` item count,
//!   `u32` feature dim, then per item a `u32` length-prefixed id string
//!   followed by `feature_dim` little-endian `f64` values

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::{build_entity_index, EntityIndex, HierarchicalGraph, RawRecords};
use crate::{Error, Result};

const FEATURE_MAGIC: &[u8; 8] = b"HFGNFT01";

/// Fully validated in-memory dataset with dense indices.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub index: EntityIndex,
    /// Deduplicated (user, outfit) pairs, sorted.
    pub interactions: Vec<(usize, usize)>,
    /// Ordered item list per outfit.
    pub outfit_items: Vec<Vec<usize>>,
    /// Category per item.
    pub item_category: Vec<usize>,
    /// Feature vector per item, uniform length.
    pub features: Vec<Vec<f64>>,
    pub feature_dim: usize,
    pub provenance: String,
}

impl Dataset {
    pub fn user_count(&self) -> usize {
        self.index.users.len()
    }

    pub fn outfit_count(&self) -> usize {
        self.index.outfits.len()
    }

    pub fn item_count(&self) -> usize {
        self.index.items.len()
    }

    pub fn category_count(&self) -> usize {
        self.index.categories.len()
    }

    /// Outfits with at least one interaction, ascending. These form the
    /// recommendation universe (negative sampling and ranking candidates).
    pub fn interacted_outfits(&self) -> Vec<usize> {
        let mut seen = vec![false; self.outfit_count()];
        for &(_, o) in &self.interactions {
            seen[o] = true;
        }
        (0..self.outfit_count()).filter(|&o| seen[o]).collect()
    }

    /// Outfits nobody interacted with; they serve as the held-out pool for
    /// fill-in-the-blank evaluation.
    pub fn fitb_pool(&self) -> Vec<usize> {
        let mut seen = vec![false; self.outfit_count()];
        for &(_, o) in &self.interactions {
            seen[o] = true;
        }
        (0..self.outfit_count()).filter(|&o| !seen[o]).collect()
    }

    /// Items of each category, ascending per category.
    pub fn items_by_category(&self) -> Vec<Vec<usize>> {
        let mut by_cat = vec![Vec::new(); self.category_count()];
        for (i, &c) in self.item_category.iter().enumerate() {
            by_cat[c].push(i);
        }
        by_cat
    }

    /// Builds the three-level graph over the given interaction subset
    /// (typically the training split).
    pub fn hierarchical_graph(&self, interactions: &[(usize, usize)]) -> HierarchicalGraph {
        HierarchicalGraph::new(
            self.user_count(),
            interactions,
            self.outfit_items.clone(),
            self.item_category.clone(),
            self.category_count(),
        )
    }

    /// Validates raw records and densifies them into a dataset.
    pub fn from_raw(
        raw: RawRecords,
        features: Vec<(String, Vec<f64>)>,
        provenance: String,
    ) -> Result<Self> {
        let index = build_entity_index(&raw)?;

        let mut interactions = Vec::with_capacity(raw.interactions.len());
        for (u, o) in &raw.interactions {
            let ui = index.users.index_of(u).expect("user from interactions");
            let oi = index.outfits.index_of(o).ok_or_else(|| {
                Error::Data(format!("interaction of user '{u}' references unknown outfit '{o}'"))
            })?;
            interactions.push((ui, oi));
        }
        interactions.sort_unstable();
        interactions.dedup();

        let mut outfit_items = vec![Vec::new(); index.outfits.len()];
        for (o, items) in &raw.outfits {
            let oi = index.outfits.index_of(o).expect("outfit from records");
            let mut dense = Vec::with_capacity(items.len());
            for item in items {
                let ii = index.items.index_of(item).ok_or_else(|| {
                    Error::Data(format!("outfit '{o}' references unknown item '{item}'"))
                })?;
                dense.push(ii);
            }
            if dense.is_empty() {
                return Err(Error::Data(format!("outfit '{o}' has no items")));
            }
            outfit_items[oi] = dense;
        }

        let mut item_category = vec![0usize; index.items.len()];
        for (item, cat) in &raw.items {
            let ii = index.items.index_of(item).expect("item from records");
            let ci = index.categories.index_of(cat).expect("category from records");
            item_category[ii] = ci;
        }

        let mut feature_table: Vec<Option<Vec<f64>>> = vec![None; index.items.len()];
        let mut feature_dim = None;
        for (item, vec) in features {
            let ii = index.items.index_of(&item).ok_or_else(|| {
                Error::Data(format!("feature vector for unknown item '{item}'"))
            })?;
            match feature_dim {
                None => feature_dim = Some(vec.len()),
                Some(d) if d != vec.len() => {
                    return Err(Error::Data(format!(
                        "inconsistent feature length for item '{item}': expected {d}, got {}",
                        vec.len()
                    )));
                }
                Some(_) => {}
            }
            if feature_table[ii].is_some() {
                return Err(Error::Data(format!("duplicate feature vector for item '{item}'")));
            }
            feature_table[ii] = Some(vec);
        }
        let mut dense_features = Vec::with_capacity(index.items.len());
        for (ii, slot) in feature_table.into_iter().enumerate() {
            match slot {
                Some(v) => dense_features.push(v),
                None => {
                    return Err(Error::Data(format!(
                        "item '{}' has no feature vector",
                        index.items.name(ii)
                    )));
                }
            }
        }

        Ok(Dataset {
            index,
            interactions,
            outfit_items,
            item_category,
            features: dense_features,
            feature_dim: feature_dim.unwrap_or(0),
            provenance,
        })
    }

    /// Writes the dataset into a directory using the standard file layout.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;

        let mut w = BufWriter::new(fs::File::create(dir.join("interactions.tsv"))?);
        for &(u, o) in &self.interactions {
            writeln!(w, "{}\t{}", self.index.users.name(u), self.index.outfits.name(o))?;
        }
        w.flush()?;

        let mut w = BufWriter::new(fs::File::create(dir.join("outfits.tsv"))?);
        for (o, items) in self.outfit_items.iter().enumerate() {
            let joined: Vec<&str> = items.iter().map(|&i| self.index.items.name(i)).collect();
            writeln!(w, "{}\t{}", self.index.outfits.name(o), joined.join(","))?;
        }
        w.flush()?;

        let mut w = BufWriter::new(fs::File::create(dir.join("items.tsv"))?);
        for (i, &c) in self.item_category.iter().enumerate() {
            writeln!(w, "{}\t{}", self.index.items.name(i), self.index.categories.name(c))?;
        }
        w.flush()?;

        let mut w = BufWriter::new(fs::File::create(dir.join("features.bin"))?);
        w.write_all(FEATURE_MAGIC)?;
        w.write_all(&(self.item_count() as u32).to_le_bytes())?;
        w.write_all(&(self.feature_dim as u32).to_le_bytes())?;
        for (i, feat) in self.features.iter().enumerate() {
            let name = self.index.items.name(i).as_bytes();
            w.write_all(&(name.len() as u32).to_le_bytes())?;
            w.write_all(name)?;
            for v in feat {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Loads and validates a dataset directory.
pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let interactions = parse_pairs(&dir.join("interactions.tsv"))?;
    let outfits = parse_outfits(&dir.join("outfits.tsv"))?;
    let items = parse_pairs(&dir.join("items.tsv"))?;
    let features = read_features(&dir.join("features.bin"))?;
    Dataset::from_raw(
        RawRecords {
            interactions,
            outfits,
            items,
        },
        features,
        format!("loaded from {}", dir.display()),
    )
}

fn open(path: &Path) -> Result<fs::File> {
    fs::File::open(path).map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))
}

fn parse_pairs(path: &Path) -> Result<Vec<(String, String)>> {
    let reader = BufReader::new(open(path)?);
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.splitn(2, '\t');
        let a = parts.next().unwrap_or("").trim();
        let b = parts.next().unwrap_or("").trim();
        if a.is_empty() || b.is_empty() {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                msg: "expected two tab-separated fields".into(),
            });
        }
        out.push((a.to_string(), b.to_string()));
    }
    Ok(out)
}

fn parse_outfits(path: &Path) -> Result<Vec<(String, Vec<String>)>> {
    let pairs = parse_pairs(path)?;
    let mut out = Vec::with_capacity(pairs.len());
    for (lineno, (outfit, items)) in pairs.into_iter().enumerate() {
        let list: Vec<String> = items
            .split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect();
        if list.is_empty() {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                msg: format!("outfit '{outfit}' lists no items"),
            });
        }
        out.push((outfit, list));
    }
    Ok(out)
}

fn read_features(path: &Path) -> Result<Vec<(String, Vec<f64>)>> {
    let mut reader = BufReader::new(open(path)?);
    let bad = |msg: &str| Error::Data(format!("{}: {msg}", path.display()));

    let mut magic = [0u8; 8];
    reader
        .read_exact(&mut magic)
        .map_err(|_| bad("truncated feature file"))?;
    if &magic != FEATURE_MAGIC {
        return Err(bad("unrecognized feature file magic"));
    }
    let count = read_u32(&mut reader).map_err(|_| bad("truncated feature file"))? as usize;
    let dim = read_u32(&mut reader).map_err(|_| bad("truncated feature file"))? as usize;

    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = read_u32(&mut reader).map_err(|_| bad("truncated feature file"))? as usize;
        let mut name = vec![0u8; name_len];
        reader
            .read_exact(&mut name)
            .map_err(|_| bad("truncated feature file"))?;
        let name =
            String::from_utf8(name).map_err(|_| bad("feature file item id is not UTF-8"))?;
        let mut vec = Vec::with_capacity(dim);
        let mut buf = [0u8; 8];
        for _ in 0..dim {
            reader
                .read_exact(&mut buf)
                .map_err(|_| bad("truncated feature file"))?;
            vec.push(f64::from_le_bytes(buf));
        }
        out.push((name, vec));
    }
    Ok(out)
}

fn read_u32(reader: &mut impl Read) -> std::io::Result<u32> {
    let mut buf = [0u8; 4];
    reader.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

/// Iteratively removes users below `min_user_inter` and outfits below
/// `min_outfit_inter` until both thresholds hold simultaneously, then drops
/// items that no longer appear in any outfit.
pub fn kcore_filter(ds: &Dataset, min_user_inter: usize, min_outfit_inter: usize) -> Result<Dataset> {
    assert!(min_user_inter >= 1 && min_outfit_inter >= 1, "thresholds must be >= 1");
    let mut user_alive = vec![true; ds.user_count()];
    let mut outfit_alive = vec![true; ds.outfit_count()];

    loop {
        let mut changed = false;
        let mut user_deg = vec![0usize; ds.user_count()];
        for &(u, o) in &ds.interactions {
            if user_alive[u] && outfit_alive[o] {
                user_deg[u] += 1;
            }
        }
        for u in 0..ds.user_count() {
            if user_alive[u] && user_deg[u] < min_user_inter {
                user_alive[u] = false;
                changed = true;
            }
        }
        let mut outfit_deg = vec![0usize; ds.outfit_count()];
        for &(u, o) in &ds.interactions {
            if user_alive[u] && outfit_alive[o] {
                outfit_deg[o] += 1;
            }
        }
        for o in 0..ds.outfit_count() {
            if outfit_alive[o] && outfit_deg[o] < min_outfit_inter {
                outfit_alive[o] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    if !user_alive.iter().any(|&a| a) || !outfit_alive.iter().any(|&a| a) {
        return Err(Error::Data("filter removed everything".into()));
    }

    let mut item_alive = vec![false; ds.item_count()];
    for (o, items) in ds.outfit_items.iter().enumerate() {
        if outfit_alive[o] {
            for &i in items {
                item_alive[i] = true;
            }
        }
    }

    let raw = RawRecords {
        interactions: ds
            .interactions
            .iter()
            .filter(|&&(u, o)| user_alive[u] && outfit_alive[o])
            .map(|&(u, o)| {
                (
                    ds.index.users.name(u).to_string(),
                    ds.index.outfits.name(o).to_string(),
                )
            })
            .collect(),
        outfits: ds
            .outfit_items
            .iter()
            .enumerate()
            .filter(|(o, _)| outfit_alive[*o])
            .map(|(o, items)| {
                (
                    ds.index.outfits.name(o).to_string(),
                    items.iter().map(|&i| ds.index.items.name(i).to_string()).collect(),
                )
            })
            .collect(),
        items: (0..ds.item_count())
            .filter(|&i| item_alive[i])
            .map(|i| {
                (
                    ds.index.items.name(i).to_string(),
                    ds.index.categories.name(ds.item_category[i]).to_string(),
                )
            })
            .collect(),
    };
    let features = (0..ds.item_count())
        .filter(|&i| item_alive[i])
        .map(|i| (ds.index.items.name(i).to_string(), ds.features[i].clone()))
        .collect();
    Dataset::from_raw(
        raw,
        features,
        format!(
            "{} | kcore(min_user={min_user_inter}, min_outfit={min_outfit_inter})",
            ds.provenance
        ),
    )
}

/// Per-user split parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    /// Fraction of each user's interactions kept for training.
    pub train_frac: f64,
    /// Fraction of the training share carved out as validation.
    pub val_frac: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_frac: 0.8,
            val_frac: 0.1,
            seed: 7,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.train_frac > 0.0 && self.train_frac < 1.0) {
            return Err(Error::Config(format!(
                "train_frac must be in (0,1), got {}",
                self.train_frac
            )));
        }
        if !(self.val_frac >= 0.0 && self.val_frac < 1.0) {
            return Err(Error::Config(format!(
                "val_frac must be in [0,1), got {}",
                self.val_frac
            )));
        }
        Ok(())
    }
}

/// Disjoint, exhaustive partition of a dataset's interactions.
#[derive(Debug, Clone, Default)]
pub struct DataSplit {
    pub train: Vec<(usize, usize)>,
    pub val: Vec<(usize, usize)>,
    pub test: Vec<(usize, usize)>,
    /// Users that could not be split (single interaction, kept all-train).
    pub all_train_users: Vec<usize>,
}

impl DataSplit {
    /// Sorted outfit lists per user for one partition.
    pub fn by_user(pairs: &[(usize, usize)], user_count: usize) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); user_count];
        for &(u, o) in pairs {
            out[u].push(o);
        }
        for list in &mut out {
            list.sort_unstable();
        }
        out
    }
}

/// Per-user random split. The test share is rounded down and every user
/// keeps at least one training interaction; validation is carved out of the
/// training share the same way. Deterministic for a given seed.
pub fn split_dataset(ds: &Dataset, spec: &SplitSpec) -> Result<DataSplit> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut per_user: Vec<Vec<usize>> = vec![Vec::new(); ds.user_count()];
    for &(u, o) in &ds.interactions {
        per_user[u].push(o);
    }

    let mut split = DataSplit::default();
    for (u, outfits) in per_user.iter_mut().enumerate() {
        outfits.sort_unstable();
        let n = outfits.len();
        if n == 0 {
            continue;
        }
        if n == 1 {
            split.train.push((u, outfits[0]));
            split.all_train_users.push(u);
            continue;
        }
        outfits.shuffle(&mut rng);
        // the epsilon keeps exact shares like 10 * 0.2 from flooring to 1
        let test_n = ((((n as f64) * (1.0 - spec.train_frac)) + 1e-9).floor() as usize).min(n - 1);
        let train_share = n - test_n;
        let val_n =
            ((((train_share as f64) * spec.val_frac) + 1e-9).floor() as usize).min(train_share - 1);
        for (pos, &o) in outfits.iter().enumerate() {
            if pos < test_n {
                split.test.push((u, o));
            } else if pos < test_n + val_n {
                split.val.push((u, o));
            } else {
                split.train.push((u, o));
            }
        }
    }
    split.train.sort_unstable();
    split.val.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn toy_dataset(interactions: &[(usize, usize)], user_count: usize) -> Dataset {
        // two outfits over three items, enough structure for split tests
        let raw = RawRecords {
            interactions: interactions
                .iter()
                .map(|&(u, o)| (format!("u{u:03}"), format!("o{o:03}")))
                .collect(),
            outfits: (0..interactions.iter().map(|&(_, o)| o + 1).max().unwrap_or(1))
                .map(|o| (format!("o{o:03}"), vec![format!("i{:03}", o % 3)]))
                .collect(),
            items: (0..3).map(|i| (format!("i{i:03}"), "c0".to_string())).collect(),
        };
        let features = (0..3).map(|i| (format!("i{i:03}"), vec![i as f64, 1.0])).collect();
        let ds = Dataset::from_raw(raw, features, "toy".into()).unwrap();
        assert_eq!(ds.user_count(), user_count);
        ds
    }

    #[test]
    fn from_raw_validates_references() {
        let raw = RawRecords {
            interactions: vec![("u1".into(), "o1".into())],
            outfits: vec![("o1".into(), vec!["ghost".into()])],
            items: vec![("i1".into(), "c1".into())],
        };
        let err = Dataset::from_raw(raw, vec![("i1".into(), vec![1.0])], "t".into()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("o1") && msg.contains("ghost"), "{msg}");
    }

    #[test]
    fn from_raw_checks_feature_lengths() {
        let raw = RawRecords {
            interactions: vec![],
            outfits: vec![("o1".into(), vec!["i1".into(), "i2".into()])],
            items: vec![("i1".into(), "c1".into()), ("i2".into(), "c1".into())],
        };
        let err = Dataset::from_raw(
            raw,
            vec![("i1".into(), vec![1.0, 2.0]), ("i2".into(), vec![1.0])],
            "t".into(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("inconsistent feature length"), "{err}");
    }

    #[test]
    fn save_load_round_trip_is_structurally_identical() {
        let dir = tempfile::tempdir().unwrap();
        let ds = toy_dataset(&[(0, 0), (0, 1), (1, 0)], 2);
        ds.save(dir.path()).unwrap();
        let loaded = load_dataset(dir.path()).unwrap();
        assert_eq!(loaded.interactions, ds.interactions);
        assert_eq!(loaded.outfit_items, ds.outfit_items);
        assert_eq!(loaded.item_category, ds.item_category);
        assert_eq!(loaded.features, ds.features);
        assert_eq!(loaded.feature_dim, ds.feature_dim);
    }

    #[test]
    fn load_reports_parse_errors_with_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let ds = toy_dataset(&[(0, 0)], 1);
        ds.save(dir.path()).unwrap();
        fs::write(dir.path().join("items.tsv"), "i000\tc0\nbroken-line\n").unwrap();
        let err = load_dataset(dir.path()).unwrap_err();
        assert!(err.to_string().contains("items.tsv:2"), "{err}");
    }

    /// Naive repeated-scan fixed-point filter used as the oracle.
    fn kcore_oracle(
        interactions: &[(usize, usize)],
        nu: usize,
        no: usize,
        min_u: usize,
        min_o: usize,
    ) -> (Vec<bool>, Vec<bool>) {
        let mut ua = vec![true; nu];
        let mut oa = vec![true; no];
        loop {
            let mut changed = false;
            for u in 0..nu {
                if !ua[u] {
                    continue;
                }
                let deg = interactions.iter().filter(|&&(x, o)| x == u && oa[o]).count();
                if deg < min_u {
                    ua[u] = false;
                    changed = true;
                }
            }
            for o in 0..no {
                if !oa[o] {
                    continue;
                }
                let deg = interactions.iter().filter(|&&(u, x)| x == o && ua[u]).count();
                if deg < min_o {
                    oa[o] = false;
                    changed = true;
                }
            }
            if !changed {
                return (ua, oa);
            }
        }
    }

    #[test]
    fn kcore_removes_under_threshold_user() {
        // user 0 has 19 interactions; users 1..=12 have 20 each, keeping
        // every outfit above the outfit threshold
        let mut interactions = Vec::new();
        for o in 0..19 {
            interactions.push((0, o));
        }
        for u in 1..=12 {
            for o in 0..20 {
                interactions.push((u, o));
            }
        }
        let ds = toy_dataset(&interactions, 13);
        let filtered = kcore_filter(&ds, 20, 10).unwrap();
        assert_eq!(filtered.user_count(), 12);
        assert!(filtered.index.users.index_of("u000").is_none());
        assert_eq!(filtered.outfit_count(), 20);
    }

    #[test]
    fn kcore_is_identity_at_fixed_point() {
        let interactions: Vec<(usize, usize)> =
            (0..4).flat_map(|u| (0..3).map(move |o| (u, o))).collect();
        let ds = toy_dataset(&interactions, 4);
        let filtered = kcore_filter(&ds, 2, 2).unwrap();
        assert_eq!(filtered.interactions, ds.interactions);
        assert_eq!(filtered.user_count(), ds.user_count());
        assert_eq!(filtered.outfit_count(), ds.outfit_count());
    }

    #[test]
    fn kcore_cascade_matches_oracle() {
        // removing user 0 drops outfit 2 under threshold, which in turn
        // drops user 3
        let interactions = vec![
            (0, 2), (0, 0),
            (1, 0), (1, 1), (1, 3), (1, 4),
            (2, 0), (2, 1), (2, 3), (2, 4),
            (3, 0), (3, 1), (3, 2),
        ];
        let ds = toy_dataset(&interactions, 4);
        let (ua, oa) = kcore_oracle(&ds.interactions, 4, 5, 3, 2);
        let filtered = kcore_filter(&ds, 3, 2).unwrap();
        let kept_users: Vec<bool> = (0..4)
            .map(|u| filtered.index.users.index_of(&format!("u{u:03}")).is_some())
            .collect();
        let kept_outfits: Vec<bool> = (0..5)
            .map(|o| filtered.index.outfits.index_of(&format!("o{o:03}")).is_some())
            .collect();
        assert_eq!(kept_users, ua);
        assert_eq!(kept_outfits, oa);
        assert!(!ua[0] && !ua[3] && !oa[2], "cascade did not occur as designed");
    }

    #[test]
    fn split_exact_fractions() {
        let interactions: Vec<(usize, usize)> = (0..10).map(|o| (0, o)).collect();
        let ds = toy_dataset(&interactions, 1);
        let split = split_dataset(&ds, &SplitSpec { train_frac: 0.8, val_frac: 0.0, seed: 3 }).unwrap();
        assert_eq!(split.test.len(), 2);
        assert_eq!(split.train.len(), 8);
    }

    #[test]
    fn split_deterministic_rounding_sixteen_four() {
        let interactions: Vec<(usize, usize)> = (0..40)
            .flat_map(|u| (0..20).map(move |o| (u, o)))
            .collect();
        let ds = toy_dataset(&interactions, 40);
        let split = split_dataset(&ds, &SplitSpec { train_frac: 0.8, val_frac: 0.0, seed: 11 }).unwrap();
        let test_by_user = DataSplit::by_user(&split.test, 40);
        let train_by_user = DataSplit::by_user(&split.train, 40);
        for u in 0..40 {
            assert_eq!(test_by_user[u].len(), 4, "user {u}");
            assert_eq!(train_by_user[u].len(), 16, "user {u}");
        }
    }

    #[test]
    fn single_interaction_user_is_all_train() {
        let ds = toy_dataset(&[(0, 0), (1, 0), (1, 1), (1, 2), (1, 3)], 2);
        let split = split_dataset(&ds, &SplitSpec::default()).unwrap();
        assert_eq!(split.all_train_users, vec![0]);
        assert!(split.train.contains(&(0, 0)));
        assert!(!split.test.iter().any(|&(u, _)| u == 0));
    }

    proptest! {
        #[test]
        fn split_is_a_partition(seed in 0u64..500, users in 1usize..12, per_user in 2usize..15) {
            let interactions: Vec<(usize, usize)> = (0..users)
                .flat_map(|u| (0..per_user).map(move |o| (u, (u + o) % per_user)))
                .collect();
            let ds = toy_dataset(&interactions, users);
            let split = split_dataset(&ds, &SplitSpec { train_frac: 0.8, val_frac: 0.1, seed }).unwrap();
            let mut merged: Vec<(usize, usize)> = split
                .train
                .iter()
                .chain(&split.val)
                .chain(&split.test)
                .cloned()
                .collect();
            merged.sort_unstable();
            prop_assert_eq!(merged, ds.interactions.clone());
            // pairwise disjoint
            let t: HashSet<_> = split.train.iter().collect();
            let v: HashSet<_> = split.val.iter().collect();
            let s: HashSet<_> = split.test.iter().collect();
            prop_assert!(t.is_disjoint(&v) && t.is_disjoint(&s) && v.is_disjoint(&s));
            // every user keeps at least one training interaction
            let train_by_user = DataSplit::by_user(&split.train, users);
            for u in 0..users {
                prop_assert!(!train_by_user[u].is_empty());
            }
        }
    }

    #[test]
    fn interacted_and_pool_partition_outfits() {
        let ds = toy_dataset(&[(0, 0), (0, 2)], 1);
        assert_eq!(ds.interacted_outfits(), vec![0, 2]);
        assert_eq!(ds.fitb_pool(), vec![1]);
    }
}
