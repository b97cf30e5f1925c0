//! Hierarchical graph over users, outfits and items, plus the weighted
//! category co-occurrence graph that per-outfit item graphs inherit their
//! edge weights from.
//!
//! All graph types are immutable after construction and safe to share
//! across evaluation workers.

use std::collections::HashMap;
use std::fmt;

use crate::{Error, Result};

/// Dense index for one entity level: sorted external names plus the
/// reverse lookup.
#[derive(Debug, Clone, Default)]
pub struct IdMap {
    names: Vec<String>,
    by_name: HashMap<String, usize>,
}

impl IdMap {
    /// Builds from a deduplicated, lexicographically sorted name list.
    fn from_sorted(names: Vec<String>) -> Self {
        let by_name = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        IdMap { names, by_name }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn name(&self, index: usize) -> &str {
        &self.names[index]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// Entity counts per level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EntityCounts {
    pub users: usize,
    pub outfits: usize,
    pub items: usize,
    pub categories: usize,
}

/// Maps external string IDs to dense contiguous indices per level.
/// Index assignment is lexicographic by external ID, so identical inputs
/// produce identical indices on every machine.
#[derive(Debug, Clone, Default)]
pub struct EntityIndex {
    pub users: IdMap,
    pub outfits: IdMap,
    pub items: IdMap,
    pub categories: IdMap,
}

impl EntityIndex {
    pub fn counts(&self) -> EntityCounts {
        EntityCounts {
            users: self.users.len(),
            outfits: self.outfits.len(),
            items: self.items.len(),
            categories: self.categories.len(),
        }
    }
}

/// Raw string-keyed records as parsed from dataset files.
#[derive(Debug, Clone, Default)]
pub struct RawRecords {
    /// (user, outfit) pairs.
    pub interactions: Vec<(String, String)>,
    /// (outfit, ordered item list).
    pub outfits: Vec<(String, Vec<String>)>,
    /// (item, category). Exactly one entry per item.
    pub items: Vec<(String, String)>,
}

/// Builds the dense entity index from raw records.
///
/// Users come from interactions, outfits and items from their respective
/// record lists, categories from the item records. Duplicate IDs at the
/// same level and items with ambiguous categories are errors.
pub fn build_entity_index(records: &RawRecords) -> Result<EntityIndex> {
    let mut users: Vec<String> = records
        .interactions
        .iter()
        .map(|(u, _)| u.clone())
        .collect();
    users.sort();
    users.dedup();

    let mut outfit_names: Vec<String> = records.outfits.iter().map(|(o, _)| o.clone()).collect();
    outfit_names.sort();
    let dup = find_adjacent_dup(&outfit_names);
    if let Some(name) = dup {
        return Err(Error::Data(format!("duplicate outfit id '{name}'")));
    }

    let mut item_names: Vec<String> = records.items.iter().map(|(i, _)| i.clone()).collect();
    item_names.sort();
    // An item listed twice with the same category is a duplicate; with a
    // different category it is ambiguous.
    if find_adjacent_dup(&item_names).is_some() {
        let mut seen: HashMap<&str, &str> = HashMap::new();
        for (item, cat) in &records.items {
            match seen.insert(item.as_str(), cat.as_str()) {
                Some(prev) if prev != cat => {
                    return Err(Error::Data(format!(
                        "item '{item}' has ambiguous category: '{prev}' and '{cat}'"
                    )));
                }
                Some(_) => {
                    return Err(Error::Data(format!("duplicate item id '{item}'")));
                }
                None => {}
            }
        }
    }

    let mut categories: Vec<String> = records.items.iter().map(|(_, c)| c.clone()).collect();
    categories.sort();
    categories.dedup();

    Ok(EntityIndex {
        users: IdMap::from_sorted(users),
        outfits: IdMap::from_sorted(outfit_names),
        items: IdMap::from_sorted(item_names),
        categories: IdMap::from_sorted(categories),
    })
}

fn find_adjacent_dup(sorted: &[String]) -> Option<&str> {
    sorted
        .windows(2)
        .find(|w| w[0] == w[1])
        .map(|w| w[0].as_str())
}

/// Three-level adjacency: per-user outfit histories, per-outfit item lists,
/// and the item-to-category assignment.
#[derive(Debug, Clone)]
pub struct HierarchicalGraph {
    /// Sorted, duplicate-free outfit indices per user.
    pub user_outfits: Vec<Vec<usize>>,
    /// Ordered item indices per outfit.
    pub outfit_items: Vec<Vec<usize>>,
    /// Category index per item.
    pub item_category: Vec<usize>,
    pub category_count: usize,
}

impl HierarchicalGraph {
    /// Assembles the graph from an interaction list and the composition
    /// tables. Interactions are deduplicated and sorted per user.
    pub fn new(
        user_count: usize,
        interactions: &[(usize, usize)],
        outfit_items: Vec<Vec<usize>>,
        item_category: Vec<usize>,
        category_count: usize,
    ) -> Self {
        let mut user_outfits = vec![Vec::new(); user_count];
        for &(u, o) in interactions {
            if u < user_count {
                user_outfits[u].push(o);
            }
        }
        for list in &mut user_outfits {
            list.sort_unstable();
            list.dedup();
        }
        HierarchicalGraph {
            user_outfits,
            outfit_items,
            item_category,
            category_count,
        }
    }

    pub fn user_count(&self) -> usize {
        self.user_outfits.len()
    }

    pub fn outfit_count(&self) -> usize {
        self.outfit_items.len()
    }

    pub fn item_count(&self) -> usize {
        self.item_category.len()
    }

    /// The user's interaction history (N_u in the propagation rules).
    pub fn user_history(&self, user: usize) -> &[usize] {
        &self.user_outfits[user]
    }

    /// The outfit's item list (N_o in the propagation rules).
    pub fn outfit_items(&self, outfit: usize) -> &[usize] {
        &self.outfit_items[outfit]
    }

    /// Scans every structural invariant and reports violations.
    /// An empty report means the graph is well formed.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        for (u, outfits) in self.user_outfits.iter().enumerate() {
            if outfits.is_empty() {
                violations.push(Violation::EmptyUserHistory { user: u });
            }
            for &o in outfits {
                if o >= self.outfit_items.len() {
                    violations.push(Violation::DanglingUserOutfit { user: u, outfit: o });
                }
            }
            for w in outfits.windows(2) {
                if w[0] == w[1] {
                    violations.push(Violation::DuplicateUserOutfit {
                        user: u,
                        outfit: w[0],
                    });
                }
            }
        }
        for (o, items) in self.outfit_items.iter().enumerate() {
            if items.is_empty() {
                violations.push(Violation::EmptyOutfit { outfit: o });
            }
            for &i in items {
                if i >= self.item_category.len() {
                    violations.push(Violation::DanglingOutfitItem { outfit: o, item: i });
                }
            }
        }
        for (i, &c) in self.item_category.iter().enumerate() {
            if c >= self.category_count {
                violations.push(Violation::DanglingItemCategory {
                    item: i,
                    category: c,
                });
            }
        }
        ValidationReport { violations }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EmptyUserHistory { user: usize },
    EmptyOutfit { outfit: usize },
    DanglingUserOutfit { user: usize, outfit: usize },
    DanglingOutfitItem { outfit: usize, item: usize },
    DanglingItemCategory { item: usize, category: usize },
    DuplicateUserOutfit { user: usize, outfit: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyUserHistory { user } => write!(f, "user {user} has an empty history"),
            Violation::EmptyOutfit { outfit } => write!(f, "outfit {outfit} has no items"),
            Violation::DanglingUserOutfit { user, outfit } => {
                write!(f, "user {user} references unknown outfit {outfit}")
            }
            Violation::DanglingOutfitItem { outfit, item } => {
                write!(f, "outfit {outfit} references unknown item {item}")
            }
            Violation::DanglingItemCategory { item, category } => {
                write!(f, "item {item} references unknown category {category}")
            }
            Violation::DuplicateUserOutfit { user, outfit } => {
                write!(f, "user {user} lists outfit {outfit} more than once")
            }
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_clean() {
            writeln!(f, "graph is well formed")
        } else {
            for v in &self.violations {
                writeln!(f, "{v}")?;
            }
            Ok(())
        }
    }
}

/// Weighted category co-occurrence graph.
///
/// `cooccur(c, c')` counts outfits containing at least one item of each of
/// the two categories (for `c == c'`, outfits containing two or more items
/// of the category). `freq(c)` counts total occurrences of the category
/// across all outfit-item mappings. The weight of an ordered pair is
///
/// ```text
/// w(c, c') = (cooccur(c, c') / freq(c')) / sum_{c''} (cooccur(c, c'') / freq(c''))
/// ```
///
/// with zero-frequency categories skipped in the denominator sum. Rows with
/// at least one co-occurring partner therefore sum to one; isolated
/// categories get an all-zero row.
#[derive(Debug, Clone)]
pub struct CategoryGraph {
    count: usize,
    cooccur: Vec<u64>,
    freq: Vec<u64>,
    weights: Vec<f64>,
}

impl CategoryGraph {
    pub fn category_count(&self) -> usize {
        self.count
    }

    pub fn cooccur(&self, c: usize, c2: usize) -> u64 {
        self.cooccur[c * self.count + c2]
    }

    pub fn freq(&self, c: usize) -> u64 {
        self.freq[c]
    }

    /// Normalized weight of the ordered pair `(c, c')`; row `c` is the
    /// receiving category.
    pub fn weight(&self, c: usize, c2: usize) -> f64 {
        self.weights[c * self.count + c2]
    }

    pub fn weight_row(&self, c: usize) -> &[f64] {
        &self.weights[c * self.count..(c + 1) * self.count]
    }
}

/// Counts category co-occurrences over the given outfits and normalizes
/// them into message weights.
pub fn build_category_graph(
    outfit_items: &[Vec<usize>],
    item_category: &[usize],
    category_count: usize,
) -> CategoryGraph {
    let k = category_count;
    let mut cooccur = vec![0u64; k * k];
    let mut freq = vec![0u64; k];

    let mut per_outfit = vec![0u32; k];
    for items in outfit_items {
        for &i in items {
            per_outfit[item_category[i]] += 1;
        }
        for c in 0..k {
            if per_outfit[c] == 0 {
                continue;
            }
            freq[c] += per_outfit[c] as u64;
            // one count per outfit per unordered pair, regardless of
            // how many items of each category the outfit holds
            if per_outfit[c] >= 2 {
                cooccur[c * k + c] += 1;
            }
            for c2 in c + 1..k {
                if per_outfit[c2] > 0 {
                    cooccur[c * k + c2] += 1;
                    cooccur[c2 * k + c] += 1;
                }
            }
        }
        for &i in items {
            per_outfit[item_category[i]] = 0;
        }
    }

    let mut weights = vec![0.0; k * k];
    for c in 0..k {
        let mut denom = 0.0;
        for c2 in 0..k {
            if freq[c2] > 0 {
                denom += cooccur[c * k + c2] as f64 / freq[c2] as f64;
            }
        }
        if denom > 0.0 {
            for c2 in 0..k {
                if freq[c2] > 0 {
                    weights[c * k + c2] = (cooccur[c * k + c2] as f64 / freq[c2] as f64) / denom;
                }
            }
        }
    }

    CategoryGraph {
        count: k,
        cooccur,
        freq,
        weights,
    }
}

/// Complete weighted graph over one outfit's items. The directed edge into
/// item `a` from item `b` carries `w(category(a), category(b))`, inherited
/// verbatim from the category graph; pairs whose categories never co-occur
/// carry weight zero.
#[derive(Debug, Clone)]
pub struct OutfitItemGraph {
    pub outfit: Option<usize>,
    pub items: Vec<usize>,
    weights: Vec<f64>,
}

impl OutfitItemGraph {
    /// Weight of the directed edge from position `from` into position `to`.
    pub fn weight(&self, to: usize, from: usize) -> f64 {
        self.weights[to * self.items.len() + from]
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Builds the item graph for an ad-hoc composition (used when scoring
    /// generated or fill-in-the-blank outfits).
    pub fn for_items(
        items: &[usize],
        item_category: &[usize],
        categories: &CategoryGraph,
    ) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::Data("outfit with zero items".into()));
        }
        let n = items.len();
        let mut weights = vec![0.0; n * n];
        for (a, &ia) in items.iter().enumerate() {
            for (b, &ib) in items.iter().enumerate() {
                if a != b {
                    weights[a * n + b] = categories.weight(item_category[ia], item_category[ib]);
                }
            }
        }
        Ok(OutfitItemGraph {
            outfit: None,
            items: items.to_vec(),
            weights,
        })
    }
}

/// Item graph for an outfit that exists in the hierarchical graph.
pub fn build_outfit_item_graph(
    graph: &HierarchicalGraph,
    categories: &CategoryGraph,
    outfit: usize,
) -> Result<OutfitItemGraph> {
    if outfit >= graph.outfit_count() {
        return Err(Error::Data(format!("outfit {outfit} out of range")));
    }
    let mut g = OutfitItemGraph::for_items(
        graph.outfit_items(outfit),
        &graph.item_category,
        categories,
    )
    .map_err(|_| Error::Data(format!("outfit {outfit} has zero items")))?;
    g.outfit = Some(outfit);
    Ok(g)
}
