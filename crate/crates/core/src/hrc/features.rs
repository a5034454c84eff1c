//! Categorical feature columns, their lineage and the Cartesian cross.

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::error::{Error, Result};
use crate::hashing::{hash_category, HashConfig};

/// Separator between parent tokens in a crossed cell.
pub const TOKEN_JOIN: &str = "&";
/// Separator between parent names in a crossed feature's name.
pub const NAME_JOIN: &str = "x";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Lineage {
    Original(String),
    Crossed(usize, usize),
}

/// One categorical column stored as dense codes into a vocabulary of tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Feature {
    pub id: usize,
    pub name: String,
    pub lineage: Lineage,
    codes: Vec<u32>,
    vocab: Vec<String>,
}

impl Feature {
    /// Original feature from raw tokens; codes follow first appearance.
    pub fn original<S: AsRef<str>>(id: usize, name: impl Into<String>, tokens: &[S]) -> Self {
        let name = name.into();
        let mut lookup: HashMap<&str, u32> = HashMap::new();
        let mut vocab = Vec::new();
        let codes = tokens
            .iter()
            .map(|t| {
                let t = t.as_ref();
                *lookup.entry(t).or_insert_with(|| {
                    vocab.push(t.to_string());
                    (vocab.len() - 1) as u32
                })
            })
            .collect();
        Self { id, lineage: Lineage::Original(name.clone()), name, codes, vocab }
    }

    pub fn n_samples(&self) -> usize {
        self.codes.len()
    }

    pub fn codes(&self) -> &[u32] {
        &self.codes
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    /// Number of distinct tokens present in the column.
    pub fn n_values(&self) -> usize {
        self.vocab.len()
    }

    pub fn token(&self, row: usize) -> &str {
        &self.vocab[self.codes[row] as usize]
    }

    /// Bucket of every cell; each distinct token is hashed once.
    pub fn hashed(&self, cfg: HashConfig) -> Vec<u32> {
        let buckets: Vec<u32> = self.vocab.iter().map(|t| hash_category(&self.name, t, cfg)).collect();
        self.codes.iter().map(|&c| buckets[c as usize]).collect()
    }

    pub fn order(&self, set: &FeatureSet) -> usize {
        match self.lineage {
            Lineage::Original(_) => 1,
            Lineage::Crossed(l, r) => set.features[l].order(set) + set.features[r].order(set),
        }
    }
}

/// Cell-wise Cartesian product of two columns. Cell tokens join the parent
/// tokens with [`TOKEN_JOIN`]; only combinations that occur get a code.
pub fn cartesian_cross(id: usize, name: impl Into<String>, left: &Feature, right: &Feature) -> Result<Feature> {
    if left.id == right.id {
        return Err(Error::arg(format!("cannot cross feature '{}' with itself", left.name)));
    }
    if left.n_samples() != right.n_samples() {
        return Err(Error::arg("crossed features differ in length"));
    }
    let mut lookup: HashMap<(u32, u32), u32> = HashMap::new();
    let mut vocab = Vec::new();
    let codes = left
        .codes
        .iter()
        .zip(&right.codes)
        .map(|(&l, &r)| {
            *lookup.entry((l, r)).or_insert_with(|| {
                vocab.push(format!("{}{TOKEN_JOIN}{}", left.vocab[l as usize], right.vocab[r as usize]));
                (vocab.len() - 1) as u32
            })
        })
        .collect();
    Ok(Feature { id, name: name.into(), lineage: Lineage::Crossed(left.id, right.id), codes, vocab })
}

fn unordered(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

/// Ordered, append-only list of features. A feature's id is its position, so
/// parents always precede their children.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSet {
    features: Vec<Feature>,
    crossed_pairs: BTreeSet<(usize, usize)>,
    n_original: usize,
}

impl FeatureSet {
    /// Set of original features; ids must be `0..n` in order and names unique.
    pub fn from_originals(features: Vec<Feature>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::arg("feature set needs at least one feature"));
        }
        let n = features[0].n_samples();
        let mut names = HashSet::new();
        for (i, f) in features.iter().enumerate() {
            if f.id != i || !matches!(f.lineage, Lineage::Original(_)) {
                return Err(Error::arg(format!("feature '{}' is not original feature {i}", f.name)));
            }
            if f.n_samples() != n {
                return Err(Error::arg(format!("feature '{}' has {} rows, expected {n}", f.name, f.n_samples())));
            }
            if !names.insert(f.name.as_str()) {
                return Err(Error::arg(format!("duplicate feature name '{}'", f.name)));
            }
        }
        let n_original = features.len();
        Ok(Self { features, crossed_pairs: BTreeSet::new(), n_original })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn n_original(&self) -> usize {
        self.n_original
    }

    pub fn n_samples(&self) -> usize {
        self.features[0].n_samples()
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn get(&self, id: usize) -> Option<&Feature> {
        self.features.get(id)
    }

    pub fn by_name(&self, name: &str) -> Option<&Feature> {
        self.features.iter().find(|f| f.name == name)
    }

    /// The crossed features in creation order.
    pub fn crosses(&self) -> &[Feature] {
        &self.features[self.n_original..]
    }

    pub fn is_crossed(&self, a: usize, b: usize) -> bool {
        self.crossed_pairs.contains(&unordered(a, b))
    }

    /// Features that may still be crossed with `meta`: every other feature
    /// whose unordered pair with `meta` has no child yet.
    pub fn legal_partners(&self, meta: usize) -> Vec<usize> {
        (0..self.len()).filter(|&j| j != meta && !self.is_crossed(meta, j)).collect()
    }

    /// Features with at least one legal partner.
    pub fn legal_metas(&self) -> Vec<usize> {
        let n = self.len();
        // Each feature can pair with n - 1 others; it is exhausted once all
        // of those pairs have children.
        let mut used = vec![0usize; n];
        for &(a, b) in &self.crossed_pairs {
            used[a] += 1;
            used[b] += 1;
        }
        (0..n).filter(|&i| used[i] + 1 < n).collect()
    }

    /// Default name for the cross of two features, made unique by a numeric
    /// suffix if it clashes with an existing name.
    pub fn cross_name(&self, left: usize, right: usize) -> String {
        let base = format!("{}{NAME_JOIN}{}", self.features[left].name, self.features[right].name);
        if self.by_name(&base).is_none() {
            return base;
        }
        (2..).map(|k| format!("{base}#{k}")).find(|n| self.by_name(n).is_none()).expect("unbounded suffixes")
    }

    /// The feature `cross(left, right)` would append, without appending it.
    pub fn preview_cross(&self, left: usize, right: usize) -> Result<Feature> {
        let (l, r) = self.pair(left, right)?;
        cartesian_cross(self.len(), self.cross_name(left, right), l, r)
    }

    /// Appends `left x right` under its default name and returns the new id.
    pub fn push_cross(&mut self, left: usize, right: usize) -> Result<usize> {
        let name = self.cross_name(left, right);
        self.push_cross_named(left, right, name)
    }

    pub fn push_cross_named(&mut self, left: usize, right: usize, name: impl Into<String>) -> Result<usize> {
        let name = name.into();
        if self.by_name(&name).is_some() {
            return Err(Error::arg(format!("duplicate feature name '{name}'")));
        }
        let (l, r) = self.pair(left, right)?;
        let feature = cartesian_cross(self.len(), name, l, r)?;
        self.push(feature)
    }

    /// Appends a feature built by [`FeatureSet::preview_cross`].
    pub fn push(&mut self, feature: Feature) -> Result<usize> {
        let Lineage::Crossed(l, r) = feature.lineage else {
            return Err(Error::arg("only crossed features can be appended"));
        };
        if feature.id != self.len() || l >= self.len() || r >= self.len() || l == r {
            return Err(Error::Invariant(format!("feature '{}' does not extend this set", feature.name)));
        }
        if self.is_crossed(l, r) {
            return Err(Error::arg(format!(
                "'{}' and '{}' are already crossed",
                self.features[l].name, self.features[r].name
            )));
        }
        self.crossed_pairs.insert(unordered(l, r));
        self.features.push(feature);
        Ok(self.len() - 1)
    }

    /// Drops every cross, restoring the original features.
    pub fn reset(&mut self) {
        self.features.truncate(self.n_original);
        self.crossed_pairs.clear();
    }

    fn pair(&self, left: usize, right: usize) -> Result<(&Feature, &Feature)> {
        match (self.features.get(left), self.features.get(right)) {
            (Some(l), Some(r)) => Ok((l, r)),
            _ => Err(Error::arg(format!("feature id out of range: ({left}, {right})"))),
        }
    }
}
