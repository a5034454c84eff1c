//! Replayable description of a generated feature set.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::binning::{apply_binning, fit_chimerge, BinningSpec, ChiMergeConfig};
use crate::dataset::{impute_median, ColumnKind, ColumnValues, Dataset, TypeHints};
use crate::error::{Error, Result};
use crate::hashing::HashConfig;

use super::features::{Feature, FeatureSet};

pub const RECIPE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OriginalColumn {
    pub column: String,
    pub kind: ColumnKind,
}

/// ChiMerge cuts of a numeric column plus the value that replaced its
/// missing cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinningEntry {
    pub column: String,
    pub cuts: Vec<f64>,
    pub fill: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossOp {
    pub left: String,
    pub right: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossRecipe {
    pub version: u32,
    pub label: String,
    pub hash: HashConfig,
    pub originals: Vec<OriginalColumn>,
    pub binning: Vec<BinningEntry>,
    pub crosses: Vec<CrossOp>,
}

impl CrossRecipe {
    /// Type hints that make a CSV load reproduce the original column kinds.
    pub fn type_hints(&self) -> TypeHints {
        self.originals.iter().map(|o| (o.column.clone(), o.kind)).collect()
    }

    /// The same preparation with the crosses of `set` in creation order.
    pub fn with_crosses(&self, set: &FeatureSet) -> Self {
        let crosses = set
            .crosses()
            .iter()
            .map(|f| {
                let super::features::Lineage::Crossed(l, r) = f.lineage else {
                    unreachable!("crosses() yields crossed features")
                };
                CrossOp { left: set.features()[l].name.clone(), right: set.features()[r].name.clone(), name: f.name.clone() }
            })
            .collect();
        Self { crosses, ..self.clone() }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let recipe: Self = serde_json::from_str(text)?;
        if recipe.version != RECIPE_VERSION {
            return Err(Error::Schema(format!("unsupported recipe version {}", recipe.version)));
        }
        recipe.hash.validate()?;
        Ok(recipe)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    fn binning_for(&self, column: &str) -> Option<&BinningEntry> {
        self.binning.iter().find(|b| b.column == column)
    }
}

fn bin_tokens(bins: &[u32]) -> Vec<String> {
    bins.iter().map(u32::to_string).collect()
}

/// Turns every dataset column into a categorical original feature. Numeric
/// columns are median-imputed and ChiMerge-binned using `train` rows only;
/// their cell token is the bin index.
pub fn prepare_originals(
    data: &Dataset,
    labels: &[usize],
    n_classes: usize,
    train: &[usize],
    binning: &ChiMergeConfig,
    hash: HashConfig,
) -> Result<(FeatureSet, CrossRecipe)> {
    if data.n_features() == 0 {
        return Err(Error::Schema("dataset has no feature columns".into()));
    }
    let train_labels: Vec<usize> = train.iter().map(|&i| labels[i]).collect();
    let mut features = Vec::with_capacity(data.n_features());
    let mut originals = Vec::new();
    let mut entries = Vec::new();
    for (id, col) in data.features().iter().enumerate() {
        originals.push(OriginalColumn { column: col.name.clone(), kind: col.values.kind() });
        let feature = match &col.values {
            ColumnValues::Categorical(tokens) => Feature::original(id, &col.name, tokens),
            ColumnValues::Numeric(values) => {
                let (filled, fill) = impute_median(values, train);
                let train_values: Vec<f64> = train.iter().map(|&i| filled[i]).collect();
                let spec = fit_chimerge(&col.name, &train_values, &train_labels, n_classes, binning)?;
                let tokens = bin_tokens(&apply_binning(&filled, &spec));
                entries.push(BinningEntry { column: col.name.clone(), cuts: spec.cuts, fill });
                Feature::original(id, &col.name, &tokens)
            }
        };
        features.push(feature);
    }
    let recipe = CrossRecipe {
        version: RECIPE_VERSION,
        label: data.schema().label_column.clone(),
        hash,
        originals,
        binning: entries,
        crosses: Vec::new(),
    };
    Ok((FeatureSet::from_originals(features)?, recipe))
}

/// Rebuilds the recipe's feature set on `data`: stored binning first, then
/// the crosses in order. Tokens never seen during fitting pass through.
pub fn apply_recipe(recipe: &CrossRecipe, data: &Dataset) -> Result<FeatureSet> {
    let mut features = Vec::with_capacity(recipe.originals.len());
    for (id, orig) in recipe.originals.iter().enumerate() {
        let col = data
            .feature(&orig.column)
            .ok_or_else(|| Error::Schema(format!("column '{}' missing from data", orig.column)))?;
        let feature = match (&col.values, orig.kind) {
            (ColumnValues::Categorical(tokens), ColumnKind::Categorical) => Feature::original(id, &orig.column, tokens),
            (ColumnValues::Numeric(values), ColumnKind::Numeric) => {
                let entry = recipe
                    .binning_for(&orig.column)
                    .ok_or_else(|| Error::Schema(format!("no binning stored for numeric column '{}'", orig.column)))?;
                let spec = BinningSpec { column: orig.column.clone(), cuts: entry.cuts.clone() };
                let filled: Vec<f64> = values.iter().map(|v| v.unwrap_or(entry.fill)).collect();
                Feature::original(id, &orig.column, &bin_tokens(&apply_binning(&filled, &spec)))
            }
            (values, kind) => {
                return Err(Error::Schema(format!(
                    "column '{}' is {:?} in the data but {kind:?} in the recipe",
                    orig.column,
                    values.kind()
                )))
            }
        };
        features.push(feature);
    }
    let mut set = FeatureSet::from_originals(features)?;
    for op in &recipe.crosses {
        let id_of = |name: &str| {
            set.by_name(name)
                .map(|f| f.id)
                .ok_or_else(|| Error::Schema(format!("cross '{}' refers to unknown feature '{name}'", op.name)))
        };
        let (l, r) = (id_of(&op.left)?, id_of(&op.right)?);
        set.push_cross_named(l, r, op.name.clone())?;
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{read_csv, Column};

    fn data() -> Dataset {
        let csv = "x,c,y\n1,a,p\n2,b,p\n3,a,n\n4,?,n\n?,b,p\n6,a,n\n";
        read_csv(csv.as_bytes(), "y", &TypeHints::new()).unwrap()
    }

    fn prepared() -> (Dataset, FeatureSet, CrossRecipe) {
        let d = data();
        let split = d.split(0.5, 1).unwrap();
        let ci = d.class_index(&split);
        let (set, recipe) =
            prepare_originals(&d, &ci.ids, ci.n_classes(), &split.train, &ChiMergeConfig::default(), HashConfig::default())
                .unwrap();
        (d, set, recipe)
    }

    #[test]
    fn numeric_columns_are_binned() {
        let (_, set, recipe) = prepared();
        assert_eq!(recipe.binning.len(), 1);
        assert_eq!(recipe.binning[0].column, "x");
        let x = set.by_name("x").unwrap();
        assert!(x.vocab().iter().all(|t| t.parse::<u32>().is_ok()));
        assert!(x.n_values() <= ChiMergeConfig::default().max_bins);
        assert_eq!(set.by_name("c").unwrap().token(3), crate::dataset::MISSING_TOKEN);
    }

    #[test]
    fn replay_on_training_data_is_exact() {
        let (d, mut set, base) = prepared();
        let xc = set.push_cross(0, 1).unwrap();
        set.push_cross(xc, 0).unwrap();
        let recipe = base.with_crosses(&set);
        assert_eq!(recipe.crosses.len(), 2);
        assert_eq!(recipe.crosses[1], CrossOp { left: "xxc".into(), right: "x".into(), name: "xxcxx".into() });
        assert_eq!(apply_recipe(&recipe, &d).unwrap(), set);
        let back = CrossRecipe::from_json(&recipe.to_json().unwrap()).unwrap();
        assert_eq!(apply_recipe(&back, &d).unwrap(), set);
    }

    #[test]
    fn empty_cross_list_gives_originals() {
        let (d, set, recipe) = prepared();
        assert_eq!(apply_recipe(&recipe, &d).unwrap(), set);
    }

    #[test]
    fn held_out_rows_keep_names_and_lineage() {
        let (_, mut set, base) = prepared();
        set.push_cross(1, 0).unwrap();
        let recipe = base.with_crosses(&set);
        let fresh = read_csv("x,c,y\n100,zz,p\n-5,a,n\n".as_bytes(), "y", &recipe.type_hints()).unwrap();
        let out = apply_recipe(&recipe, &fresh).unwrap();
        let names: Vec<&str> = out.features().iter().map(|f| f.name.as_str()).collect();
        assert_eq!(names, vec!["x", "c", "cxx"]);
        assert_eq!(out.features()[2].lineage, set.features()[2].lineage);
        assert!(out.features()[2].token(0).starts_with("zz&"));
    }

    #[test]
    fn schema_mismatches() {
        let (_, _, recipe) = prepared();
        let missing = Dataset::from_columns(
            "y",
            vec![Column { name: "c".into(), values: ColumnValues::Categorical(vec!["a".into(), "b".into()]) }],
            vec!["p".into(), "n".into()],
        )
        .unwrap();
        assert!(matches!(apply_recipe(&recipe, &missing), Err(Error::Schema(_))));
        let wrong_kind = read_csv("x,c,y\nlow,a,p\nhigh,b,n\n".as_bytes(), "y", &TypeHints::new()).unwrap();
        assert!(matches!(apply_recipe(&recipe, &wrong_kind), Err(Error::Schema(_))));
        let mut bad = recipe.clone();
        bad.crosses.push(CrossOp { left: "x".into(), right: "nope".into(), name: "xxnope".into() });
        assert!(matches!(apply_recipe(&bad, &data()), Err(Error::Schema(_))));
        let mut future = recipe;
        future.version = 9;
        assert!(CrossRecipe::from_json(&future.to_json().unwrap()).is_err());
    }
}
