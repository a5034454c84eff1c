//! CSV ingestion, column-kind inference and train/test splitting.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Token that replaces a missing categorical cell.
pub const MISSING_TOKEN: &str = "__MISSING__";

const MISSING_MARKERS: &[&str] = &["", "?", "NA", "N/A", "NaN", "nan", "null", "NULL"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

pub type TypeHints = BTreeMap<String, ColumnKind>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
}

/// Column layout of a dataset. `columns` lists every column in file order,
/// the label included (always categorical).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub columns: Vec<ColumnSpec>,
    pub label_column: String,
}

impl Schema {
    pub fn feature_columns(&self) -> impl Iterator<Item = &ColumnSpec> {
        self.columns.iter().filter(move |c| c.name != self.label_column)
    }

    pub fn kind_of(&self, name: &str) -> Option<ColumnKind> {
        self.columns.iter().find(|c| c.name == name).map(|c| c.kind)
    }
}

/// Cells of one feature column. Missing numeric cells stay `None` until they
/// are imputed against a concrete training split.
#[derive(Debug, Clone, PartialEq)]
pub enum ColumnValues {
    Numeric(Vec<Option<f64>>),
    Categorical(Vec<String>),
}

impl ColumnValues {
    pub fn len(&self) -> usize {
        match self {
            ColumnValues::Numeric(v) => v.len(),
            ColumnValues::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> ColumnKind {
        match self {
            ColumnValues::Numeric(_) => ColumnKind::Numeric,
            ColumnValues::Categorical(_) => ColumnKind::Categorical,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub values: ColumnValues,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Schema,
    features: Vec<Column>,
    labels: Vec<String>,
}

/// Label tokens mapped to dense class ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassIndex {
    /// Class id of every sample.
    pub ids: Vec<usize>,
    /// Token of every class id.
    pub classes: Vec<String>,
}

impl ClassIndex {
    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

fn is_missing(cell: &str) -> bool {
    MISSING_MARKERS.contains(&cell.trim())
}

fn parse_real(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

impl Dataset {
    /// Builds a dataset from in-memory columns. Column names must be unique,
    /// non-empty and distinct from `label_column`.
    pub fn from_columns(
        label_column: impl Into<String>,
        features: Vec<Column>,
        labels: Vec<String>,
    ) -> Result<Self> {
        let label_column = label_column.into();
        let n = labels.len();
        if n == 0 {
            return Err(Error::Schema("dataset has no samples".into()));
        }
        let mut seen = HashSet::new();
        for c in &features {
            if c.name.is_empty() {
                return Err(Error::Schema("empty column name".into()));
            }
            if c.name == label_column || !seen.insert(c.name.as_str()) {
                return Err(Error::Schema(format!("duplicate column name '{}'", c.name)));
            }
            if c.values.len() != n {
                return Err(Error::Schema(format!(
                    "column '{}' has {} cells, expected {n}",
                    c.name,
                    c.values.len()
                )));
            }
        }
        let distinct: HashSet<&str> = labels.iter().map(String::as_str).collect();
        if distinct.len() < 2 {
            return Err(Error::Schema(format!(
                "label column '{label_column}' needs at least 2 distinct values"
            )));
        }
        let mut columns: Vec<ColumnSpec> = features
            .iter()
            .map(|c| ColumnSpec { name: c.name.clone(), kind: c.values.kind() })
            .collect();
        columns.push(ColumnSpec { name: label_column.clone(), kind: ColumnKind::Categorical });
        Ok(Self { schema: Schema { columns, label_column }, features, labels })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn features(&self) -> &[Column] {
        &self.features
    }

    pub fn feature(&self, name: &str) -> Option<&Column> {
        self.features.iter().find(|c| c.name == name)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn split(&self, fraction: f64, seed: u64) -> Result<Split> {
        split_train_test(self.n_samples(), fraction, seed)
    }

    /// Maps label tokens to class ids by first appearance in the training
    /// rows; labels seen only in test rows get ids after all training classes.
    pub fn class_index(&self, split: &Split) -> ClassIndex {
        let mut lookup: HashMap<&str, usize> = HashMap::new();
        let mut classes = Vec::new();
        for &i in split.train.iter().chain(split.test.iter()) {
            let tok = self.labels[i].as_str();
            if !lookup.contains_key(tok) {
                lookup.insert(tok, classes.len());
                classes.push(tok.to_string());
            }
        }
        let ids = self.labels.iter().map(|t| lookup[t.as_str()]).collect();
        ClassIndex { ids, classes }
    }
}

/// Reads an RFC-4180 CSV file with a mandatory header row.
///
/// A column is numeric iff every non-missing cell parses as a finite real,
/// unless `hints` names it. The label column is always categorical.
pub fn load_csv(path: impl AsRef<Path>, label_column: &str, hints: &TypeHints) -> Result<Dataset> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read_csv(&bytes[..], label_column, hints)
}

pub fn read_csv<R: std::io::Read>(reader: R, label_column: &str, hints: &TypeHints) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::parse(Some(1), e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(Error::parse(None, "empty file"));
    }
    let width = header.len();
    let mut cells: Vec<Vec<String>> = vec![Vec::new(); width];
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| Error::parse(Some(row), e.to_string()))?;
        if rec.len() != width {
            return Err(Error::parse(
                Some(row),
                format!("expected {width} fields, found {}", rec.len()),
            ));
        }
        for (col, field) in cells.iter_mut().zip(rec.iter()) {
            col.push(field.to_string());
        }
    }
    if cells[0].is_empty() {
        return Err(Error::parse(None, "no data rows"));
    }

    let label_pos = match header.iter().position(|h| h == label_column) {
        Some(p) => p,
        None => return Err(Error::Schema(format!("label column '{label_column}' not found"))),
    };
    for name in hints.keys() {
        if !header.contains(name) {
            return Err(Error::Schema(format!("type hint for unknown column '{name}'")));
        }
    }

    let mut features = Vec::with_capacity(width - 1);
    let mut labels = Vec::new();
    for (pos, (name, col)) in header.iter().zip(cells).enumerate() {
        if pos == label_pos {
            labels = col
                .into_iter()
                .map(|c| if is_missing(&c) { MISSING_TOKEN.to_string() } else { c.trim().to_string() })
                .collect();
            continue;
        }
        let inferred = col
            .iter()
            .all(|c| is_missing(c) || parse_real(c).is_some())
            && col.iter().any(|c| !is_missing(c));
        let kind = match hints.get(name) {
            Some(k) => *k,
            None if inferred => ColumnKind::Numeric,
            None => ColumnKind::Categorical,
        };
        let values = match kind {
            ColumnKind::Numeric => {
                let mut out = Vec::with_capacity(col.len());
                for (i, c) in col.iter().enumerate() {
                    if is_missing(c) {
                        out.push(None);
                    } else {
                        match parse_real(c) {
                            Some(v) => out.push(Some(v)),
                            None => {
                                return Err(Error::parse(
                                    Some(i + 2),
                                    format!("column '{name}' is hinted numeric but has '{c}'"),
                                ))
                            }
                        }
                    }
                }
                ColumnValues::Numeric(out)
            }
            ColumnKind::Categorical => ColumnValues::Categorical(
                col.into_iter()
                    .map(|c| if is_missing(&c) { MISSING_TOKEN.to_string() } else { c.trim().to_string() })
                    .collect(),
            ),
        };
        features.push(Column { name: name.clone(), values });
    }

    let mut ds = Dataset::from_columns(label_column, features, labels)?;
    // from_columns appends the label spec; restore file order.
    let label_spec = ds.schema.columns.pop().expect("label spec present");
    ds.schema.columns.insert(label_pos, label_spec);
    Ok(ds)
}

/// Deterministic shuffled split; `fraction` of the samples (rounded) go to training.
pub fn split_train_test(n_samples: usize, fraction: f64, seed: u64) -> Result<Split> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::arg(format!("split fraction {fraction} outside (0, 1)")));
    }
    let n = n_samples as f64;
    if fraction * n < 1.0 || (1.0 - fraction) * n < 1.0 {
        return Err(Error::arg(format!(
            "fraction {fraction} leaves an empty side for {n_samples} samples"
        )));
    }
    let n_train = ((fraction * n).round() as usize).clamp(1, n_samples - 1);
    let mut order: Vec<usize> = (0..n_samples).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut train = order[..n_train].to_vec();
    let mut test = order[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, test, seed })
}

/// Fills missing numeric cells with the median of the non-missing training
/// cells (0.0 when every training cell is missing). Returns the filled column
/// and the fill value.
pub fn impute_median(values: &[Option<f64>], train: &[usize]) -> (Vec<f64>, f64) {
    let mut seen: Vec<f64> = train.iter().filter_map(|&i| values[i]).collect();
    let fill = if seen.is_empty() {
        0.0
    } else {
        seen.sort_by(f64::total_cmp);
        let m = seen.len();
        if m % 2 == 1 {
            seen[m / 2]
        } else {
            0.5 * (seen[m / 2 - 1] + seen[m / 2])
        }
    };
    (values.iter().map(|v| v.unwrap_or(fill)).collect(), fill)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "age,job,y\n31,clerk,no\n45,chef,yes\n27,clerk,no\n";

    fn load(text: &str, hints: &TypeHints) -> Result<Dataset> {
        read_csv(text.as_bytes(), "y", hints)
    }

    #[test]
    fn infers_kinds() {
        let ds = load(SMALL, &TypeHints::new()).unwrap();
        assert_eq!(ds.schema().kind_of("age"), Some(ColumnKind::Numeric));
        assert_eq!(ds.schema().kind_of("job"), Some(ColumnKind::Categorical));
        assert_eq!(ds.schema().kind_of("y"), Some(ColumnKind::Categorical));
        assert_eq!(ds.n_samples(), 3);
        assert_eq!(ds.n_features(), 2);
        let order: Vec<_> = ds.schema().columns.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(order, ["age", "job", "y"]);
    }

    #[test]
    fn loading_twice_is_identical() {
        let a = load(SMALL, &TypeHints::new()).unwrap();
        let b = load(SMALL, &TypeHints::new()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unparsable_cell_makes_column_categorical() {
        let ds = load("age,job,y\n31,clerk,no\nabc,chef,yes\n27,clerk,no\n", &TypeHints::new()).unwrap();
        assert_eq!(ds.schema().kind_of("age"), Some(ColumnKind::Categorical));
    }

    #[test]
    fn hints_override_and_are_local() {
        let mut hints = TypeHints::new();
        hints.insert("age".into(), ColumnKind::Categorical);
        let ds = load(SMALL, &hints).unwrap();
        assert_eq!(ds.schema().kind_of("age"), Some(ColumnKind::Categorical));
        assert_eq!(ds.schema().kind_of("job"), Some(ColumnKind::Categorical));

        let mut bad = TypeHints::new();
        bad.insert("job".into(), ColumnKind::Numeric);
        assert!(matches!(load(SMALL, &bad), Err(Error::Parse { row: Some(2), .. })));
    }

    #[test]
    fn missing_label_column_is_schema_error() {
        let err = read_csv(SMALL.as_bytes(), "target", &TypeHints::new()).unwrap_err();
        assert!(matches!(err, Error::Schema(_)));
    }

    #[test]
    fn ragged_row_reports_row_number() {
        let err = load("age,job,y\n31,clerk,no\n45,chef\n", &TypeHints::new()).unwrap_err();
        match err {
            Error::Parse { row, .. } => assert_eq!(row, Some(3)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_inputs_are_parse_errors() {
        assert!(matches!(load("", &TypeHints::new()), Err(Error::Parse { .. })));
        assert!(matches!(load("age,job,y\n", &TypeHints::new()), Err(Error::Parse { .. })));
    }

    #[test]
    fn single_class_label_rejected() {
        assert!(matches!(load("a,y\n1,x\n2,x\n", &TypeHints::new()), Err(Error::Schema(_))));
    }

    #[test]
    fn missing_cells() {
        let ds = load("age,job,y\n31,,no\n,chef,yes\n27,clerk,no\n29,?,yes\n", &TypeHints::new()).unwrap();
        match &ds.feature("age").unwrap().values {
            ColumnValues::Numeric(v) => assert_eq!(v, &[Some(31.0), None, Some(27.0), Some(29.0)]),
            other => panic!("unexpected {other:?}"),
        }
        match &ds.feature("job").unwrap().values {
            ColumnValues::Categorical(v) => {
                assert_eq!(v[0], MISSING_TOKEN);
                assert_eq!(v[3], MISSING_TOKEN);
            }
            other => panic!("unexpected {other:?}"),
        }
        let (filled, fill) = impute_median(&[Some(31.0), None, Some(27.0), Some(29.0)], &[0, 1, 2]);
        assert_eq!(fill, 29.0);
        assert_eq!(filled, vec![31.0, 29.0, 27.0, 29.0]);
    }

    #[test]
    fn split_cardinality_and_determinism() {
        let s = split_train_test(10, 0.8, 7).unwrap();
        assert_eq!(s.train.len(), 8);
        assert_eq!(s.test.len(), 2);
        assert!(s.train.iter().all(|i| !s.test.contains(i)));
        assert_eq!(s, split_train_test(10, 0.8, 7).unwrap());
    }

    #[test]
    fn split_depends_on_seed() {
        let a = split_train_test(1000, 0.8, 7).unwrap();
        let b = split_train_test(1000, 0.8, 8).unwrap();
        assert_ne!(a.test, b.test);
    }

    #[test]
    fn degenerate_fractions_rejected() {
        for f in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(split_train_test(10, f, 1).is_err());
        }
        assert!(split_train_test(10, 0.95, 1).is_err());
        assert!(split_train_test(1, 0.5, 1).is_err());
    }

    #[test]
    fn class_ids_follow_training_order() {
        let ds = load(SMALL, &TypeHints::new()).unwrap();
        let split = Split { train: vec![1, 2], test: vec![0], seed: 0 };
        let idx = ds.class_index(&split);
        assert_eq!(idx.classes, vec!["yes", "no"]);
        assert_eq!(idx.ids, vec![1, 0, 1]);
    }

    proptest::proptest! {
        #[test]
        fn split_is_a_partition(n in 2usize..400, frac in 0.05f64..0.95, seed: u64) {
            proptest::prop_assume!(frac * n as f64 >= 1.0 && (1.0 - frac) * n as f64 >= 1.0);
            let s = split_train_test(n, frac, seed).unwrap();
            let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
            all.sort_unstable();
            proptest::prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            let expected = frac * n as f64;
            proptest::prop_assert!((s.train.len() as f64 - expected).abs() <= 1.0);
        }
    }
}
