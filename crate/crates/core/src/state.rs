//! Fixed-length summaries of a hashed feature table.
//!
//! The state vector is a "describe of describe": eight statistics of every
//! sample row, then the same eight statistics of each of those eight
//! columns, flattened column by column into 64 entries. Its length does not
//! depend on how many features the table holds.

use crate::error::{Error, Result};
use crate::hashing::HashedTable;
use crate::scalar::Scalar;

pub const N_STATS: usize = 8;
pub const STATE_DIM: usize = N_STATS * N_STATS;

/// Position of each statistic in a [`describe`] result.
pub mod stat {
    pub const COUNT: usize = 0;
    pub const MEAN: usize = 1;
    pub const STD: usize = 2;
    pub const MIN: usize = 3;
    pub const Q25: usize = 4;
    pub const Q50: usize = 5;
    pub const Q75: usize = 6;
    pub const MAX: usize = 7;
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<T>(Vec<T>);

impl<T: Scalar> StateVector<T> {
    pub fn from_vec(v: Vec<T>) -> Result<Self> {
        if v.len() != STATE_DIM {
            return Err(Error::arg(format!("state vector needs {STATE_DIM} entries, got {}", v.len())));
        }
        Ok(Self(v))
    }

    pub fn zeros() -> Self {
        Self(vec![T::zero(); STATE_DIM])
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    /// Entry for statistic `outer` of the column holding per-row statistic `inner`.
    pub fn get(&self, inner: usize, outer: usize) -> T {
        self.0[inner * N_STATS + outer]
    }
}

/// Eight statistics of one hashed column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureRep<T>(pub [T; N_STATS]);

impl<T: Scalar> FeatureRep<T> {
    pub fn as_slice(&self) -> &[T] {
        &self.0
    }
}

fn percentile<T: Scalar>(sorted: &[T], p: f64) -> T {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let frac = T::lit(pos - lo as f64);
    match sorted.get(lo + 1) {
        Some(&hi) => sorted[lo] + (hi - sorted[lo]) * frac,
        None => sorted[lo],
    }
}

/// `[count, mean, population std, min, q25, median, q75, max]`, with
/// quartiles interpolated linearly between closest ranks.
pub fn describe<T: Scalar>(values: &[T]) -> Result<[T; N_STATS]> {
    if values.is_empty() {
        return Err(Error::arg("describe of an empty list"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    Ok(describe_sorted(&sorted))
}

fn describe_sorted<T: Scalar>(sorted: &[T]) -> [T; N_STATS] {
    let n = T::from_count(sorted.len());
    let mean = sorted.iter().copied().sum::<T>() / n;
    let var = sorted.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>() / n;
    [
        n,
        mean,
        var.sqrt(),
        sorted[0],
        percentile(sorted, 0.25),
        percentile(sorted, 0.5),
        percentile(sorted, 0.75),
        sorted[sorted.len() - 1],
    ]
}

/// Two-pass summary of a hashed table; always [`STATE_DIM`] entries.
pub fn state_vector<T: Scalar>(table: &HashedTable) -> Result<StateVector<T>> {
    let (n, f) = (table.n_samples(), table.n_features());
    if n == 0 || f == 0 {
        return Err(Error::arg("state of an empty table"));
    }
    let mut per_row: Vec<Vec<T>> = (0..N_STATS).map(|_| Vec::with_capacity(n)).collect();
    let mut row = vec![0u32; f];
    let mut row_t = vec![T::zero(); f];
    for i in 0..n {
        for (slot, col) in row.iter_mut().zip(table.columns()) {
            *slot = col[i];
        }
        row.sort_unstable();
        for (dst, &v) in row_t.iter_mut().zip(&row) {
            *dst = T::from_u32(v).expect("bucket id representable");
        }
        for (col, s) in per_row.iter_mut().zip(describe_sorted(&row_t)) {
            col.push(s);
        }
    }
    let mut out = Vec::with_capacity(STATE_DIM);
    for col in &per_row {
        out.extend(describe(col)?);
    }
    Ok(StateVector(out))
}

pub fn feature_rep<T: Scalar>(column: &[u32]) -> Result<FeatureRep<T>> {
    let values: Vec<T> = column
        .iter()
        .map(|&v| T::from_u32(v).expect("bucket id representable"))
        .collect();
    describe(&values).map(FeatureRep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn describe_constant() {
        assert_eq!(describe(&[5.0, 5.0, 5.0]).unwrap(), [3.0, 5.0, 0.0, 5.0, 5.0, 5.0, 5.0, 5.0]);
    }

    #[test]
    fn describe_one_to_four() {
        // Oracle: numpy mean/std(ddof=0)/percentile(linear) on [1, 2, 3, 4].
        let d = describe::<f64>(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        let want = [4.0, 2.5, 1.118033988749895, 1.0, 1.75, 2.5, 3.25, 4.0];
        for (a, b) in d.iter().zip(want) {
            assert!((a - b).abs() < 1e-15, "{d:?}");
        }
    }

    #[test]
    fn describe_empty_is_error() {
        assert!(describe::<f64>(&[]).is_err());
        assert!(feature_rep::<f64>(&[]).is_err());
    }

    #[test]
    fn feature_reps() {
        assert_eq!(feature_rep::<f64>(&[7, 7, 7, 7]).unwrap().0, [4.0, 7.0, 0.0, 7.0, 7.0, 7.0, 7.0, 7.0]);
        assert_eq!(feature_rep::<f64>(&[0, 1]).unwrap().0, [2.0, 0.5, 0.5, 0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(feature_rep::<f64>(&[3, 1, 2]).unwrap(), feature_rep::<f64>(&[3, 1, 2]).unwrap());
    }

    #[test]
    fn works_in_single_precision() {
        let d = describe(&[1.0f32, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(d[stat::Q25], 1.75);
        let t = HashedTable::from_columns(vec![vec![1, 2], vec![3, 4]], 8).unwrap();
        assert_eq!(state_vector::<f32>(&t).unwrap().as_slice().len(), STATE_DIM);
    }

    #[test]
    fn length_is_fixed() {
        let three = HashedTable::from_columns(vec![vec![1, 2, 3]; 3], 64).unwrap();
        let nine = HashedTable::from_columns(vec![vec![1, 2, 3]; 9], 64).unwrap();
        assert_eq!(state_vector::<f64>(&three).unwrap().as_slice().len(), 64);
        assert_eq!(state_vector::<f64>(&nine).unwrap().as_slice().len(), 64);
        assert!(state_vector::<f64>(&HashedTable::from_columns(vec![], 64).unwrap()).is_err());
    }

    #[test]
    fn constant_table_propagates() {
        let t = HashedTable::from_columns(vec![vec![9; 6]; 4], 64).unwrap();
        let s = state_vector::<f64>(&t).unwrap();
        assert_eq!(s.get(stat::MEAN, stat::MEAN), 9.0);
        for outer in 1..N_STATS {
            assert_eq!(s.get(stat::STD, outer), 0.0);
        }
        for inner in 0..N_STATS {
            assert_eq!(s.get(inner, stat::STD), 0.0);
        }
    }

    #[test]
    fn duplicating_rows_changes_only_counts_and_quartiles() {
        let cols = vec![vec![1, 5, 9], vec![3, 3, 8], vec![4, 1, 1]];
        let doubled: Vec<Vec<u32>> = cols.iter().map(|c| c.iter().chain(c).copied().collect()).collect();
        let a = state_vector::<f64>(&HashedTable::from_columns(cols, 10).unwrap()).unwrap();
        let b = state_vector::<f64>(&HashedTable::from_columns(doubled, 10).unwrap()).unwrap();
        for inner in 0..N_STATS {
            assert_eq!(b.get(inner, stat::COUNT), 2.0 * a.get(inner, stat::COUNT));
            for outer in [stat::MEAN, stat::STD, stat::MIN, stat::MAX] {
                let (x, y) = (a.get(inner, outer), b.get(inner, outer));
                assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0), "({inner},{outer}) {x} vs {y}");
            }
        }
        // Interpolated quartiles see a different rank grid once rows repeat.
        let quartiles = [stat::Q25, stat::Q50, stat::Q75];
        assert!((0..N_STATS).any(|i| quartiles.iter().any(|&q| a.get(i, q) != b.get(i, q))));
    }

    fn table() -> impl Strategy<Value = Vec<Vec<u32>>> {
        (1usize..12, 1usize..20).prop_flat_map(|(f, n)| prop::collection::vec(prop::collection::vec(0u32..64, n), f))
    }

    proptest! {
        #[test]
        fn permutation_invariance(cols in table(), seed: u64) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let n = cols[0].len();
            let base = state_vector::<f64>(&HashedTable::from_columns(cols.clone(), 64).unwrap()).unwrap();

            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            let rows: Vec<Vec<u32>> = cols.iter().map(|c| order.iter().map(|&i| c[i]).collect()).collect();
            prop_assert_eq!(&base, &state_vector::<f64>(&HashedTable::from_columns(rows, 64).unwrap()).unwrap());

            let mut feats = cols.clone();
            feats.shuffle(&mut rng);
            prop_assert_eq!(&base, &state_vector::<f64>(&HashedTable::from_columns(feats, 64).unwrap()).unwrap());
            prop_assert!(base.as_slice().iter().all(|v| v.is_finite()));
        }
    }
}
