//! Plug-in mutual information, the relevance/redundancy utilities built on
//! it, and classification metrics.

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense ids by first appearance.
fn compact<A: Eq + Hash>(xs: &[A]) -> (Vec<u32>, usize) {
    let mut ids: HashMap<&A, u32> = HashMap::new();
    let codes = xs
        .iter()
        .map(|x| {
            let next = ids.len() as u32;
            *ids.entry(x).or_insert(next)
        })
        .collect();
    (codes, ids.len())
}

/// Entropy in bits of a count vector. Counts are summed in ascending order,
/// so the result only depends on the multiset of counts.
fn entropy_bits<T: Scalar>(counts: &mut [u64], n: u64) -> T {
    counts.sort_unstable();
    let nf = T::lit(n as f64);
    let mut h = T::zero();
    for &c in counts.iter().filter(|&&c| c > 0) {
        let p = T::lit(c as f64) / nf;
        h -= p * p.log2();
    }
    h
}

/// Plug-in entropy of a categorical column, in bits.
pub fn entropy<T: Scalar, A: Eq + Hash>(x: &[A]) -> Result<T> {
    if x.is_empty() {
        return Err(Error::arg("entropy of an empty column"));
    }
    let (codes, k) = compact(x);
    let mut counts = vec![0u64; k];
    for c in codes {
        counts[c as usize] += 1;
    }
    Ok(entropy_bits(&mut counts, x.len() as u64))
}

/// Plug-in mutual information `I(X;Y)` in bits over the empirical joint.
///
/// Evaluated as `H(X) + H(Y) - H(X,Y)`, which is algebraically the
/// `sum p(a,b) log2 p(a,b)/(p(a)p(b))` form; it makes `I(x,y) == I(y,x)` and
/// `I(x,x) == H(x)` hold bit for bit. Negative rounding residue is clamped to 0.
pub fn mutual_information<T: Scalar, A: Eq + Hash, B: Eq + Hash>(x: &[A], y: &[B]) -> Result<T> {
    if x.len() != y.len() {
        return Err(Error::arg(format!("column lengths differ: {} vs {}", x.len(), y.len())));
    }
    if x.is_empty() {
        return Err(Error::arg("mutual information of empty columns"));
    }
    let n = x.len() as u64;
    let (cx, kx) = compact(x);
    let (cy, ky) = compact(y);
    let mut mx = vec![0u64; kx];
    let mut my = vec![0u64; ky];
    for (&a, &b) in cx.iter().zip(&cy) {
        mx[a as usize] += 1;
        my[b as usize] += 1;
    }
    let mut joint: Vec<u64> = if kx.saturating_mul(ky) <= 1 << 16 {
        let mut dense = vec![0u64; kx * ky];
        for (&a, &b) in cx.iter().zip(&cy) {
            dense[a as usize * ky + b as usize] += 1;
        }
        dense
    } else {
        let mut sparse: HashMap<(u32, u32), u64> = HashMap::new();
        for (&a, &b) in cx.iter().zip(&cy) {
            *sparse.entry((a, b)).or_insert(0) += 1;
        }
        sparse.into_values().collect()
    };
    let hx: T = entropy_bits(&mut mx, n);
    let hy: T = entropy_bits(&mut my, n);
    let hxy: T = entropy_bits(&mut joint, n);
    Ok((hx + hy - hxy).max(T::zero()))
}

/// Pairwise mutual information matrix (row-major, `k * k`), diagonal included.
pub fn mi_matrix<T: Scalar, A: Eq + Hash>(features: &[&[A]]) -> Result<Vec<T>> {
    let k = features.len();
    let mut m = vec![T::zero(); k * k];
    for i in 0..k {
        for j in i..k {
            let v = mutual_information(features[i], features[j])?;
            m[i * k + j] = v;
            m[j * k + i] = v;
        }
    }
    Ok(m)
}

/// Mean of a square MI matrix over all ordered pairs, `(1/k^2) sum_ij m_ij`.
pub fn redundancy_from_matrix<T: Scalar>(m: &[T], k: usize) -> Result<T> {
    if k == 0 || m.len() != k * k {
        return Err(Error::arg("redundancy needs a non-empty square matrix"));
    }
    let total: T = m.iter().copied().sum();
    Ok(total / T::from_count(k * k))
}

/// Mean pairwise mutual information of a feature set, diagonal (self
/// information) terms included.
pub fn redundancy<T: Scalar, A: Eq + Hash>(features: &[&[A]]) -> Result<T> {
    if features.is_empty() {
        return Err(Error::arg("redundancy of an empty feature set"));
    }
    redundancy_from_matrix(&mi_matrix(features)?, features.len())
}

/// Mean mutual information between each feature and the label.
pub fn relevance<T: Scalar, A: Eq + Hash, B: Eq + Hash>(features: &[&[A]], y: &[B]) -> Result<T> {
    if features.is_empty() {
        return Err(Error::arg("relevance of an empty feature set"));
    }
    let mut total = T::zero();
    for f in features {
        total += mutual_information(f, y)?;
    }
    Ok(total / T::from_count(features.len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    /// Counts for `positive` treated as the positive class.
    pub fn one_vs_rest(pred: &[usize], truth: &[usize], positive: usize) -> Self {
        let mut c = Self::default();
        for (&p, &t) in pred.iter().zip(truth) {
            match (p == positive, t == positive) {
                (true, true) => c.tp += 1,
                (false, false) => c.tn += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        c
    }

    fn ratio<T: Scalar>(num: u64, den: u64) -> T {
        if den == 0 {
            T::zero()
        } else {
            T::lit(num as f64) / T::lit(den as f64)
        }
    }

    pub fn precision<T: Scalar>(&self) -> T {
        Self::ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall<T: Scalar>(&self) -> T {
        Self::ratio(self.tp, self.tp + self.fn_)
    }
}

fn f_measure<T: Scalar>(p: T, r: T) -> T {
    if p + r == T::zero() {
        T::zero()
    } else {
        T::lit(2.0) * p * r / (p + r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics<T> {
    pub accuracy: T,
    pub precision: T,
    pub recall: T,
    pub f_measure: T,
}

/// Accuracy plus precision/recall/F-measure. With two classes the positive
/// class is id 1; with more, precision, recall and F are macro averages over
/// the `n_classes` one-vs-rest problems.
pub fn classification_metrics<T: Scalar>(
    pred: &[usize],
    truth: &[usize],
    n_classes: usize,
) -> Result<ClassificationMetrics<T>> {
    if pred.len() != truth.len() {
        return Err(Error::arg(format!("{} predictions for {} labels", pred.len(), truth.len())));
    }
    if pred.is_empty() {
        return Err(Error::arg("no predictions to score"));
    }
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    let accuracy = T::from_count(hits) / T::from_count(pred.len());
    if n_classes <= 2 {
        let c = ConfusionCounts::one_vs_rest(pred, truth, 1);
        let (precision, recall) = (c.precision::<T>(), c.recall::<T>());
        return Ok(ClassificationMetrics { accuracy, precision, recall, f_measure: f_measure(precision, recall) });
    }
    let (mut p_sum, mut r_sum, mut f_sum) = (T::zero(), T::zero(), T::zero());
    for class in 0..n_classes {
        let c = ConfusionCounts::one_vs_rest(pred, truth, class);
        let (p, r) = (c.precision::<T>(), c.recall::<T>());
        p_sum += p;
        r_sum += r;
        f_sum += f_measure(p, r);
    }
    let k = T::from_count(n_classes);
    Ok(ClassificationMetrics { accuracy, precision: p_sum / k, recall: r_sum / k, f_measure: f_sum / k })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mi(x: &[u32], y: &[u32]) -> f64 {
        mutual_information(x, y).unwrap()
    }

    #[test]
    fn identity_and_constant() {
        assert_eq!(mi(&[0, 1, 0, 1], &[0, 1, 0, 1]), 1.0);
        assert_eq!(mi(&[3, 3, 3, 3], &[0, 1, 0, 1]), 0.0);
    }

    #[test]
    fn two_by_two_golden() {
        // Joint counts [[2,1],[1,2]] over 6 samples, summed cell by cell:
        // 2 * (2/6) log2((2/6)/(1/4)) + 2 * (1/6) log2((1/6)/(1/4)).
        let x = [0, 0, 0, 1, 1, 1];
        let y = [0, 0, 1, 0, 1, 1];
        let want = (2.0 / 3.0) * (4.0f64 / 3.0).log2() + (1.0 / 3.0) * (2.0f64 / 3.0).log2();
        assert!((mi(&x, &y) - want).abs() < 1e-15);
        assert!((mi(&x, &y) - 0.08170416594551039).abs() < 1e-15);
    }

    #[test]
    fn length_mismatch() {
        assert!(mutual_information::<f64, _, _>(&[1, 2], &[1]).is_err());
        assert!(mutual_information::<f64, u8, u8>(&[], &[]).is_err());
    }

    #[test]
    fn redundancy_examples() {
        let f: &[u32] = &[0, 1, 0, 1];
        assert_eq!(redundancy::<f64, _>(&[f]).unwrap(), 1.0);
        assert_eq!(redundancy::<f64, _>(&[f, f]).unwrap(), 1.0);
        // Exact product table: independent, so only the two diagonal entropies remain.
        let a: &[u32] = &[0, 0, 1, 1];
        let b: &[u32] = &[0, 1, 0, 1];
        assert_eq!(redundancy::<f64, _>(&[a, b]).unwrap(), (1.0 + 1.0) / 4.0);
        assert!(redundancy::<f64, u32>(&[]).is_err());
    }

    #[test]
    fn relevance_examples() {
        let y: &[u32] = &[0, 1, 1, 0];
        let c: &[u32] = &[4, 4, 4, 4];
        assert_eq!(relevance::<f64, _, _>(&[y], y).unwrap(), 1.0);
        assert_eq!(relevance::<f64, _, _>(&[c, c], y).unwrap(), 0.0);
        assert_eq!(relevance::<f64, _, _>(&[y, c], y).unwrap(), 0.5);
        assert!(relevance::<f64, u32, u32>(&[], y).is_err());
    }

    #[test]
    fn binary_metrics() {
        // TP=45, TN=45, FP=5, FN=5.
        let mut pred = Vec::new();
        let mut truth = Vec::new();
        for (p, t, n) in [(1, 1, 45), (0, 0, 45), (1, 0, 5), (0, 1, 5)] {
            pred.extend(std::iter::repeat_n(p, n));
            truth.extend(std::iter::repeat_n(t, n));
        }
        let m = classification_metrics::<f64>(&pred, &truth, 2).unwrap();
        for v in [m.accuracy, m.precision, m.recall, m.f_measure] {
            assert!((v - 0.9).abs() < 1e-15);
        }
        let perfect = classification_metrics::<f64>(&truth, &truth, 2).unwrap();
        assert_eq!(perfect, ClassificationMetrics { accuracy: 1.0, precision: 1.0, recall: 1.0, f_measure: 1.0 });

        let all_pos = vec![1; 10];
        let balanced: Vec<usize> = (0..10).map(|i| i % 2).collect();
        let m = classification_metrics::<f64>(&all_pos, &balanced, 2).unwrap();
        assert_eq!((m.accuracy, m.recall, m.precision), (0.5, 1.0, 0.5));
        assert!((m.f_measure - 2.0 / 3.0).abs() < 1e-15);

        let none = classification_metrics::<f64>(&[0, 0], &[0, 0], 2).unwrap();
        assert_eq!(none.f_measure, 0.0);
        assert!(classification_metrics::<f64>(&[0], &[0, 1], 2).is_err());
    }

    #[test]
    fn macro_metrics() {
        let m = classification_metrics::<f64>(&[0, 1, 2, 2], &[0, 1, 2, 1], 3).unwrap();
        assert_eq!(m.accuracy, 0.75);
        // Per class precision 1, 1, 1/2; recall 1, 1/2, 1.
        assert!((m.precision - 2.5 / 3.0).abs() < 1e-15);
        assert!((m.recall - 2.5 / 3.0).abs() < 1e-15);
        assert!((m.f_measure - (1.0 + 2.0 / 3.0 + 2.0 / 3.0) / 3.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn mi_properties(pairs in prop::collection::vec((0u32..5, 0u32..4), 1..60), seed: u64) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let x: Vec<u32> = pairs.iter().map(|p| p.0).collect();
            let y: Vec<u32> = pairs.iter().map(|p| p.1).collect();
            let xy = mi(&x, &y);
            prop_assert!(xy >= 0.0);
            prop_assert_eq!(xy, mi(&y, &x));
            prop_assert_eq!(mi(&x, &x), entropy::<f64, _>(&x).unwrap());

            let mut shuffled = pairs.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let sx: Vec<u32> = shuffled.iter().map(|p| p.0).collect();
            let sy: Vec<u32> = shuffled.iter().map(|p| p.1).collect();
            prop_assert_eq!(xy, mi(&sx, &sy));
            prop_assert_eq!(
                relevance::<f64, _, _>(&[&x[..], &y[..]], &y).unwrap(),
                relevance::<f64, _, _>(&[&sx[..], &sy[..]], &sy).unwrap()
            );
            prop_assert_eq!(
                redundancy::<f64, _>(&[&x[..], &y[..]]).unwrap(),
                redundancy::<f64, _>(&[&sx[..], &sy[..]]).unwrap()
            );
        }
    }
}
