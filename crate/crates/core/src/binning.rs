//! Supervised discretization of numeric columns by bottom-up chi-square
//! merging of adjacent bins (ChiMerge).

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper 5% critical values of the chi-square distribution, df = 1..=10.
const CHI2_CRITICAL_05: [f64; 10] = [
    3.841458820694124,
    5.991464547107979,
    7.814727903251179,
    9.487729036781154,
    11.070497693516351,
    12.591587243743977,
    14.067140449340169,
    15.50731305586545,
    16.918977604620448,
    18.307038053275146,
];

/// Chi-square critical value at significance 0.05. Degrees of freedom above
/// the embedded table are clamped to 10.
pub fn chi2_critical_05(df: usize) -> f64 {
    CHI2_CRITICAL_05[df.clamp(1, CHI2_CRITICAL_05.len()) - 1]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinningSpec {
    pub column: String,
    /// Strictly increasing bin boundaries.
    pub cuts: Vec<f64>,
}

impl BinningSpec {
    pub fn n_bins(&self) -> usize {
        self.cuts.len() + 1
    }

    /// Bin of a single value: the number of cuts `<= v`.
    pub fn bin_of(&self, v: f64) -> u32 {
        self.cuts.partition_point(|&c| c <= v) as u32
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChiMergeConfig {
    /// Bin count that must be reached before the threshold can stop merging.
    pub max_bins: usize,
    /// Merging never goes below this many bins (clamped to `max_bins`).
    pub min_bins: usize,
    /// Stop threshold; `None` picks the 0.05 critical value for C-1 degrees of freedom.
    pub chi_threshold: Option<f64>,
}

impl Default for ChiMergeConfig {
    fn default() -> Self {
        Self { max_bins: 10, min_bins: 2, chi_threshold: None }
    }
}

impl ChiMergeConfig {
    pub fn threshold_for(&self, n_classes: usize) -> f64 {
        self.chi_threshold
            .unwrap_or_else(|| chi2_critical_05(n_classes.saturating_sub(1)))
    }

    /// Shared stop rule: at most `max_bins` bins, and either the floor is
    /// reached or every adjacent statistic is at least the threshold.
    pub fn should_stop(&self, n_bins: usize, min_chi: f64, threshold: f64) -> bool {
        if n_bins <= 1 {
            return true;
        }
        let floor = self.min_bins.min(self.max_bins).max(1);
        n_bins <= self.max_bins && (n_bins <= floor || min_chi >= threshold)
    }
}

/// Chi-square statistic of two adjacent bins' class counts.
///
/// Cells with zero expected count contribute nothing. Terms are summed in
/// sorted order so the value is exactly invariant under swapping the bins or
/// permuting classes.
pub fn chi_square_adjacent(left: &[u64], right: &[u64]) -> Result<f64> {
    if left.len() != right.len() {
        return Err(Error::arg("bins have different class counts"));
    }
    let r0: u64 = left.iter().sum();
    let r1: u64 = right.iter().sum();
    let n = r0 + r1;
    if n == 0 {
        return Err(Error::arg("contingency pair is all zero"));
    }
    let n = n as f64;
    let mut terms = Vec::with_capacity(2 * left.len());
    for (&a0, &a1) in left.iter().zip(right) {
        let c = (a0 + a1) as f64;
        for (a, r) in [(a0, r0), (a1, r1)] {
            let e = r as f64 * c / n;
            if e > 0.0 {
                let d = a as f64 - e;
                terms.push(d * d / e);
            }
        }
    }
    terms.sort_by(f64::total_cmp);
    Ok(terms.iter().sum())
}

#[derive(Debug, Clone)]
struct Bin {
    lo: f64,
    hi: f64,
    counts: Vec<u64>,
}

#[derive(Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Result of a ChiMerge fit with the order in which bins were merged.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiMergeTrace {
    pub spec: BinningSpec,
    /// Position (among the bins alive at that moment) of the left bin of
    /// each merged pair, in merge order. Empty unless tracing was requested.
    pub merges: Vec<usize>,
}

/// Initial one-bin-per-distinct-value partition: (value, class counts), ascending.
pub fn initial_bins(values: &[f64], labels: &[usize], n_classes: usize) -> Vec<(f64, Vec<u64>)> {
    let mut pairs: Vec<(f64, usize)> = values.iter().copied().zip(labels.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, Vec<u64>)> = Vec::new();
    for (v, y) in pairs {
        match out.last_mut() {
            Some((last, counts)) if *last == v => counts[y] += 1,
            _ => {
                let mut counts = vec![0; n_classes];
                counts[y] += 1;
                out.push((v, counts));
            }
        }
    }
    out
}

pub fn fit_chimerge(
    column: &str,
    values: &[f64],
    labels: &[usize],
    n_classes: usize,
    cfg: &ChiMergeConfig,
) -> Result<BinningSpec> {
    chimerge(column, values, labels, n_classes, cfg, false).map(|t| t.spec)
}

/// Fits cut points by repeatedly merging the adjacent pair with the smallest
/// chi-square (leftmost on ties) until [`ChiMergeConfig::should_stop`] holds.
pub fn fit_chimerge_traced(
    column: &str,
    values: &[f64],
    labels: &[usize],
    n_classes: usize,
    cfg: &ChiMergeConfig,
) -> Result<ChiMergeTrace> {
    chimerge(column, values, labels, n_classes, cfg, true)
}

fn chimerge(
    column: &str,
    values: &[f64],
    labels: &[usize],
    n_classes: usize,
    cfg: &ChiMergeConfig,
    record: bool,
) -> Result<ChiMergeTrace> {
    if values.is_empty() {
        return Err(Error::arg("cannot bin an empty column"));
    }
    if values.len() != labels.len() {
        return Err(Error::arg("values and labels differ in length"));
    }
    if cfg.max_bins == 0 {
        return Err(Error::arg("max_bins must be at least 1"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::arg(format!("column '{column}' has non-finite values")));
    }
    if let Some(&y) = labels.iter().find(|&&y| y >= n_classes) {
        return Err(Error::arg(format!("class id {y} out of range for {n_classes} classes")));
    }
    let threshold = cfg.threshold_for(n_classes);

    let mut bins: Vec<Bin> = initial_bins(values, labels, n_classes)
        .into_iter()
        .map(|(v, counts)| Bin { lo: v, hi: v, counts })
        .collect();
    let k = bins.len();

    // Doubly linked list over bin slots; slot ids keep left-to-right order.
    let mut next: Vec<usize> = (1..=k).collect();
    let mut prev: Vec<Option<usize>> = (0..k).map(|i| i.checked_sub(1)).collect();
    let mut alive = vec![true; k];
    let mut version = vec![0u32; k];
    let mut chi = vec![f64::INFINITY; k];
    let mut heap = BinaryHeap::new();
    for i in 0..k.saturating_sub(1) {
        chi[i] = chi_square_adjacent(&bins[i].counts, &bins[i + 1].counts)?;
        heap.push(Reverse((Key(chi[i]), i, 0u32)));
    }

    let mut n_bins = k;
    let mut merges = Vec::new();
    loop {
        // Discard stale entries so the top is the current minimum.
        while let Some(Reverse((_, i, ver))) = heap.peek() {
            if alive[*i] && next[*i] < k && version[*i] == *ver {
                break;
            }
            heap.pop();
        }
        let min_chi = heap.peek().map(|Reverse((c, _, _))| c.0).unwrap_or(f64::INFINITY);
        if cfg.should_stop(n_bins, min_chi, threshold) {
            break;
        }
        let Reverse((_, i, _)) = heap.pop().expect("a mergeable pair exists");
        let j = next[i];
        if record {
            merges.push((0..i).filter(|&s| alive[s]).count());
        }

        let absorbed = std::mem::take(&mut bins[j].counts);
        for (c, a) in bins[i].counts.iter_mut().zip(absorbed) {
            *c += a;
        }
        bins[i].hi = bins[j].hi;
        alive[j] = false;
        next[i] = next[j];
        if next[i] < k {
            prev[next[i]] = Some(i);
        }
        n_bins -= 1;

        version[i] += 1;
        if next[i] < k {
            chi[i] = chi_square_adjacent(&bins[i].counts, &bins[next[i]].counts)?;
            heap.push(Reverse((Key(chi[i]), i, version[i])));
        }
        if let Some(p) = prev[i] {
            version[p] += 1;
            chi[p] = chi_square_adjacent(&bins[p].counts, &bins[i].counts)?;
            heap.push(Reverse((Key(chi[p]), p, version[p])));
        }
    }

    let live: Vec<&Bin> = (0..k).filter(|&s| alive[s]).map(|s| &bins[s]).collect();
    let cuts = live.windows(2).map(|w| 0.5 * (w[0].hi + w[1].lo)).collect();
    Ok(ChiMergeTrace { spec: BinningSpec { column: column.to_string(), cuts }, merges })
}

/// Maps each value to its bin id; order preserving, total over the reals.
pub fn apply_binning(values: &[f64], spec: &BinningSpec) -> Vec<u32> {
    values.iter().map(|&v| spec.bin_of(v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn big() -> ChiMergeConfig {
        ChiMergeConfig { max_bins: 2, min_bins: 2, chi_threshold: Some(1e300) }
    }

    #[test]
    fn chi_square_hand_values() {
        assert_eq!(chi_square_adjacent(&[5, 5], &[5, 5]).unwrap(), 0.0);
        // R = C = 10, N = 20, E = 5 in every cell: 4 * 25 / 5.
        assert_eq!(chi_square_adjacent(&[10, 0], &[0, 10]).unwrap(), 20.0);
        assert_eq!(chi_square_adjacent(&[1, 0], &[0, 0]).unwrap(), 0.0);
        assert!(chi_square_adjacent(&[0, 0], &[0, 0]).is_err());
    }

    #[test]
    fn constant_column_has_one_bin() {
        let spec = fit_chimerge("x", &[3.0; 5], &[0, 1, 0, 1, 1], 2, &ChiMergeConfig::default()).unwrap();
        assert!(spec.cuts.is_empty());
        assert_eq!(spec.n_bins(), 1);
    }

    #[test]
    fn pure_regions_merge_first() {
        let spec = fit_chimerge("x", &[1.0, 2.0, 3.0, 4.0], &[0, 0, 1, 1], 2, &big()).unwrap();
        assert_eq!(spec.cuts, vec![2.5]);
    }

    #[test]
    fn zero_threshold_keeps_every_value() {
        let values = [5.0, 1.0, 2.0, 2.0, 9.0, 7.0];
        let labels = [0, 1, 1, 0, 0, 1];
        let cfg = ChiMergeConfig { max_bins: 10, min_bins: 2, chi_threshold: Some(0.0) };
        let spec = fit_chimerge("x", &values, &labels, 2, &cfg).unwrap();
        assert_eq!(spec.n_bins(), 5);
        assert_eq!(spec.cuts, vec![1.5, 3.5, 6.0, 8.0]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(fit_chimerge("x", &[], &[], 2, &ChiMergeConfig::default()).is_err());
        let cfg = ChiMergeConfig { max_bins: 0, ..Default::default() };
        assert!(fit_chimerge("x", &[1.0], &[0], 2, &cfg).is_err());
    }

    #[test]
    fn interval_membership() {
        let spec = BinningSpec { column: "x".into(), cuts: vec![2.5] };
        assert_eq!(apply_binning(&[1.0, 3.0, -1e9, 2.5], &spec), vec![0, 1, 0, 1]);
        let single = BinningSpec { column: "x".into(), cuts: vec![] };
        assert_eq!(apply_binning(&[-4.0, 0.0, 1e12], &single), vec![0, 0, 0]);
    }

    #[test]
    fn default_threshold_tracks_class_count() {
        let cfg = ChiMergeConfig::default();
        assert_eq!(cfg.threshold_for(2), 3.841458820694124);
        assert_eq!(cfg.threshold_for(11), 18.307038053275146);
        assert_eq!(cfg.threshold_for(40), 18.307038053275146);
    }

    proptest! {
        #[test]
        fn chi_square_symmetries(a in prop::collection::vec(0u64..20, 3), b in prop::collection::vec(0u64..20, 3)) {
            prop_assume!(a.iter().chain(&b).sum::<u64>() > 0);
            let x = chi_square_adjacent(&a, &b).unwrap();
            prop_assert!(x >= 0.0);
            prop_assert_eq!(x, chi_square_adjacent(&b, &a).unwrap());
            let pa = [a[2], a[0], a[1]];
            let pb = [b[2], b[0], b[1]];
            prop_assert_eq!(x, chi_square_adjacent(&pa, &pb).unwrap());
        }

        #[test]
        fn binning_is_monotone(mut cuts in prop::collection::vec(-100.0f64..100.0, 0..8), v1 in -200.0f64..200.0, v2 in -200.0f64..200.0) {
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            let spec = BinningSpec { column: "x".into(), cuts };
            let (lo, hi) = if v1 <= v2 { (v1, v2) } else { (v2, v1) };
            prop_assert!(spec.bin_of(lo) <= spec.bin_of(hi));
            prop_assert!((spec.bin_of(hi) as usize) < spec.n_bins());
        }

        #[test]
        fn fit_respects_max_bins(
            data in prop::collection::vec((0u32..40, 0usize..3), 1..120),
            max_bins in 1usize..8,
        ) {
            let values: Vec<f64> = data.iter().map(|d| d.0 as f64).collect();
            let labels: Vec<usize> = data.iter().map(|d| d.1).collect();
            let cfg = ChiMergeConfig { max_bins, ..Default::default() };
            let spec = fit_chimerge("x", &values, &labels, 3, &cfg).unwrap();
            prop_assert!(spec.n_bins() <= max_bins);
            prop_assert!(spec.cuts.windows(2).all(|w| w[0] < w[1]));
        }
    }
}
