//! Downstream evaluation: one-hot over hashed buckets, multinomial logistic
//! regression trained by full-batch gradient descent.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::dataset::Split;
use crate::error::{Error, Result};
use crate::hashing::HashConfig;
use crate::metrics::{classification_metrics, ClassificationMetrics};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LrConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    /// Recorded for reproducibility; zero initialization and full-batch
    /// updates leave nothing to randomize.
    pub seed: u64,
}

impl Default for LrConfig {
    fn default() -> Self {
        Self { learning_rate: 0.1, epochs: 300, l2: 1e-4, seed: 0 }
    }
}

/// Dense 0/1 design matrix: one block of `M` columns per feature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedMatrix {
    pub n_samples: usize,
    pub width: usize,
    /// Row-major cells.
    pub data: Vec<u8>,
}

impl EncodedMatrix {
    pub fn row(&self, i: usize) -> &[u8] {
        &self.data[i * self.width..(i + 1) * self.width]
    }
}

fn check_columns(columns: &[&[u32]], cfg: HashConfig) -> Result<usize> {
    let n = columns.first().map_or(0, |c| c.len());
    for (j, c) in columns.iter().enumerate() {
        if c.len() != n {
            return Err(Error::arg(format!("feature {j} has {} rows, expected {n}", c.len())));
        }
        if let Some(v) = c.iter().find(|&&v| u64::from(v) >= cfg.modulus) {
            return Err(Error::Invariant(format!("bucket {v} of feature {j} outside [0, {})", cfg.modulus)));
        }
    }
    Ok(n)
}

pub fn encode(columns: &[&[u32]], cfg: HashConfig) -> Result<EncodedMatrix> {
    let n = check_columns(columns, cfg)?;
    let m = cfg.width();
    let width = columns.len() * m;
    let mut data = vec![0u8; n * width];
    for (f, col) in columns.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            data[i * width + f * m + v as usize] = 1;
        }
    }
    Ok(EncodedMatrix { n_samples: n, width, data })
}

/// Sparse view of the same design: each row lists its active column per feature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseDesign {
    width: usize,
    per_row: usize,
    active: Vec<u32>,
}

impl SparseDesign {
    pub fn from_columns(columns: &[&[u32]], cfg: HashConfig, rows: &[usize]) -> Result<Self> {
        check_columns(columns, cfg)?;
        let m = cfg.modulus as u32;
        let k = columns.len();
        let mut active = Vec::with_capacity(rows.len() * k);
        for &i in rows {
            for (f, col) in columns.iter().enumerate() {
                active.push(f as u32 * m + col[i]);
            }
        }
        Ok(Self { width: k * cfg.width(), per_row: k, active })
    }

    pub fn n_rows(&self) -> usize {
        self.active.len().checked_div(self.per_row).unwrap_or(0)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.active[i * self.per_row..(i + 1) * self.per_row]
    }
}

/// Training rows with identical active columns, pooled. The loss and its
/// gradient are sums over rows, so pooling leaves them unchanged.
struct Pooled {
    rows: Vec<u32>,
    per_row: usize,
    weight: Vec<u64>,
    /// `groups * n_classes` label counts.
    counts: Vec<u64>,
    n: usize,
}

impl Pooled {
    fn new(design: &SparseDesign, labels: &[usize], n_classes: usize) -> Self {
        let k = design.per_row;
        let mut index: HashMap<&[u32], usize> = HashMap::new();
        let mut rows = Vec::new();
        let mut weight = Vec::new();
        let mut counts = Vec::new();
        for (i, &y) in labels.iter().enumerate() {
            let r = design.row(i);
            let g = *index.entry(r).or_insert_with(|| {
                rows.extend_from_slice(r);
                weight.push(0);
                counts.extend(std::iter::repeat_n(0, n_classes));
                weight.len() - 1
            });
            weight[g] += 1;
            counts[g * n_classes + y] += 1;
        }
        Self { rows, per_row: k, weight, counts, n: labels.len() }
    }

    fn groups(&self) -> usize {
        self.weight.len()
    }

    fn row(&self, g: usize) -> &[u32] {
        &self.rows[g * self.per_row..(g + 1) * self.per_row]
    }
}

/// Multinomial logistic regression over a one-hot design.
#[derive(Debug, Clone, PartialEq)]
pub struct LrModel<T> {
    width: usize,
    n_classes: usize,
    /// `n_classes` rows of `width + 1` weights, bias last.
    weights: Vec<T>,
}

impl<T: Scalar> LrModel<T> {
    pub fn zeros(width: usize, n_classes: usize) -> Self {
        Self { width, n_classes, weights: vec![T::zero(); n_classes * (width + 1)] }
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [T] {
        &mut self.weights
    }

    pub fn class_weights(&self, c: usize) -> &[T] {
        let s = self.width + 1;
        &self.weights[c * s..(c + 1) * s]
    }

    fn logits(&self, active: &[u32], out: &mut [T]) {
        let s = self.width + 1;
        for (c, z) in out.iter_mut().enumerate() {
            let w = &self.weights[c * s..(c + 1) * s];
            let mut acc = w[self.width];
            for &j in active {
                acc += w[j as usize];
            }
            *z = acc;
        }
    }

    /// In-place softmax; returns log of the partition function.
    fn softmax(z: &mut [T]) -> T {
        let max = z.iter().copied().fold(T::neg_infinity(), T::max);
        let mut total = T::zero();
        for v in z.iter_mut() {
            *v = (*v - max).exp();
            total += *v;
        }
        for v in z.iter_mut() {
            *v /= total;
        }
        max + total.ln()
    }

    pub fn predict_proba(&self, active: &[u32]) -> Vec<T> {
        let mut z = vec![T::zero(); self.n_classes];
        self.logits(active, &mut z);
        Self::softmax(&mut z);
        z
    }

    /// Most probable class; ties go to the lowest id.
    pub fn predict(&self, active: &[u32]) -> usize {
        let mut z = vec![T::zero(); self.n_classes];
        self.logits(active, &mut z);
        let mut best = 0;
        for c in 1..self.n_classes {
            if z[c] > z[best] {
                best = c;
            }
        }
        best
    }

    fn loss_grad_pooled(&self, data: &Pooled, l2: T, grad: Option<&mut [T]>) -> T {
        let c_n = self.n_classes;
        let s = self.width + 1;
        let mut z = vec![T::zero(); c_n];
        let mut zs = vec![T::zero(); c_n];
        let mut nll = T::zero();
        let mut grad = grad;
        if let Some(g) = grad.as_deref_mut() {
            g.iter_mut().for_each(|v| *v = T::zero());
        }
        for gi in 0..data.groups() {
            let active = data.row(gi);
            self.logits(active, &mut z);
            zs.copy_from_slice(&z);
            let log_norm = Self::softmax(&mut z);
            let w = T::lit(data.weight[gi] as f64);
            let counts = &data.counts[gi * c_n..(gi + 1) * c_n];
            for c in 0..c_n {
                if counts[c] > 0 {
                    nll += T::lit(counts[c] as f64) * (log_norm - zs[c]);
                }
            }
            if let Some(g) = grad.as_deref_mut() {
                for c in 0..c_n {
                    let delta = w * z[c] - T::lit(counts[c] as f64);
                    if delta == T::zero() {
                        continue;
                    }
                    let gc = &mut g[c * s..(c + 1) * s];
                    for &j in active {
                        gc[j as usize] += delta;
                    }
                    gc[self.width] += delta;
                }
            }
        }
        let n = T::from_count(data.n);
        let mut penalty = T::zero();
        for c in 0..c_n {
            for &w in &self.weights[c * s..c * s + self.width] {
                penalty += w * w;
            }
        }
        if let Some(g) = grad {
            for c in 0..c_n {
                for j in 0..s {
                    let idx = c * s + j;
                    g[idx] /= n;
                    if j < self.width {
                        g[idx] += l2 * self.weights[idx];
                    }
                }
            }
        }
        nll / n + l2 * penalty / T::lit(2.0)
    }

    /// Mean cross-entropy plus `l2 / 2 * |W|^2` (biases unpenalized) and its
    /// gradient, laid out like [`LrModel::weights`].
    pub fn loss_and_grad(&self, design: &SparseDesign, labels: &[usize], l2: T) -> Result<(T, Vec<T>)> {
        self.check_fit_inputs(design, labels)?;
        let pooled = Pooled::new(design, labels, self.n_classes);
        let mut grad = vec![T::zero(); self.weights.len()];
        let loss = self.loss_grad_pooled(&pooled, l2, Some(&mut grad));
        Ok((loss, grad))
    }

    pub fn loss(&self, design: &SparseDesign, labels: &[usize], l2: T) -> Result<T> {
        self.check_fit_inputs(design, labels)?;
        let pooled = Pooled::new(design, labels, self.n_classes);
        Ok(self.loss_grad_pooled(&pooled, l2, None))
    }

    fn check_fit_inputs(&self, design: &SparseDesign, labels: &[usize]) -> Result<()> {
        if design.width() != self.width {
            return Err(Error::arg(format!("design width {} for model width {}", design.width(), self.width)));
        }
        if design.n_rows() != labels.len() {
            return Err(Error::arg(format!("{} rows but {} labels", design.n_rows(), labels.len())));
        }
        if labels.is_empty() {
            return Err(Error::arg("no training rows"));
        }
        if let Some(y) = labels.iter().find(|&&y| y >= self.n_classes) {
            return Err(Error::arg(format!("label {y} outside {} classes", self.n_classes)));
        }
        Ok(())
    }
}

/// Gradient descent for two classes. From zero weights the two class rows
/// stay exact negatives of each other (their gradients are), so only class
/// 1's row `v` is tracked: the logit gap is `2 v.x` and the class-1 gradient
/// is `mean((sigmoid(2 v.x) - y) x) + l2 v`.
fn fit_two_class<T: Scalar>(model: &mut LrModel<T>, data: &Pooled, lr: T, l2: T, epochs: usize) -> Vec<T> {
    let s = model.width + 1;
    let width = model.width;
    let two = T::lit(2.0);
    let n = T::from_count(data.n);
    let mut v = vec![T::zero(); s];
    let mut grad = vec![T::zero(); s];
    let mut history = Vec::with_capacity(epochs);
    for _ in 0..epochs {
        grad.iter_mut().for_each(|g| *g = T::zero());
        let mut nll = T::zero();
        for gi in 0..data.groups() {
            let active = data.row(gi);
            let mut z = v[width];
            for &j in active {
                z += v[j as usize];
            }
            let gap = two * z;
            let (c0, c1) = (data.counts[2 * gi], data.counts[2 * gi + 1]);
            // log(1 + e^x), computed without overflow.
            let softplus = |x: T| x.max(T::zero()) + (-x.abs()).exp().ln_1p();
            if c1 > 0 {
                nll += T::lit(c1 as f64) * softplus(-gap);
            }
            if c0 > 0 {
                nll += T::lit(c0 as f64) * softplus(gap);
            }
            let p1 = T::one() / (T::one() + (-gap).exp());
            let delta = T::lit(data.weight[gi] as f64) * p1 - T::lit(c1 as f64);
            if delta == T::zero() {
                continue;
            }
            for &j in active {
                grad[j as usize] += delta;
            }
            grad[width] += delta;
        }
        let penalty: T = v[..width].iter().map(|&w| w * w).sum();
        history.push(nll / n + l2 * penalty);
        for j in 0..s {
            let mut g = grad[j] / n;
            if j < width {
                g += l2 * v[j];
            }
            v[j] -= lr * g;
        }
    }
    model.weights[s..].copy_from_slice(&v);
    for (w0, &w1) in model.weights[..s].iter_mut().zip(&v) {
        *w0 = -w1;
    }
    history
}

/// Trains from zero weights; returns the model and the loss before each epoch.
pub fn fit_logistic<T: Scalar>(
    design: &SparseDesign,
    labels: &[usize],
    n_classes: usize,
    cfg: &LrConfig,
) -> Result<(LrModel<T>, Vec<T>)> {
    let mut model = LrModel::zeros(design.width(), n_classes);
    model.check_fit_inputs(design, labels)?;
    let pooled = Pooled::new(design, labels, n_classes);
    let lr = T::lit(cfg.learning_rate);
    let l2 = T::lit(cfg.l2);
    let history = if n_classes == 2 {
        fit_two_class(&mut model, &pooled, lr, l2, cfg.epochs)
    } else {
        let mut grad = vec![T::zero(); model.weights.len()];
        let mut history = Vec::with_capacity(cfg.epochs);
        for _ in 0..cfg.epochs {
            history.push(model.loss_grad_pooled(&pooled, l2, Some(&mut grad)));
            for (w, g) in model.weights.iter_mut().zip(&grad) {
                *w -= lr * *g;
            }
        }
        history
    };
    if model.weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::Evaluation("logistic regression diverged".into()));
    }
    Ok((model, history))
}

/// Fits on the training rows and scores on the test rows.
///
/// `labels` holds class ids for every sample, with training classes numbered
/// first (see [`crate::dataset::Dataset::class_index`]); `n_classes` counts
/// all classes present in the data.
pub fn train_eval<T: Scalar>(
    columns: &[&[u32]],
    hash: HashConfig,
    labels: &[usize],
    n_classes: usize,
    split: &Split,
    cfg: &LrConfig,
) -> Result<ClassificationMetrics<T>> {
    if columns.iter().any(|c| c.len() != labels.len()) {
        return Err(Error::arg("feature and label lengths differ"));
    }
    let train_labels: Vec<usize> = split.train.iter().map(|&i| labels[i]).collect();
    let train_classes = train_labels.iter().copied().max().map_or(0, |m| m + 1);
    let distinct = {
        let mut seen = vec![false; train_classes];
        train_labels.iter().for_each(|&y| seen[y] = true);
        seen.iter().filter(|&&s| s).count()
    };
    if distinct < 2 {
        return Err(Error::Evaluation("training split holds a single class".into()));
    }
    let train = SparseDesign::from_columns(columns, hash, &split.train)?;
    let (model, _) = fit_logistic::<T>(&train, &train_labels, train_classes, cfg)?;
    let test = SparseDesign::from_columns(columns, hash, &split.test)?;
    let pred: Vec<usize> = (0..test.n_rows()).map(|r| model.predict(test.row(r))).collect();
    let truth: Vec<usize> = split.test.iter().map(|&i| labels[i]).collect();
    classification_metrics(&pred, &truth, n_classes.max(train_classes))
}
