//! Neighbourhood component analysis with one weight per feature.
//!
//! Distances are weighted L1, `d_w(a, b) = sum_r w_r^2 |a_r - b_r|`, and the
//! reference probabilities use the kernel `exp(-d / sigma)`. The weights are
//! fitted by gradient ascent on the regularised leave-one-out objective.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rows are observations, columns are features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDataset {
    rows: Vec<Vec<f64>>,
    labels: Vec<u32>,
    feature_names: Vec<String>,
    standardized: bool,
}

impl FeatureDataset {
    /// Checks shape, finiteness, at least two classes and two rows per class.
    pub fn new(rows: Vec<Vec<f64>>, labels: Vec<u32>, feature_names: Vec<String>) -> Result<Self> {
        let p = feature_names.len();
        if p == 0 {
            return Err(Error::invalid("dataset needs at least one feature"));
        }
        if rows.len() != labels.len() {
            return Err(Error::invalid(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != p {
                return Err(Error::invalid(format!(
                    "row {i} has {} values, expected {p}",
                    r.len()
                )));
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("row {i} holds a non-finite value")));
            }
        }
        let ds = Self {
            rows,
            labels,
            feature_names,
            standardized: false,
        };
        let classes = ds.classes();
        if classes.len() < 2 {
            return Err(Error::invalid("dataset needs at least two classes"));
        }
        for c in classes {
            let k = ds.labels.iter().filter(|&&l| l == c).count();
            if k < 2 {
                return Err(Error::invalid(format!("class {c} has {k} row, need 2")));
            }
        }
        Ok(ds)
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    /// Sorted distinct labels.
    pub fn classes(&self) -> Vec<u32> {
        let mut c = self.labels.clone();
        c.sort_unstable();
        c.dedup();
        c
    }

    /// Same data, flagged as already standardised.
    pub fn mark_standardized(mut self) -> Self {
        self.standardized = true;
        self
    }

    /// The rows at `idx`, in that order. Does not re-check class sizes.
    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
            standardized: self.standardized,
        }
    }

    /// Keeps only the listed columns, in that order.
    pub fn select_columns(&self, cols: &[usize]) -> Result<Self> {
        if let Some(&c) = cols.iter().find(|&&c| c >= self.n_features()) {
            return Err(Error::invalid(format!("column {c} out of range")));
        }
        if cols.is_empty() {
            return Err(Error::invalid("no columns selected"));
        }
        Ok(Self {
            rows: self
                .rows
                .iter()
                .map(|r| cols.iter().map(|&c| r[c]).collect())
                .collect(),
            labels: self.labels.clone(),
            feature_names: cols
                .iter()
                .map(|&c| self.feature_names[c].clone())
                .collect(),
            standardized: self.standardized,
        })
    }

    /// Replaces the feature values, keeping labels and names.
    pub fn with_rows(&self, rows: Vec<Vec<f64>>) -> Result<Self> {
        let mut ds = Self::new(rows, self.labels.clone(), self.feature_names.clone())?;
        ds.standardized = self.standardized;
        Ok(ds)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NcaConfig {
    pub lambda: f64,
    pub kernel_width: f64,
    pub learning_rate: f64,
    pub max_iters: usize,
    pub grad_tolerance: f64,
}

impl Default for NcaConfig {
    fn default() -> Self {
        Self {
            lambda: 0.5,
            kernel_width: 1.0,
            learning_rate: 0.1,
            max_iters: 200,
            grad_tolerance: 1e-6,
        }
    }
}

impl NcaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::invalid(format!(
                "lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        if !(self.kernel_width > 0.0) || !self.kernel_width.is_finite() {
            return Err(Error::invalid(format!(
                "kernel width must be > 0, got {}",
                self.kernel_width
            )));
        }
        if !(self.learning_rate > 0.0) || self.max_iters == 0 || !(self.grad_tolerance >= 0.0) {
            return Err(Error::invalid(
                "learning rate, iteration cap and tolerance must be positive",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureWeights {
    pub w: Vec<f64>,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    /// False when the iteration cap was hit before the gradient vanished;
    /// `w` is then the best point seen.
    pub converged: bool,
}

impl FeatureWeights {
    /// Feature indices by descending `w^2`, ties to the lower index.
    pub fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.w.len()).collect();
        idx.sort_by(|&a, &b| {
            (self.w[b] * self.w[b])
                .total_cmp(&(self.w[a] * self.w[a]))
                .then(a.cmp(&b))
        });
        idx
    }
}

fn check(w: &[f64], ds: &FeatureDataset, cfg: &NcaConfig) -> Result<()> {
    cfg.validate()?;
    if !ds.is_standardized() {
        return Err(Error::invalid("NCA needs a standardised dataset"));
    }
    if w.len() != ds.n_features() {
        return Err(Error::invalid(format!(
            "{} weights for {} features",
            w.len(),
            ds.n_features()
        )));
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("weights must be finite"));
    }
    Ok(())
}

/// `|x_i - x_j|` for every row `j`, row-major.
fn abs_diffs(i: usize, ds: &FeatureDataset) -> Vec<f64> {
    let xi = &ds.rows[i];
    ds.rows
        .iter()
        .flat_map(|xj| xi.iter().zip(xj).map(|(a, b)| (a - b).abs()))
        .collect()
}

/// Reference probabilities `p_ij` for row `i` (`p_ii = 0`) from its
/// absolute differences.
fn neighbour_probs(i: usize, diffs: &[f64], w2: &[f64], sigma: f64) -> Vec<f64> {
    let p = w2.len();
    let mut d: Vec<f64> = diffs
        .chunks_exact(p)
        .map(|row| row.iter().zip(w2).map(|(a, w)| a * w).sum())
        .collect();
    let dmin = d
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &v)| v)
        .fold(f64::INFINITY, f64::min);
    let mut z = 0.0;
    for (j, v) in d.iter_mut().enumerate() {
        *v = if j == i {
            0.0
        } else {
            (-(*v - dmin) / sigma).exp()
        };
        z += *v;
    }
    for v in &mut d {
        *v /= z;
    }
    d
}

fn penalty(w: &[f64], lambda: f64) -> f64 {
    lambda * w.iter().map(|v| v * v).sum::<f64>()
}

/// Objective and, if asked, its gradient in one pass over the rows.
fn evaluate(
    w: &[f64],
    ds: &FeatureDataset,
    cfg: &NcaConfig,
    with_gradient: bool,
) -> (f64, Vec<f64>) {
    let p = if with_gradient { ds.n_features() } else { 0 };
    let w2: Vec<f64> = w.iter().map(|v| v * v).collect();
    let terms = (0..ds.len())
        .into_par_iter()
        .map(|i| {
            let diffs = abs_diffs(i, ds);
            let probs = neighbour_probs(i, &diffs, &w2, cfg.kernel_width);
            let width = w2.len();
            let mut all = vec![0.0; p];
            let mut same = vec![0.0; p];
            let mut p_i = 0.0;
            for (j, row) in diffs.chunks_exact(width).enumerate() {
                let pij = probs[j];
                if pij == 0.0 {
                    continue;
                }
                let hit = ds.labels[j] == ds.labels[i];
                if hit {
                    p_i += pij;
                }
                if p == 0 {
                    continue;
                }
                for (a, d) in all.iter_mut().zip(row) {
                    *a += pij * d;
                }
                if hit {
                    for (a, d) in same.iter_mut().zip(row) {
                        *a += pij * d;
                    }
                }
            }
            let g: Vec<f64> = (0..p).map(|r| p_i * all[r] - same[r]).collect();
            (p_i, g)
        })
        .collect::<Vec<_>>();
    // Summed in row order so results do not depend on thread scheduling.
    let mut hit = 0.0;
    let mut acc = vec![0.0; p];
    for (p_i, row) in &terms {
        hit += p_i;
        for (a, t) in acc.iter_mut().zip(row) {
            *a += t;
        }
    }
    let n = ds.len() as f64;
    let f = hit / n - penalty(w, cfg.lambda);
    let g = (0..p)
        .map(|r| 2.0 * w[r] / cfg.kernel_width * acc[r] / n - 2.0 * cfg.lambda * w[r])
        .collect();
    (f, g)
}

pub fn nca_objective(w: &[f64], ds: &FeatureDataset, cfg: &NcaConfig) -> Result<f64> {
    check(w, ds, cfg)?;
    Ok(evaluate(w, ds, cfg, false).0)
}

pub fn nca_gradient(w: &[f64], ds: &FeatureDataset, cfg: &NcaConfig) -> Result<Vec<f64>> {
    check(w, ds, cfg)?;
    Ok(evaluate(w, ds, cfg, true).1)
}

/// Gradient ascent from the all-ones vector with step halving whenever a
/// step would lower the objective.
pub fn fit_weights(ds: &FeatureDataset, cfg: &NcaConfig) -> Result<FeatureWeights> {
    let mut w = vec![1.0; ds.n_features()];
    check(&w, ds, cfg)?;
    let (mut f, mut g) = evaluate(&w, ds, cfg, true);
    let mut trace = vec![f];
    let mut step = cfg.learning_rate;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iters {
        if g.iter().fold(0.0f64, |m, v| m.max(v.abs())) < cfg.grad_tolerance {
            converged = true;
            break;
        }
        iterations += 1;
        let mut accepted = false;
        while step > 1e-12 {
            let cand: Vec<f64> = w.iter().zip(&g).map(|(a, b)| a + step * b).collect();
            let (fc, gc) = evaluate(&cand, ds, cfg, true);
            if fc >= f {
                w = cand;
                f = fc;
                g = gc;
                accepted = true;
                step *= 1.5;
                break;
            }
            step *= 0.5;
        }
        trace.push(f);
        if !accepted {
            converged = true;
            break;
        }
    }
    Ok(FeatureWeights {
        w: w.iter().map(|v| v.abs()).collect(),
        objective_trace: trace,
        iterations,
        converged,
    })
}

/// Indices of the `k` largest weights (by `w^2`), ties to the lower index.
pub fn select_top_k(weights: &FeatureWeights, k: usize) -> Result<Vec<usize>> {
    if k == 0 || k > weights.w.len() {
        return Err(Error::invalid(format!(
            "k = {k} outside 1..={}",
            weights.w.len()
        )));
    }
    let mut r = weights.ranking();
    r.truncate(k);
    Ok(r)
}
