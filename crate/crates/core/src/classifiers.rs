//! kNN, linear discriminant analysis and random forest over standardised
//! feature rows. Labels are arbitrary `u32` class ids.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nca::FeatureDataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationParams {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Per-column mean and sample standard deviation.
pub fn standardize_fit(rows: &[Vec<f64>]) -> Result<StandardizationParams> {
    let n = rows.len();
    if n < 2 {
        return Err(Error::invalid(format!(
            "standardisation needs 2 rows, got {n}"
        )));
    }
    let p = rows[0].len();
    let mut mean = vec![0.0; p];
    for r in rows {
        if r.len() != p {
            return Err(Error::invalid("ragged feature rows"));
        }
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut std = vec![0.0; p];
    for r in rows {
        for j in 0..p {
            std[j] += (r[j] - mean[j]).powi(2);
        }
    }
    for (j, s) in std.iter_mut().enumerate() {
        *s = (*s / (n - 1) as f64).sqrt();
        if !(*s > 1e-12 * mean[j].abs().max(1e-300)) {
            return Err(Error::ConstantFeature(j));
        }
    }
    Ok(StandardizationParams { mean, std })
}

/// Columns `standardize_fit` would reject as constant.
pub fn constant_columns(rows: &[Vec<f64>]) -> Vec<usize> {
    let p = rows.first().map_or(0, Vec::len);
    (0..p)
        .filter(|&j| {
            let col: Vec<Vec<f64>> = rows.iter().map(|r| vec![r[j]]).collect();
            matches!(standardize_fit(&col), Err(Error::ConstantFeature(_)))
        })
        .collect()
}

pub fn standardize_apply(
    params: &StandardizationParams,
    rows: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    rows.iter().map(|r| standardize_row(params, r)).collect()
}

pub fn standardize_row(params: &StandardizationParams, row: &[f64]) -> Result<Vec<f64>> {
    if row.len() != params.mean.len() {
        return Err(Error::invalid(format!(
            "row has {} values, expected {}",
            row.len(),
            params.mean.len()
        )));
    }
    Ok(row
        .iter()
        .zip(params.mean.iter().zip(&params.std))
        .map(|(v, (m, s))| (v - m) / s)
        .collect())
}

fn check_training(rows: &[Vec<f64>], labels: &[u32]) -> Result<usize> {
    if rows.is_empty() {
        return Err(Error::invalid("empty training set"));
    }
    if rows.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} rows but {} labels",
            rows.len(),
            labels.len()
        )));
    }
    let p = rows[0].len();
    if p == 0 || rows.iter().any(|r| r.len() != p) {
        return Err(Error::invalid("training rows must share a positive width"));
    }
    Ok(p)
}

fn sorted_classes(labels: &[u32]) -> Vec<u32> {
    let mut c = labels.to_vec();
    c.sort_unstable();
    c.dedup();
    c
}

/// Most votes wins, ties to the smallest class id.
fn majority(votes: impl IntoIterator<Item = u32>) -> u32 {
    let mut tally: BTreeMap<u32, usize> = BTreeMap::new();
    for v in votes {
        *tally.entry(v).or_default() += 1;
    }
    let mut best = (0, u32::MAX);
    for (c, n) in tally {
        if n > best.0 {
            best = (n, c);
        }
    }
    best.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<u32>,
}

pub fn knn_fit(rows: &[Vec<f64>], labels: &[u32], k: usize) -> Result<KnnModel> {
    check_training(rows, labels)?;
    if k == 0 || k > rows.len() {
        return Err(Error::invalid(format!(
            "k = {k} outside 1..={}",
            rows.len()
        )));
    }
    Ok(KnnModel {
        k,
        rows: rows.to_vec(),
        labels: labels.to_vec(),
    })
}

/// Euclidean neighbours; distance ties go to the lower row index.
pub fn knn_predict(model: &KnnModel, row: &[f64]) -> Result<u32> {
    if model.rows.first().map(Vec::len) != Some(row.len()) {
        return Err(Error::invalid(
            "query width does not match the training rows",
        ));
    }
    let mut d: Vec<(f64, usize)> = model
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| (r.iter().zip(row).map(|(a, b)| (a - b) * (a - b)).sum(), i))
        .collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(majority(d[..model.k].iter().map(|&(_, i)| model.labels[i])))
}

/// Pooled covariances conditioned worse than this get a ridge.
const MAX_CONDITION_RECIPROCAL: f64 = 1e-12;

/// Linear discriminant: `score_c(x) = coef_c . x + intercept_c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DaModel {
    pub classes: Vec<u32>,
    pub means: Vec<Vec<f64>>,
    pub priors: Vec<f64>,
    pub pooled_covariance: Vec<Vec<f64>>,
    pub ridge: f64,
    pub coef: Vec<Vec<f64>>,
    pub intercept: Vec<f64>,
}

pub fn da_fit(rows: &[Vec<f64>], labels: &[u32]) -> Result<DaModel> {
    let p = check_training(rows, labels)?;
    let classes = sorted_classes(labels);
    let n = rows.len();
    if n <= classes.len() {
        return Err(Error::invalid(
            "discriminant analysis needs more rows than classes",
        ));
    }
    let mut means = Vec::with_capacity(classes.len());
    let mut priors = Vec::with_capacity(classes.len());
    let mut cov = DMatrix::<f64>::zeros(p, p);
    for &c in &classes {
        let members: Vec<&Vec<f64>> = rows
            .iter()
            .zip(labels)
            .filter(|(_, &l)| l == c)
            .map(|(r, _)| r)
            .collect();
        if members.len() < 2 {
            return Err(Error::invalid(format!(
                "class {c} has {} row, need 2",
                members.len()
            )));
        }
        let mut mu = vec![0.0; p];
        for r in &members {
            for j in 0..p {
                mu[j] += r[j];
            }
        }
        mu.iter_mut().for_each(|m| *m /= members.len() as f64);
        for r in &members {
            let d = DVector::from_iterator(p, r.iter().zip(&mu).map(|(a, b)| a - b));
            cov += &d * d.transpose();
        }
        priors.push(members.len() as f64 / n as f64);
        means.push(mu);
    }
    cov /= (n - classes.len()) as f64;

    let scale = (cov.trace() / p as f64).max(f64::MIN_POSITIVE);
    let mut ridge = 0.0;
    let mut inverse = None;
    for attempt in 0..8 {
        let mut m = cov.clone();
        if attempt > 0 {
            ridge = scale * 1e-10 * 100f64.powi(attempt - 1);
            for i in 0..p {
                m[(i, i)] += ridge;
            }
        }
        if let Some(ch) = m.cholesky() {
            let diag = ch.l_dirty().diagonal();
            let (lo, hi) = diag
                .iter()
                .fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
            if !(lo * lo > MAX_CONDITION_RECIPROCAL * hi * hi) {
                continue;
            }
            let inv = ch.inverse();
            if inv.iter().all(|v| v.is_finite()) {
                inverse = Some(inv);
                break;
            }
        }
    }
    let inv = inverse
        .ok_or_else(|| Error::Numeric("pooled covariance is singular even with ridge".into()))?;
    let mut coef = Vec::with_capacity(classes.len());
    let mut intercept = Vec::with_capacity(classes.len());
    for (mu, prior) in means.iter().zip(&priors) {
        let m = DVector::from_column_slice(mu);
        let a = &inv * &m;
        intercept.push(-0.5 * m.dot(&a) + prior.ln());
        coef.push(a.iter().copied().collect());
    }
    Ok(DaModel {
        classes,
        means,
        priors,
        pooled_covariance: (0..p)
            .map(|i| cov.row(i).iter().copied().collect())
            .collect(),
        ridge,
        coef,
        intercept,
    })
}

pub fn da_scores(model: &DaModel, row: &[f64]) -> Result<Vec<f64>> {
    if model.coef.first().map(Vec::len) != Some(row.len()) {
        return Err(Error::invalid("query width does not match the model"));
    }
    Ok(model
        .coef
        .iter()
        .zip(&model.intercept)
        .map(|(a, b)| a.iter().zip(row).map(|(x, y)| x * y).sum::<f64>() + b)
        .collect())
}

/// Highest score, ties to the smallest class id.
pub fn da_predict(model: &DaModel, row: &[f64]) -> Result<u32> {
    let s = da_scores(model, row)?;
    let mut best = 0;
    for i in 1..s.len() {
        if s[i] > s[best] {
            best = i;
        }
    }
    Ok(model.classes[best])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// `None` grows until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// `None` means `ceil(sqrt(p))`.
    pub features_per_split: Option<usize>,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: None,
            min_leaf: 1,
            features_per_split: None,
            seed: 0,
        }
    }
}

/// One node of a tree stored as a flat array; children are indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub feature: Option<usize>,
    pub threshold: Option<f64>,
    pub left: Option<usize>,
    pub right: Option<usize>,
    pub leaf_class: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
}

impl DecisionTree {
    pub fn predict(&self, row: &[f64]) -> u32 {
        let mut i = 0;
        loop {
            let node = &self.nodes[i];
            match (node.leaf_class, node.feature, node.threshold) {
                (Some(c), _, _) => return c,
                (None, Some(f), Some(t)) => {
                    i = if row[f] <= t { node.left } else { node.right }
                        .expect("split node has children");
                }
                _ => unreachable!("malformed tree node"),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub config: ForestConfig,
    pub n_features: usize,
    pub trees: Vec<DecisionTree>,
}

fn tree_seed(seed: u64, t: usize) -> u64 {
    seed ^ (t as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

struct Grower<'a> {
    rows: &'a [Vec<f64>],
    y: &'a [usize],
    classes: &'a [u32],
    cfg: &'a ForestConfig,
    mtry: usize,
    nodes: Vec<TreeNode>,
}

fn gini(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / nf).powi(2)).sum::<f64>()
}

impl Grower<'_> {
    fn leaf(&mut self, idx: &[usize]) -> usize {
        let class = majority(idx.iter().map(|&i| self.classes[self.y[i]]));
        self.nodes.push(TreeNode {
            feature: None,
            threshold: None,
            left: None,
            right: None,
            leaf_class: Some(class),
        });
        self.nodes.len() - 1
    }

    /// Best Gini split of `idx` on feature `f`: (weighted impurity, threshold).
    fn best_split_on(&self, idx: &[usize], f: usize) -> Option<(f64, f64)> {
        let mut order: Vec<usize> = idx.to_vec();
        order.sort_by(|&a, &b| self.rows[a][f].total_cmp(&self.rows[b][f]));
        let k = self.classes.len();
        let mut right = vec![0usize; k];
        for &i in &order {
            right[self.y[i]] += 1;
        }
        let mut left = vec![0usize; k];
        let n = order.len();
        let min_leaf = self.cfg.min_leaf.max(1);
        let mut best: Option<(f64, f64)> = None;
        for s in 1..n {
            let c = self.y[order[s - 1]];
            left[c] += 1;
            right[c] -= 1;
            let (a, b) = (self.rows[order[s - 1]][f], self.rows[order[s]][f]);
            if a == b || s < min_leaf || n - s < min_leaf {
                continue;
            }
            let score =
                (s as f64 * gini(&left, s) + (n - s) as f64 * gini(&right, n - s)) / n as f64;
            if best.is_none_or(|(g, _)| score < g) {
                let mid = a + (b - a) / 2.0;
                best = Some((score, if mid < b { mid } else { a }));
            }
        }
        best
    }

    fn grow(&mut self, idx: &[usize], depth: usize, r: &mut ChaCha8Rng) -> usize {
        let first = self.y[idx[0]];
        let pure = idx.iter().all(|&i| self.y[i] == first);
        let depth_capped = self.cfg.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_capped || idx.len() < 2 * self.cfg.min_leaf.max(1) {
            return self.leaf(idx);
        }
        let p = self.rows[0].len();
        let drawn = index::sample(r, p, self.mtry).into_vec();
        let mut best: Option<(f64, usize, f64)> = None;
        let consider = |g: &Self, fs: &[usize], best: &mut Option<(f64, usize, f64)>| {
            for &f in fs {
                if let Some((score, t)) = g.best_split_on(idx, f) {
                    if best.is_none_or(|(s, _, _)| score < s) {
                        *best = Some((score, f, t));
                    }
                }
            }
        };
        consider(self, &drawn, &mut best);
        if best.is_none() {
            // Drawn features are constant here; fall back to the rest.
            let rest: Vec<usize> = (0..p).filter(|f| !drawn.contains(f)).collect();
            consider(self, &rest, &mut best);
        }
        let Some((_, f, t)) = best else {
            return self.leaf(idx);
        };
        let (l, rt): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| self.rows[i][f] <= t);
        self.nodes.push(TreeNode {
            feature: Some(f),
            threshold: Some(t),
            left: None,
            right: None,
            leaf_class: None,
        });
        let me = self.nodes.len() - 1;
        let li = self.grow(&l, depth + 1, r);
        let ri = self.grow(&rt, depth + 1, r);
        self.nodes[me].left = Some(li);
        self.nodes[me].right = Some(ri);
        me
    }
}

fn grow_tree(
    rows: &[Vec<f64>],
    y: &[usize],
    classes: &[u32],
    cfg: &ForestConfig,
    mtry: usize,
    seed: u64,
) -> DecisionTree {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let n = rows.len();
    let bag: Vec<usize> = (0..n).map(|_| r.random_range(0..n)).collect();
    let mut g = Grower {
        rows,
        y,
        classes,
        cfg,
        mtry,
        nodes: Vec::new(),
    };
    g.grow(&bag, 0, &mut r);
    DecisionTree { nodes: g.nodes }
}

/// Bagged CART trees with Gini splits, one seeded stream per tree.
pub fn randf_fit(rows: &[Vec<f64>], labels: &[u32], cfg: &ForestConfig) -> Result<ForestModel> {
    let p = check_training(rows, labels)?;
    if rows.len() < 2 {
        return Err(Error::invalid("a forest needs at least 2 rows"));
    }
    if cfg.n_trees == 0 {
        return Err(Error::invalid("a forest needs at least one tree"));
    }
    let mtry = cfg
        .features_per_split
        .unwrap_or_else(|| (p as f64).sqrt().ceil() as usize)
        .clamp(1, p);
    let classes = sorted_classes(labels);
    let y: Vec<usize> = labels
        .iter()
        .map(|l| classes.binary_search(l).expect("label is catalogued"))
        .collect();
    let trees = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| grow_tree(rows, &y, &classes, cfg, mtry, tree_seed(cfg.seed, t)))
        .collect();
    Ok(ForestModel {
        config: *cfg,
        n_features: p,
        trees,
    })
}

pub fn randf_predict(model: &ForestModel, row: &[f64]) -> Result<u32> {
    if row.len() != model.n_features {
        return Err(Error::invalid("query width does not match the forest"));
    }
    Ok(majority(model.trees.iter().map(|t| t.predict(row))))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    Knn,
    Da,
    #[serde(rename = "randf")]
    RandF,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 3] = [
        ClassifierKind::Knn,
        ClassifierKind::Da,
        ClassifierKind::RandF,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ClassifierKind::Knn => "knn",
            ClassifierKind::Da => "da",
            ClassifierKind::RandF => "randf",
        }
    }
}

impl std::str::FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "knn" => Ok(ClassifierKind::Knn),
            "da" => Ok(ClassifierKind::Da),
            "randf" => Ok(ClassifierKind::RandF),
            other => Err(Error::Usage(format!(
                "unknown classifier '{other}' (knn, da, randf)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub kind: ClassifierKind,
    pub knn_k: usize,
    pub forest: ForestConfig,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            kind: ClassifierKind::Knn,
            knn_k: 5,
            forest: ForestConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassifierModel {
    Knn(KnnModel),
    Da(DaModel),
    #[serde(rename = "randf")]
    RandF(ForestModel),
}

/// A fitted classifier plus the column selection and standardisation it
/// expects its raw input rows to go through.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedClassifier {
    pub classes: Vec<u32>,
    pub selected_features: Vec<usize>,
    pub standardization: StandardizationParams,
    pub model: ClassifierModel,
}

impl TrainedClassifier {
    pub fn kind(&self) -> ClassifierKind {
        match self.model {
            ClassifierModel::Knn(_) => ClassifierKind::Knn,
            ClassifierModel::Da(_) => ClassifierKind::Da,
            ClassifierModel::RandF(_) => ClassifierKind::RandF,
        }
    }

    /// Fits on the `selected` columns of raw (unstandardised) rows.
    pub fn fit(ds: &FeatureDataset, selected: &[usize], cfg: &ClassifierConfig) -> Result<Self> {
        let sub = ds.select_columns(selected)?;
        let standardization = standardize_fit(sub.rows())?;
        let z = standardize_apply(&standardization, sub.rows())?;
        let labels = sub.labels();
        let model = match cfg.kind {
            ClassifierKind::Knn => ClassifierModel::Knn(knn_fit(&z, labels, cfg.knn_k)?),
            ClassifierKind::Da => ClassifierModel::Da(da_fit(&z, labels)?),
            ClassifierKind::RandF => ClassifierModel::RandF(randf_fit(&z, labels, &cfg.forest)?),
        };
        Ok(Self {
            classes: sub.classes(),
            selected_features: selected.to_vec(),
            standardization,
            model,
        })
    }

    /// Class of one raw row holding every original feature column.
    pub fn predict(&self, raw: &[f64]) -> Result<u32> {
        let picked: Vec<f64> = self
            .selected_features
            .iter()
            .map(|&c| {
                raw.get(c)
                    .copied()
                    .ok_or_else(|| Error::invalid(format!("row lacks feature column {c}")))
            })
            .collect::<Result<_>>()?;
        let z = standardize_row(&self.standardization, &picked)?;
        match &self.model {
            ClassifierModel::Knn(m) => knn_predict(m, &z),
            ClassifierModel::Da(m) => da_predict(m, &z),
            ClassifierModel::RandF(m) => randf_predict(m, &z),
        }
    }
}

/// Fit-then-predict wrapper that reports prediction before fitting as a
/// usage error.
#[derive(Debug, Clone, Default)]
pub struct Classifier {
    pub config: ClassifierConfig,
    trained: Option<TrainedClassifier>,
}

impl Classifier {
    pub fn new(config: ClassifierConfig) -> Self {
        Self {
            config,
            trained: None,
        }
    }

    pub fn fit(&mut self, ds: &FeatureDataset, selected: &[usize]) -> Result<&TrainedClassifier> {
        Ok(self
            .trained
            .insert(TrainedClassifier::fit(ds, selected, &self.config)?))
    }

    pub fn predict(&self, raw: &[f64]) -> Result<u32> {
        self.trained
            .as_ref()
            .ok_or_else(|| Error::Usage("classifier used before it was fitted".into()))?
            .predict(raw)
    }

    pub fn trained(&self) -> Option<&TrainedClassifier> {
        self.trained.as_ref()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standardize_by_hand() {
        let rows = vec![vec![1.0, 5.0], vec![2.0, 7.0], vec![3.0, 9.0]];
        let p = standardize_fit(&rows).unwrap();
        let z = standardize_apply(&p, &rows).unwrap();
        let col: Vec<f64> = z.iter().map(|r| r[0]).collect();
        assert_eq!(col, vec![-1.0, 0.0, 1.0]);
        let col: Vec<f64> = z.iter().map(|r| r[1]).collect();
        assert_eq!(col, vec![-1.0, 0.0, 1.0]);
        let bad = vec![vec![1.0, 4.0], vec![2.0, 4.0]];
        assert!(matches!(
            standardize_fit(&bad),
            Err(Error::ConstantFeature(1))
        ));
    }

    #[test]
    fn knn_rules() {
        let rows = vec![
            vec![10.0, 0.0, 0.0],
            vec![11.0, 0.0, 0.0],
            vec![-10.0, 0.0, 0.0],
            vec![-11.0, 0.0, 0.0],
        ];
        let labels = [2, 2, 1, 1];
        let m = knn_fit(&rows, &labels, 1).unwrap();
        assert_eq!(knn_predict(&m, &[-11.0, 0.0, 0.0]).unwrap(), 1);
        assert_eq!(knn_predict(&m, &[9.0, 0.0, 0.0]).unwrap(), 2);
        let all = knn_fit(&rows, &labels, 4).unwrap();
        assert_eq!(knn_predict(&all, &[9.0, 0.0, 0.0]).unwrap(), 1);
        assert!(knn_fit(&rows, &labels, 5).is_err());
        // Equidistant neighbours: the lower row index wins.
        let m = knn_fit(&[vec![1.0], vec![-1.0]], &[7, 3], 1).unwrap();
        assert_eq!(knn_predict(&m, &[0.0]).unwrap(), 7);
    }

    #[test]
    fn da_degenerate_means_follow_priors() {
        let rows = vec![
            vec![1.0],
            vec![-1.0],
            vec![1.0],
            vec![-1.0],
            vec![1.0],
            vec![-1.0],
        ];
        let m = da_fit(&rows, &[1, 1, 2, 2, 2, 2]).unwrap();
        assert_eq!(da_predict(&m, &[0.3]).unwrap(), 2);
        assert!(da_fit(&[vec![0.0], vec![1.0], vec![2.0]], &[1, 2, 2]).is_err());
    }

    #[test]
    fn da_survives_collinear_columns() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let labels: Vec<u32> = (0..20).map(|i| if i < 10 { 1 } else { 2 }).collect();
        let m = da_fit(&rows, &labels).unwrap();
        assert!(m.ridge > 0.0);
        assert_eq!(da_predict(&m, &[0.0, 0.0]).unwrap(), 1);
        assert_eq!(da_predict(&m, &[19.0, 38.0]).unwrap(), 2);
    }

    #[test]
    fn forest_threshold_and_determinism() {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![i as f64, ((i * 7) % 5) as f64])
            .collect();
        let labels: Vec<u32> = (0..40).map(|i| if i < 17 { 4 } else { 9 }).collect();
        let cfg = ForestConfig {
            n_trees: 15,
            seed: 3,
            ..ForestConfig::default()
        };
        let a = randf_fit(&rows, &labels, &cfg).unwrap();
        let b = randf_fit(&rows, &labels, &cfg).unwrap();
        assert_eq!(a, b);
        for (r, l) in rows.iter().zip(&labels) {
            assert_eq!(randf_predict(&a, r).unwrap(), *l);
        }
        assert!(randf_fit(&[], &[], &cfg).is_err());
    }

    #[test]
    fn unfitted_classifier_is_a_usage_error() {
        let c = Classifier::new(ClassifierConfig::default());
        assert!(matches!(c.predict(&[0.0]), Err(Error::Usage(_))));
    }

    #[test]
    fn kinds_parse_and_serialize() {
        for k in ClassifierKind::ALL {
            assert_eq!(k.name().parse::<ClassifierKind>().unwrap(), k);
            assert_eq!(
                serde_json::to_string(&k).unwrap(),
                format!("\"{}\"", k.name())
            );
        }
        assert!("svm".parse::<ClassifierKind>().is_err());
    }
}
