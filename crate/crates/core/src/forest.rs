//! Random-forest surrogate built from CART trees.
//!
//! Each tree is grown greedily by Gini impurity reduction on a bootstrap
//! sample, considering `features_per_split` random features per node.
//! Thresholds sit at midpoints between consecutive distinct values, and the
//! boundary value routes left (`x <= t`). Every tie (votes, argmax, equal
//! split gains) resolves to the lowest index.

use std::path::Path;

use rand::seq::index::sample;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predicate::{Op, Predicate};
use crate::seed;
use crate::tabular::{feature_stats, ClassId, Dataset, FeatureStats};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    Internal { feature: usize, threshold: f64, left: usize, right: usize },
    Leaf { class_counts: Vec<usize>, predicted_class: ClassId },
}

/// A binary tree stored as a node arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    /// A tree that is a single leaf.
    pub fn leaf(class_counts: Vec<usize>) -> Tree {
        let predicted_class = argmax(&class_counts);
        Tree { nodes: vec![TreeNode::Leaf { class_counts, predicted_class }] }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, TreeNode::Leaf { .. })).count()
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, i: usize) -> usize {
            match &t.nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Internal { left, right, .. } => 1 + go(t, *left).max(go(t, *right)),
            }
        }
        go(self, 0)
    }

    /// Index of the leaf node `x` routes to.
    pub fn leaf_index(&self, x: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Leaf { .. } => return i,
                TreeNode::Internal { feature, threshold, left, right } => {
                    i = if x[*feature] <= *threshold { *left } else { *right }
                }
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> ClassId {
        match &self.nodes[self.leaf_index(x)] {
            TreeNode::Leaf { predicted_class, .. } => *predicted_class,
            TreeNode::Internal { .. } => unreachable!(),
        }
    }

    /// Predicates on the route of `x`, root first, plus the leaf reached.
    pub fn route(&self, x: &[f64]) -> (Vec<Predicate>, usize) {
        let mut path = Vec::new();
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Leaf { .. } => return (path, i),
                TreeNode::Internal { feature, threshold, left, right } => {
                    if x[*feature] <= *threshold {
                        path.push(Predicate::new(*feature, Op::Le, *threshold));
                        i = *left;
                    } else {
                        path.push(Predicate::new(*feature, Op::Gt, *threshold));
                        i = *right;
                    }
                }
            }
        }
    }

    pub fn leaf_class(&self, node: usize) -> Option<ClassId> {
        match &self.nodes[node] {
            TreeNode::Leaf { predicted_class, .. } => Some(*predicted_class),
            TreeNode::Internal { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Resample rows with replacement per tree; when false every tree sees
    /// every row.
    pub bootstrap: bool,
    pub bootstrap_fraction: f64,
    /// Candidate features per node; `None` means `ceil(sqrt(d))`.
    pub features_per_split: Option<usize>,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            max_depth: 8,
            min_samples_leaf: 2,
            bootstrap: true,
            bootstrap_fraction: 1.0,
            features_per_split: None,
            seed: 0,
        }
    }
}

impl ForestConfig {
    /// A single deterministic CART tree over all features.
    pub fn single_tree(max_depth: usize) -> Self {
        ForestConfig {
            n_trees: 1,
            max_depth,
            min_samples_leaf: 1,
            bootstrap: false,
            bootstrap_fraction: 1.0,
            features_per_split: Some(usize::MAX),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 || self.max_depth == 0 || self.min_samples_leaf == 0 {
            return Err(Error::InvalidConfig("n_trees, max_depth and min_samples_leaf must be >= 1".into()));
        }
        if !(self.bootstrap_fraction > 0.0 && self.bootstrap_fraction <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "bootstrap_fraction must lie in (0,1], got {}",
                self.bootstrap_fraction
            )));
        }
        if self.features_per_split == Some(0) {
            return Err(Error::InvalidConfig("features_per_split must be >= 1".into()));
        }
        Ok(())
    }

    fn features_for(&self, d: usize) -> usize {
        self.features_per_split.unwrap_or_else(|| (d as f64).sqrt().ceil() as usize).clamp(1, d.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Tree>,
    pub config: ForestConfig,
    pub n_features: usize,
    pub n_classes: usize,
    /// Extrema of the data the forest was trained on.
    pub stats: FeatureStats,
}

const FOREST_FORMAT: &str = "dpgda-forest";
const FOREST_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ForestDocument {
    format: String,
    version: u32,
    forest: Forest,
}

impl Forest {
    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    /// Majority vote over trees; ties go to the lowest class id.
    pub fn predict(&self, x: &[f64]) -> Result<ClassId> {
        self.check_dim(x)?;
        Ok(self.predict_unchecked(x))
    }

    pub(crate) fn predict_unchecked(&self, x: &[f64]) -> ClassId {
        let mut votes = vec![0usize; self.n_classes.max(1)];
        for tree in &self.trees {
            votes[tree.predict(x)] += 1;
        }
        argmax(&votes)
    }

    pub fn predict_all(&self, ds: &Dataset) -> Result<Vec<ClassId>> {
        if ds.n_features() != self.n_features {
            return Err(Error::DimensionMismatch { expected: self.n_features, got: ds.n_features() });
        }
        Ok(ds.rows().map(|x| self.predict_unchecked(x)).collect())
    }

    pub fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch { expected: self.n_features, got: x.len() });
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ForestDocument {
            format: FOREST_FORMAT.into(),
            version: FOREST_VERSION,
            forest: self.clone(),
        })?)
    }

    pub fn from_json(text: &str) -> Result<Forest> {
        let doc: ForestDocument = serde_json::from_str(text)?;
        if doc.format != FOREST_FORMAT || doc.version != FOREST_VERSION {
            return Err(Error::Schema {
                path: "$.format".into(),
                msg: format!("unsupported forest document {} v{}", doc.format, doc.version),
            });
        }
        Ok(doc.forest)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }
}

/// Predicates along the route of `x` through `tree`.
pub fn decision_path(tree: &Tree, n_features: usize, x: &[f64]) -> Result<Vec<Predicate>> {
    if x.len() != n_features {
        return Err(Error::DimensionMismatch { expected: n_features, got: x.len() });
    }
    Ok(tree.route(x).0)
}

/// `1 − Σ p_i²`.
pub fn gini(class_counts: &[usize]) -> Result<f64> {
    let total: usize = class_counts.iter().sum();
    if total == 0 {
        return Err(Error::InvalidDataset("gini of an empty node".into()));
    }
    Ok(gini_unchecked(class_counts, total))
}

fn gini_unchecked(counts: &[usize], total: usize) -> f64 {
    let t = total as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / t).powi(2)).sum::<f64>()
}

pub(crate) fn argmax(counts: &[usize]) -> ClassId {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

pub fn train_forest(train: &Dataset, cfg: &ForestConfig) -> Result<Forest> {
    cfg.validate()?;
    let n = train.n_samples();
    if n < 2 * cfg.min_samples_leaf {
        return Err(Error::TooFewSamples(
            "<all>".into(),
            format!("{n} rows cannot fill two leaves of min_samples_leaf = {}", cfg.min_samples_leaf),
        ));
    }
    let stats = feature_stats(train)?;
    let trees = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed::child_rng(cfg.seed, &[t as u64]);
            let rows: Vec<usize> = if cfg.bootstrap {
                let m = ((cfg.bootstrap_fraction * n as f64).round() as usize).max(1);
                (0..m).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            TreeBuilder { data: train, cfg, n_candidates: cfg.features_for(train.n_features()), rng, nodes: Vec::new() }
                .build(rows)
        })
        .collect();
    Ok(Forest { trees, config: cfg.clone(), n_features: train.n_features(), n_classes: train.n_classes(), stats })
}

struct TreeBuilder<'a> {
    data: &'a Dataset,
    cfg: &'a ForestConfig,
    n_candidates: usize,
    rng: seed::Rng,
    nodes: Vec<TreeNode>,
}

struct Split {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

impl TreeBuilder<'_> {
    fn build(mut self, rows: Vec<usize>) -> Tree {
        self.grow(rows, 0);
        Tree { nodes: self.nodes }
    }

    fn counts(&self, rows: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.data.n_classes()];
        for &r in rows {
            c[self.data.label(r)] += 1;
        }
        c
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        let counts = self.counts(&rows);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let split = if depth >= self.cfg.max_depth || pure || rows.len() < 2 * self.cfg.min_samples_leaf {
            None
        } else {
            self.best_split(&rows, &counts)
        };
        let Some(split) = split else {
            self.nodes.push(TreeNode::Leaf { predicted_class: argmax(&counts), class_counts: counts });
            return id;
        };
        // placeholder, patched once children exist
        self.nodes.push(TreeNode::Leaf { class_counts: Vec::new(), predicted_class: 0 });
        let (l, r): (Vec<usize>, Vec<usize>) =
            rows.into_iter().partition(|&i| self.data.value(i, split.feature) <= split.threshold);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = TreeNode::Internal { feature: split.feature, threshold: split.threshold, left, right };
        id
    }

    fn best_split(&mut self, rows: &[usize], counts: &[usize]) -> Option<Split> {
        let d = self.data.n_features();
        let mut features = sample(&mut self.rng, d, self.n_candidates).into_vec();
        features.sort_unstable();
        let n = rows.len();
        let parent = gini_unchecked(counts, n);
        let min_leaf = self.cfg.min_samples_leaf;
        let k = counts.len();

        let mut best: Option<Split> = None;
        let mut sorted: Vec<(f64, ClassId)> = Vec::with_capacity(n);
        for &f in &features {
            sorted.clear();
            sorted.extend(rows.iter().map(|&i| (self.data.value(i, f), self.data.label(i))));
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left = vec![0usize; k];
            for i in 0..n - 1 {
                left[sorted[i].1] += 1;
                let (lo, hi) = (sorted[i].0, sorted[i + 1].0);
                let nl = i + 1;
                let nr = n - nl;
                if lo == hi || nl < min_leaf || nr < min_leaf {
                    continue;
                }
                let right: Vec<usize> = counts.iter().zip(&left).map(|(c, l)| c - l).collect();
                let impurity =
                    (nl as f64 * gini_unchecked(&left, nl) + nr as f64 * gini_unchecked(&right, nr)) / n as f64;
                if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                    let mut threshold = lo + (hi - lo) / 2.0;
                    if threshold >= hi {
                        threshold = lo;
                    }
                    best = Some(Split { feature: f, threshold, impurity });
                }
            }
        }
        best.filter(|b| b.impurity < parent - 1e-12)
    }
}

/// Macro F1 of the forest on a held-out set.
pub fn surrogate_f1(forest: &Forest, test: &Dataset) -> Result<f64> {
    let pred = forest.predict_all(test)?;
    let n_classes = forest.n_classes.max(test.n_classes());
    Ok(crate::bench::metrics::macro_metrics(test.labels(), &pred, n_classes)?.f1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(rows: Vec<Vec<f64>>, labels: Vec<usize>) -> Dataset {
        let d = rows[0].len();
        Dataset::new(rows, labels, (0..d).map(|j| format!("f{j}")).collect(), vec!["c0".into(), "c1".into()]).unwrap()
    }

    fn stump(threshold: f64) -> Tree {
        Tree {
            nodes: vec![
                TreeNode::Internal { feature: 0, threshold, left: 1, right: 2 },
                TreeNode::Leaf { class_counts: vec![3, 0], predicted_class: 0 },
                TreeNode::Leaf { class_counts: vec![0, 3], predicted_class: 1 },
            ],
        }
    }

    #[test]
    fn gini_values() {
        assert_eq!(gini(&[5, 5]).unwrap(), 0.5);
        assert_eq!(gini(&[10, 0]).unwrap(), 0.0);
        assert!((gini(&[1, 2, 3]).unwrap() - 11.0 / 18.0).abs() < 1e-15);
        assert!(gini(&[0, 0]).is_err());
    }

    #[test]
    fn separable_stump() {
        let rows = vec![vec![-2.0], vec![-1.0], vec![-0.5], vec![1.5], vec![2.0], vec![3.0]];
        let data = ds(rows, vec![0, 0, 0, 1, 1, 1]);
        let cfg =
            ForestConfig { n_trees: 1, max_depth: 1, min_samples_leaf: 1, bootstrap: false, ..Default::default() };
        let forest = train_forest(&data, &cfg).unwrap();
        let TreeNode::Internal { threshold, .. } = forest.trees[0].nodes[0] else {
            panic!("expected a split");
        };
        // exhaustive midpoint enumeration: only (-0.5 + 1.5)/2 separates
        assert_eq!(threshold, 0.5);
        assert!(threshold > 0.0 && threshold < 1.0);
        let pred = forest.predict_all(&data).unwrap();
        assert_eq!(pred, data.labels());
    }

    #[test]
    fn pure_data_gives_single_leaves() {
        let data = ds(vec![vec![1.0], vec![2.0], vec![3.0], vec![4.0]], vec![1, 1, 1, 1]);
        let forest = train_forest(&data, &ForestConfig { n_trees: 5, ..Default::default() }).unwrap();
        for t in &forest.trees {
            assert_eq!(t.nodes.len(), 1);
            assert_eq!(t.predict(&[0.0]), 1);
        }
    }

    #[test]
    fn identical_rows_mixed_labels_is_not_an_error() {
        let data = ds(vec![vec![1.0, 1.0]; 6], vec![0, 1, 0, 1, 0, 1]);
        let forest = train_forest(&data, &ForestConfig { n_trees: 3, ..Default::default() }).unwrap();
        assert!(forest.trees.iter().all(|t| t.nodes.len() == 1));
    }

    #[test]
    fn too_few_rows_is_an_error() {
        let data = ds(vec![vec![1.0], vec![2.0], vec![3.0]], vec![0, 1, 0]);
        assert!(train_forest(&data, &ForestConfig::default()).is_err());
    }

    #[test]
    fn same_seed_same_forest() {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![(i * 7 % 13) as f64, (i % 5) as f64]).collect();
        let labels = (0..40).map(|i| usize::from(i % 3 == 0)).collect();
        let data = ds(rows, labels);
        let cfg = ForestConfig { n_trees: 10, seed: 9, ..Default::default() };
        assert_eq!(train_forest(&data, &cfg).unwrap(), train_forest(&data, &cfg).unwrap());
    }

    #[test]
    fn boundary_value_routes_left() {
        let t = stump(2.5);
        assert_eq!(t.predict(&[2.5]), 0);
        assert_eq!(t.predict(&[2.5000001]), 1);
    }

    #[test]
    fn single_leaf_forest_predicts_its_class() {
        let forest = Forest {
            trees: vec![Tree::leaf(vec![1, 4])],
            config: ForestConfig::default(),
            n_features: 1,
            n_classes: 2,
            stats: FeatureStats { min: vec![0.0], max: vec![1.0] },
        };
        assert_eq!(forest.predict(&[-100.0]).unwrap(), 1);
        assert!(forest.predict(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn majority_vote_and_ties() {
        let mut trees = vec![Tree::leaf(vec![1, 0]); 60];
        trees.extend(vec![Tree::leaf(vec![0, 1]); 40]);
        let mut forest = Forest {
            trees,
            config: ForestConfig::default(),
            n_features: 1,
            n_classes: 2,
            stats: FeatureStats { min: vec![0.0], max: vec![1.0] },
        };
        assert_eq!(forest.predict(&[0.0]).unwrap(), 0);
        let mut tie = vec![Tree::leaf(vec![0, 1]); 2];
        tie.extend(vec![Tree::leaf(vec![1, 0]); 2]);
        forest.trees = tie;
        assert_eq!(forest.predict(&[0.0]).unwrap(), 0);
    }

    #[test]
    fn decision_paths() {
        assert!(decision_path(&Tree::leaf(vec![1]), 1, &[3.0]).unwrap().is_empty());
        assert_eq!(decision_path(&stump(2.5), 1, &[1.0]).unwrap(), vec![Predicate::new(0, Op::Le, 2.5)]);
        // depth 2: root f0 <= 1, right child f1 <= 4
        let t = Tree {
            nodes: vec![
                TreeNode::Internal { feature: 0, threshold: 1.0, left: 1, right: 2 },
                TreeNode::Leaf { class_counts: vec![1, 0], predicted_class: 0 },
                TreeNode::Internal { feature: 1, threshold: 4.0, left: 3, right: 4 },
                TreeNode::Leaf { class_counts: vec![0, 1], predicted_class: 1 },
                TreeNode::Leaf { class_counts: vec![1, 0], predicted_class: 0 },
            ],
        };
        assert_eq!(
            decision_path(&t, 2, &[5.0, 3.0]).unwrap(),
            vec![Predicate::new(0, Op::Gt, 1.0), Predicate::new(1, Op::Le, 4.0)]
        );
        assert!(decision_path(&t, 2, &[5.0]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let data = ds(vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]], vec![0, 0, 1, 1]);
        let f = train_forest(&data, &ForestConfig { n_trees: 2, min_samples_leaf: 1, ..Default::default() }).unwrap();
        assert_eq!(Forest::from_json(&f.to_json().unwrap()).unwrap(), f);
        assert!(Forest::from_json(r#"{"format":"x","version":1,"forest":null}"#).is_err());
    }

    #[test]
    fn surrogate_f1_cases() {
        let data = ds(vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]], vec![0, 0, 1, 1]);
        let perfect = Forest {
            trees: vec![stump(1.5)],
            config: ForestConfig::default(),
            n_features: 1,
            n_classes: 2,
            stats: feature_stats(&data).unwrap(),
        };
        assert_eq!(surrogate_f1(&perfect, &data).unwrap(), 1.0);
        let constant = Forest { trees: vec![Tree::leaf(vec![1, 0])], ..perfect };
        // precision 1/2, recall 1 → F1 2/3 for class 0; class 1 scores 0
        assert!((surrogate_f1(&constant, &data).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }
}
