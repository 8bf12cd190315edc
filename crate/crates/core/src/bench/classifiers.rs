//! Downstream classifiers used to score augmented training sets.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest::{argmax, train_forest, Forest, ForestConfig};
use crate::tabular::{feature_stats, ClassId, Dataset, FeatureStats};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassifierSpec {
    DecisionTree { max_depth: usize },
    Knn { k: usize },
    LogisticRegression { learning_rate: f64, epochs: usize, l2: f64 },
}

impl ClassifierSpec {
    pub const DECISION_TREE: ClassifierSpec = ClassifierSpec::DecisionTree { max_depth: 8 };
    pub const KNN: ClassifierSpec = ClassifierSpec::Knn { k: 5 };
    pub const LOGISTIC_REGRESSION: ClassifierSpec =
        ClassifierSpec::LogisticRegression { learning_rate: 1.0, epochs: 500, l2: 1e-4 };

    pub fn all() -> Vec<ClassifierSpec> {
        vec![Self::DECISION_TREE, Self::KNN, Self::LOGISTIC_REGRESSION]
    }

    pub fn name(&self) -> &'static str {
        match self {
            ClassifierSpec::DecisionTree { .. } => "decision_tree",
            ClassifierSpec::Knn { .. } => "knn",
            ClassifierSpec::LogisticRegression { .. } => "logistic_regression",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ClassifierSpec::DecisionTree { max_depth } => max_depth >= 1,
            ClassifierSpec::Knn { k } => k >= 1,
            ClassifierSpec::LogisticRegression { learning_rate, epochs, l2 } => {
                learning_rate > 0.0 && epochs >= 1 && l2 >= 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid classifier hyperparameters {self:?}")))
        }
    }
}

impl fmt::Display for ClassifierSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassifierSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "decision_tree" | "tree" | "dt" => Ok(Self::DECISION_TREE),
            "knn" => Ok(Self::KNN),
            "logistic_regression" | "logreg" | "lr" => Ok(Self::LOGISTIC_REGRESSION),
            other => Err(Error::InvalidConfig(format!("unknown classifier `{other}`"))),
        }
    }
}

/// Min-max scaling fitted on training data; constant features map to 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler(pub FeatureStats);

impl Scaler {
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(j, &v)| {
                let r = self.0.range(j);
                if r > 0.0 {
                    (v - self.0.min[j]) / r
                } else {
                    0.0
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub enum Model {
    Tree(Forest),
    Knn {
        k: usize,
        scaler: Scaler,
        points: Vec<Vec<f64>>,
        labels: Vec<ClassId>,
        n_classes: usize,
    },
    /// One weight row (bias last) per class.
    LogReg {
        scaler: Scaler,
        weights: Vec<Vec<f64>>,
    },
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn dot_bias(w: &[f64], x: &[f64]) -> f64 {
    w[..x.len()].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + w[x.len()]
}

pub fn train_classifier(spec: &ClassifierSpec, train: &Dataset) -> Result<Model> {
    spec.validate()?;
    train.require_supervised()?;
    if train.class_counts().iter().filter(|&&c| c > 0).count() < 2 {
        return Err(Error::InvalidDataset("classifiers need at least two populated classes".into()));
    }
    match *spec {
        ClassifierSpec::DecisionTree { max_depth } => {
            Ok(Model::Tree(train_forest(train, &ForestConfig::single_tree(max_depth))?))
        }
        ClassifierSpec::Knn { k } => {
            let scaler = Scaler(feature_stats(train)?);
            Ok(Model::Knn {
                k,
                points: train.rows().map(|r| scaler.apply(r)).collect(),
                scaler,
                labels: train.labels().to_vec(),
                n_classes: train.n_classes(),
            })
        }
        ClassifierSpec::LogisticRegression { learning_rate, epochs, l2 } => {
            let scaler = Scaler(feature_stats(train)?);
            let xs: Vec<Vec<f64>> = train.rows().map(|r| scaler.apply(r)).collect();
            let d = train.n_features();
            let n = xs.len() as f64;
            let weights = (0..train.n_classes())
                .map(|c| {
                    let mut w = vec![0.0; d + 1];
                    let mut grad = vec![0.0; d + 1];
                    for _ in 0..epochs {
                        grad.iter_mut().for_each(|g| *g = 0.0);
                        for (x, &y) in xs.iter().zip(train.labels()) {
                            let err = sigmoid(dot_bias(&w, x)) - f64::from(u8::from(y == c));
                            for (g, v) in grad.iter_mut().zip(x) {
                                *g += err * v;
                            }
                            grad[d] += err;
                        }
                        for j in 0..=d {
                            let reg = if j < d { l2 * w[j] } else { 0.0 };
                            w[j] -= learning_rate * (grad[j] / n + reg);
                        }
                    }
                    w
                })
                .collect();
            Ok(Model::LogReg { scaler, weights })
        }
    }
}

impl Model {
    pub fn n_features(&self) -> usize {
        match self {
            Model::Tree(f) => f.n_features,
            Model::Knn { scaler, .. } | Model::LogReg { scaler, .. } => scaler.0.n_features(),
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<ClassId> {
        if x.len() != self.n_features() {
            return Err(Error::DimensionMismatch { expected: self.n_features(), got: x.len() });
        }
        Ok(match self {
            Model::Tree(f) => f.predict_unchecked(x),
            Model::Knn { k, scaler, points, labels, n_classes } => {
                let q = scaler.apply(x);
                let mut dist: Vec<(f64, usize)> = points
                    .iter()
                    .enumerate()
                    .map(|(i, p)| (p.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), i))
                    .collect();
                let k = (*k).min(dist.len());
                dist.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let mut votes = vec![0usize; *n_classes];
                for &(_, i) in &dist[..k] {
                    votes[labels[i]] += 1;
                }
                argmax(&votes)
            }
            Model::LogReg { scaler, weights } => {
                let q = scaler.apply(x);
                let mut best = 0;
                let mut best_p = f64::NEG_INFINITY;
                for (c, w) in weights.iter().enumerate() {
                    let p = sigmoid(dot_bias(w, &q));
                    if p > best_p {
                        best = c;
                        best_p = p;
                    }
                }
                best
            }
        })
    }

    pub fn predict_all(&self, ds: &Dataset) -> Result<Vec<ClassId>> {
        ds.rows().map(|r| self.predict(r)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(rows: Vec<Vec<f64>>, labels: Vec<usize>) -> Dataset {
        let d = rows[0].len();
        Dataset::new(rows, labels, (0..d).map(|j| format!("f{j}")).collect(), vec!["a".into(), "b".into()]).unwrap()
    }

    #[test]
    fn knn_memorises_with_k1() {
        let train = ds(vec![vec![0.0, 1.0], vec![0.2, 0.1], vec![0.9, 0.4], vec![0.5, 0.5]], vec![0, 1, 1, 0]);
        let m = train_classifier(&ClassifierSpec::Knn { k: 1 }, &train).unwrap();
        assert_eq!(m.predict_all(&train).unwrap(), train.labels());
    }

    #[test]
    fn knn_vote_tie_goes_to_lowest_class() {
        let train = ds(vec![vec![0.0], vec![1.0]], vec![1, 0]);
        let m = train_classifier(&ClassifierSpec::Knn { k: 2 }, &train).unwrap();
        assert_eq!(m.predict(&[0.5]).unwrap(), 0);
    }

    #[test]
    fn logreg_separates_two_points() {
        let train = ds(vec![vec![-1.0, 2.0], vec![3.0, 0.0]], vec![0, 1]);
        let m = train_classifier(&ClassifierSpec::LOGISTIC_REGRESSION, &train).unwrap();
        assert_eq!(m.predict_all(&train).unwrap(), vec![0, 1]);
    }

    #[test]
    fn tree_on_separable_data() {
        let train = ds(vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]], vec![0, 0, 1, 1]);
        let m = train_classifier(&ClassifierSpec::DECISION_TREE, &train).unwrap();
        assert_eq!(m.predict_all(&train).unwrap(), vec![0, 0, 1, 1]);
    }

    #[test]
    fn single_class_train_is_rejected() {
        let train = ds(vec![vec![0.0], vec![1.0]], vec![0, 0]);
        for spec in ClassifierSpec::all() {
            assert!(train_classifier(&spec, &train).is_err());
        }
    }

    #[test]
    fn parse_names() {
        for spec in ClassifierSpec::all() {
            assert_eq!(spec.name().parse::<ClassifierSpec>().unwrap(), spec);
        }
        assert!(ClassifierSpec::Knn { k: 0 }.validate().is_err());
    }
}
