//! Random forest classifier: bootstrap-resampled CART trees grown on Gini
//! impurity decrease with a random feature subset at each node, combined by
//! majority vote.
//!
//! Every tree draws from its own RNG stream keyed by `(seed, tree index)`, so
//! a model is reproducible regardless of how many threads grew it.

mod format;
mod tree;

use std::fmt;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use format::FORMAT_TAG;
pub use tree::{best_split, Split, TreeNode, GAIN_EPSILON};

use crate::seed;

#[derive(Debug, Error, PartialEq)]
pub enum ForestError {
    #[error("class counts sum to zero")]
    EmptyNode,
    #[error("training data must contain at least two classes")]
    DegenerateDataset,
    #[error("expected {expected} features, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid training data: {0}")]
    InvalidData(String),
    #[error("invalid forest parameters: {0}")]
    InvalidParams(String),
    #[error("unsupported model format `{0}`")]
    VersionMismatch(String),
    #[error("malformed model file at line {line}: {message}")]
    Format { line: usize, message: String },
}

/// Gini impurity `1 − Σ p_c²`.
pub fn gini(class_counts: &[usize]) -> Result<f64, ForestError> {
    if class_counts.iter().sum::<usize>() == 0 {
        return Err(ForestError::EmptyNode);
    }
    Ok(gini_unchecked(class_counts))
}

/// `(n² − Σc²) / n²` in integers, so the result is the correctly rounded
/// impurity.
pub(crate) fn gini_unchecked(counts: &[usize]) -> f64 {
    let total: u128 = counts.iter().map(|&c| c as u128).sum();
    if total == 0 {
        return 0.0;
    }
    let squares: u128 = counts.iter().map(|&c| (c as u128) * (c as u128)).sum();
    let denom = total * total;
    (denom - squares) as f64 / denom as f64
}

/// Features considered at each split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "MaxFeaturesRepr", into = "MaxFeaturesRepr")]
pub enum MaxFeatures {
    /// `max(1, floor(√d))`.
    #[default]
    Sqrt,
    All,
    Fixed(usize),
}

impl MaxFeatures {
    pub fn resolve(self, n_features: usize) -> usize {
        match self {
            MaxFeatures::Sqrt => ((n_features as f64).sqrt().floor() as usize).max(1),
            MaxFeatures::All => n_features,
            MaxFeatures::Fixed(k) => k.clamp(1, n_features),
        }
    }
}

impl fmt::Display for MaxFeatures {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MaxFeatures::Sqrt => f.write_str("sqrt"),
            MaxFeatures::All => f.write_str("all"),
            MaxFeatures::Fixed(k) => write!(f, "{k}"),
        }
    }
}

impl std::str::FromStr for MaxFeatures {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sqrt" => Ok(MaxFeatures::Sqrt),
            "all" => Ok(MaxFeatures::All),
            other => match other.parse::<usize>() {
                Ok(k) if k > 0 => Ok(MaxFeatures::Fixed(k)),
                _ => Err(format!(
                    "max_features must be sqrt, all or a positive integer, got `{other}`"
                )),
            },
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum MaxFeaturesRepr {
    Name(String),
    Count(usize),
}

impl TryFrom<MaxFeaturesRepr> for MaxFeatures {
    type Error = String;

    fn try_from(r: MaxFeaturesRepr) -> Result<Self, Self::Error> {
        match r {
            MaxFeaturesRepr::Name(s) => s.parse(),
            MaxFeaturesRepr::Count(0) => Err("max_features must be positive".into()),
            MaxFeaturesRepr::Count(k) => Ok(MaxFeatures::Fixed(k)),
        }
    }
}

impl From<MaxFeatures> for MaxFeaturesRepr {
    fn from(m: MaxFeatures) -> Self {
        match m {
            MaxFeatures::Fixed(k) => MaxFeaturesRepr::Count(k),
            other => MaxFeaturesRepr::Name(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub n_estimators: usize,
    pub min_samples_split: usize,
    pub max_features: MaxFeatures,
    pub max_depth: Option<usize>,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_estimators: 90,
            min_samples_split: 2,
            max_features: MaxFeatures::Sqrt,
            max_depth: None,
            seed: 42,
        }
    }
}

impl ForestParams {
    pub fn validate(&self) -> Result<(), ForestError> {
        if self.n_estimators == 0 {
            return Err(ForestError::InvalidParams(
                "n_estimators must be at least 1".into(),
            ));
        }
        if self.min_samples_split < 2 {
            return Err(ForestError::InvalidParams(
                "min_samples_split must be at least 2".into(),
            ));
        }
        if self.max_features == MaxFeatures::Fixed(0) {
            return Err(ForestError::InvalidParams(
                "max_features must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Trained ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub trees: Vec<TreeNode>,
    pub n_classes: usize,
    pub feature_names: Vec<String>,
    pub params: ForestParams,
    /// Number of training samples (also the bootstrap size).
    pub n_train: usize,
}

/// Mean-decrease-in-impurity importances.
#[derive(Debug, Clone, PartialEq)]
pub struct Importances {
    /// One weight per feature; sums to 1 unless `any_split` is false.
    pub weights: Vec<f64>,
    /// False when no tree contains a split; weights are then all zero.
    pub any_split: bool,
}

/// Row indices of the bootstrap draw for tree `tree_index`.
pub fn bootstrap_indices(seed: u64, tree_index: usize, n: usize) -> Vec<usize> {
    let mut rng = tree_rng(seed, tree_index);
    draw_bootstrap(&mut rng, n)
}

fn tree_rng(seed: u64, tree_index: usize) -> rand_chacha::ChaCha8Rng {
    seed::rng(seed::derive(seed, tree_index as u64), 0)
}

fn draw_bootstrap(rng: &mut impl Rng, n: usize) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

fn default_names(d: usize) -> Vec<String> {
    (0..d).map(|j| format!("f{j}")).collect()
}

/// Trains a forest on rows `x` with class labels `y` (0-based).
pub fn fit(x: &[Vec<f64>], y: &[usize], params: &ForestParams) -> Result<ForestModel, ForestError> {
    let d = x.first().map_or(0, Vec::len);
    fit_named(x, y, default_names(d), params)
}

pub fn fit_named(
    x: &[Vec<f64>],
    y: &[usize],
    feature_names: Vec<String>,
    params: &ForestParams,
) -> Result<ForestModel, ForestError> {
    params.validate()?;
    if x.len() != y.len() {
        return Err(ForestError::InvalidData(format!(
            "{} rows but {} labels",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(ForestError::InvalidData(
            "at least two samples required".into(),
        ));
    }
    let d = x[0].len();
    if d == 0 {
        return Err(ForestError::InvalidData("rows have no features".into()));
    }
    if feature_names.len() != d {
        return Err(ForestError::InvalidData(format!(
            "{} feature names for {d} features",
            feature_names.len()
        )));
    }
    for (i, row) in x.iter().enumerate() {
        if row.len() != d {
            return Err(ForestError::DimensionMismatch {
                expected: d,
                actual: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(ForestError::InvalidData(format!(
                "row {i} has a non-finite value"
            )));
        }
    }
    let n_classes = y.iter().max().map_or(0, |m| m + 1).max(2);
    let mut present = vec![false; n_classes];
    for &c in y {
        present[c] = true;
    }
    if present.iter().filter(|&&p| p).count() < 2 {
        return Err(ForestError::DegenerateDataset);
    }

    let n = x.len();
    let subset_size = params.max_features.resolve(d);
    let trees = (0..params.n_estimators)
        .into_par_iter()
        .map(|m| {
            let mut rng = tree_rng(params.seed, m);
            let rows = draw_bootstrap(&mut rng, n);
            let mut grower = tree::Grower {
                x,
                y,
                n_classes,
                n_features: d,
                subset_size,
                params,
                rng,
            };
            grower.grow(&rows, 0)
        })
        .collect();

    Ok(ForestModel {
        trees,
        n_classes,
        feature_names,
        params: params.clone(),
        n_train: n,
    })
}

impl ForestModel {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), ForestError> {
        if x.len() != self.n_features() {
            return Err(ForestError::DimensionMismatch {
                expected: self.n_features(),
                actual: x.len(),
            });
        }
        Ok(())
    }

    /// Per-class vote counts for `x`.
    pub fn votes(&self, x: &[f64]) -> Result<Vec<usize>, ForestError> {
        self.check_dim(x)?;
        let mut votes = vec![0; self.n_classes];
        for tree in &self.trees {
            votes[tree.vote(x)] += 1;
        }
        Ok(votes)
    }

    /// Majority vote over trees; ties go to the lower class index.
    pub fn predict(&self, x: &[f64]) -> Result<usize, ForestError> {
        Ok(tree::argmax_first(&self.votes(x)?))
    }

    pub fn predict_many(&self, rows: &[Vec<f64>]) -> Result<Vec<usize>, ForestError> {
        rows.iter().map(|r| self.predict(r)).collect()
    }

    pub fn feature_importance(&self) -> Importances {
        let d = self.n_features();
        let mut totals = vec![0.0; d];
        for tree in &self.trees {
            let root_n = tree.class_counts().iter().sum::<usize>() as f64;
            accumulate_importance(tree, root_n, &mut totals);
        }
        let m = self.trees.len() as f64;
        totals.iter_mut().for_each(|t| *t /= m);
        let sum: f64 = totals.iter().sum();
        if sum > 0.0 {
            totals.iter_mut().for_each(|t| *t /= sum);
        }
        Importances {
            weights: totals,
            any_split: sum > 0.0,
        }
    }

    /// Serializes to the versioned text format.
    pub fn to_text(&self) -> String {
        format::write(self)
    }

    pub fn from_text(text: &str) -> Result<Self, ForestError> {
        format::read(text)
    }
}

/// Adds each split's weighted impurity decrease to `totals`; returns the
/// class counts under `node`.
fn accumulate_importance(node: &TreeNode, root_n: f64, totals: &mut [f64]) -> Vec<usize> {
    match node {
        TreeNode::Leaf { class_counts } => class_counts.clone(),
        TreeNode::Split {
            feature,
            left,
            right,
            ..
        } => {
            let l = accumulate_importance(left, root_n, totals);
            let r = accumulate_importance(right, root_n, totals);
            let counts: Vec<usize> = l.iter().zip(&r).map(|(a, b)| a + b).collect();
            let (nl, nr) = (
                l.iter().sum::<usize>() as f64,
                r.iter().sum::<usize>() as f64,
            );
            let n = nl + nr;
            let decrease = gini_unchecked(&counts)
                - (nl / n) * gini_unchecked(&l)
                - (nr / n) * gini_unchecked(&r);
            totals[*feature] += (n / root_n) * decrease;
            counts
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn gini_values() {
        assert_eq!(gini(&[10, 0]).unwrap(), 0.0);
        assert_eq!(gini(&[5, 5]).unwrap(), 0.5);
        assert!(
            (gini(&[3, 1]).unwrap() - (1.0 - (0.75f64.powi(2) + 0.25f64.powi(2)))).abs() < 1e-15
        );
        assert_eq!(gini(&[3, 1]).unwrap(), 0.375);
        assert_eq!(gini(&[0, 0]), Err(ForestError::EmptyNode));
    }

    #[test]
    fn gini_bounds() {
        for a in 0..12usize {
            for b in 0..12usize {
                for c in 0..6usize {
                    if a + b + c == 0 {
                        continue;
                    }
                    let g = gini(&[a, b, c]).unwrap();
                    assert!((0.0..=1.0 - 1.0 / 3.0 + 1e-15).contains(&g));
                    let pure = [a, b, c].iter().filter(|&&v| v > 0).count() == 1;
                    assert_eq!(g == 0.0, pure);
                }
            }
        }
    }

    fn separable(n: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
        let x: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64]).collect();
        let y = (0..n).map(|i| usize::from(i >= n / 2)).collect();
        (x, y)
    }

    #[test]
    fn separable_training_accuracy() {
        let (x, y) = separable(20);
        let model = fit(&x, &y, &ForestParams::default()).unwrap();
        assert_eq!(model.trees.len(), 90);
        assert_eq!(model.predict_many(&x).unwrap(), y);
    }

    #[test]
    fn fit_is_deterministic() {
        let (x, y) = separable(30);
        let p = ForestParams {
            n_estimators: 7,
            ..ForestParams::default()
        };
        assert_eq!(fit(&x, &y, &p).unwrap(), fit(&x, &y, &p).unwrap());
    }

    #[test]
    fn degenerate_and_invalid_inputs() {
        let (x, _) = separable(10);
        assert_eq!(
            fit(&x, &[0; 10], &ForestParams::default()),
            Err(ForestError::DegenerateDataset)
        );
        assert!(matches!(
            fit(&x, &[0; 9], &ForestParams::default()),
            Err(ForestError::InvalidData(_))
        ));
        let bad = ForestParams {
            min_samples_split: 1,
            ..ForestParams::default()
        };
        assert!(fit(&x, &[0, 1, 0, 1, 0, 1, 0, 1, 0, 1], &bad).is_err());
    }

    #[test]
    fn prediction_rules() {
        let leaf = |c: Vec<usize>| TreeNode::Leaf { class_counts: c };
        let mut model = ForestModel {
            trees: vec![leaf(vec![0, 3]), leaf(vec![0, 1]), leaf(vec![5, 1])],
            n_classes: 2,
            feature_names: vec!["a".into()],
            params: ForestParams::default(),
            n_train: 4,
        };
        assert_eq!(model.predict(&[0.0]).unwrap(), 1);
        model.trees.remove(0);
        assert_eq!(model.predict(&[0.0]).unwrap(), 0);
        assert_eq!(
            model.predict(&[0.0, 1.0]),
            Err(ForestError::DimensionMismatch {
                expected: 1,
                actual: 2
            })
        );
    }

    #[test]
    fn single_tree_forest_follows_its_tree() {
        let (x, y) = separable(16);
        let model = fit(
            &x,
            &y,
            &ForestParams {
                n_estimators: 1,
                ..ForestParams::default()
            },
        )
        .unwrap();
        for v in [-3.0, 0.0, 7.4, 7.6, 100.0] {
            assert_eq!(model.predict(&[v]).unwrap(), model.trees[0].vote(&[v]));
        }
    }

    #[test]
    fn informative_feature_dominates_importance() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..200 {
            let label = i % 2;
            let mut row = vec![label as f64 * 2.0 + rng.random_range(-0.8..0.8)];
            row.extend((0..4).map(|_| rng.random_range(-1.0..1.0)));
            x.push(row);
            y.push(label);
        }
        let model = fit(&x, &y, &ForestParams::default()).unwrap();
        let imp = model.feature_importance();
        assert!(imp.any_split);
        assert!(imp.weights[0] > 0.8, "{:?}", imp.weights);
        assert!((imp.weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn no_splits_means_zero_importance() {
        // Identical feature values: no threshold exists.
        let x = vec![vec![1.0]; 6];
        let y = vec![0, 1, 0, 1, 0, 1];
        let model = fit(
            &x,
            &y,
            &ForestParams {
                n_estimators: 3,
                ..ForestParams::default()
            },
        )
        .unwrap();
        let imp = model.feature_importance();
        assert!(!imp.any_split);
        assert_eq!(imp.weights, vec![0.0]);
    }

    #[test]
    fn monotone_transform_keeps_training_predictions() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let x: Vec<Vec<f64>> = (0..60)
            .map(|_| vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)])
            .collect();
        let y: Vec<usize> = x
            .iter()
            .map(|r| usize::from(r[0] + 0.5 * r[1] > 0.0))
            .collect();
        let p = ForestParams {
            n_estimators: 15,
            ..ForestParams::default()
        };
        let a = fit(&x, &y, &p).unwrap();
        let tx: Vec<Vec<f64>> = x.iter().map(|r| vec![r[0].exp(), r[1]]).collect();
        let b = fit(&tx, &y, &p).unwrap();
        assert_eq!(a.predict_many(&x).unwrap(), b.predict_many(&tx).unwrap());
    }

    #[test]
    fn max_features_parsing() {
        assert_eq!(MaxFeatures::Sqrt.resolve(11), 3);
        assert_eq!(MaxFeatures::All.resolve(11), 11);
        assert_eq!("4".parse::<MaxFeatures>().unwrap(), MaxFeatures::Fixed(4));
        assert!("0".parse::<MaxFeatures>().is_err());
        let p: ForestParams = toml::from_str("max_features = 5").unwrap();
        assert_eq!(p.max_features, MaxFeatures::Fixed(5));
        let p: ForestParams = toml::from_str("max_features = \"all\"").unwrap();
        assert_eq!(p.max_features, MaxFeatures::All);
        assert_eq!(p.n_estimators, 90);
    }
}
