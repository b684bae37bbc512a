//! Stratified k-fold cross-validation and confusion-matrix metrics.
//!
//! Grinding is the positive class. Fold confusion counts are pooled (summed)
//! before computing the headline metrics; per-fold values are kept as well.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::forest::{fit_named, ForestError, ForestParams};
use crate::label::Label;
use crate::seed;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("no samples were evaluated")]
    EmptyEvaluation,
    #[error("{n} samples cannot be split into {k} folds")]
    TooFewSamples { n: usize, k: usize },
    #[error("at least 2 folds required, got {0}")]
    InvalidFolds(usize),
    #[error("training split of fold {fold} lacks class {label}")]
    MissingClass { fold: usize, label: Label },
    #[error("{rows} feature rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error(transparent)]
    Forest(#[from] ForestError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn new(tp: usize, tn: usize, fp: usize, fn_: usize) -> Self {
        Self { tp, tn, fp, fn_ }
    }

    /// Tallies predictions against truth with `positive` as the positive class.
    pub fn tally(truth: &[Label], predicted: &[Label], positive: Label) -> Self {
        let mut c = Self::default();
        for (&t, &p) in truth.iter().zip(predicted) {
            match (t == positive, p == positive) {
                (true, true) => c.tp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fp += 1,
                (true, false) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    /// The same outcomes seen with the other class as positive.
    pub fn swapped(&self) -> Self {
        Self {
            tp: self.tn,
            tn: self.tp,
            fp: self.fn_,
            fn_: self.fp,
        }
    }
}

impl std::ops::Add for ConfusionCounts {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            tp: self.tp + o.tp,
            tn: self.tn + o.tn,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// `tp + fp == 0`; precision reported as 0.
    pub precision_undefined: bool,
    /// `tp + fn == 0`; recall reported as 0.
    pub recall_undefined: bool,
}

pub fn compute_metrics(c: &ConfusionCounts) -> Result<Metrics, EvalError> {
    let total = c.total();
    if total == 0 {
        return Err(EvalError::EmptyEvaluation);
    }
    let ratio = |num: usize, den: usize| {
        if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let accuracy = (c.tp + c.tn) as f64 / total as f64;
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    // Harmonic mean of precision and recall, reduced to counts.
    let f1 = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_);
    Ok(Metrics {
        accuracy,
        precision,
        recall,
        f1,
        precision_undefined: c.tp + c.fp == 0,
        recall_undefined: c.tp + c.fn_ == 0,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified k-fold partition of sample indices.
///
/// Each class's indices are shuffled with `seed` and dealt round-robin over
/// the folds, continuing where the previous class stopped, so fold sizes
/// differ by at most one and each class is spread within ±1 per fold.
pub fn kfold_split(labels: &[Label], k: usize, seed: u64) -> Result<Vec<Fold>, EvalError> {
    if k < 2 {
        return Err(EvalError::InvalidFolds(k));
    }
    let n = labels.len();
    if n < k {
        return Err(EvalError::TooFewSamples { n, k });
    }
    let mut tests = vec![Vec::new(); k];
    let mut next = 0;
    for (ci, class) in Label::ALL.iter().enumerate() {
        let mut members: Vec<usize> = (0..n).filter(|&i| labels[i] == *class).collect();
        members.shuffle(&mut seed::rng(seed, ci as u64));
        for i in members {
            tests[next].push(i);
            next = (next + 1) % k;
        }
    }
    Ok(tests
        .into_iter()
        .map(|mut test| {
            test.sort_unstable();
            let mut in_test = vec![false; n];
            test.iter().for_each(|&i| in_test[i] = true);
            let train = (0..n).filter(|&i| !in_test[i]).collect();
            Fold { train, test }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: Label,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub n_test: usize,
    pub counts: ConfusionCounts,
    pub accuracy: f64,
    pub train_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureWeight {
    pub name: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n_samples: usize,
    pub folds: usize,
    pub seed: u64,
    pub params: ForestParams,
    pub pooled: ConfusionCounts,
    pub accuracy: f64,
    /// Mean over folds of the in-fold training accuracy.
    pub train_accuracy: f64,
    pub classes: Vec<ClassMetrics>,
    pub per_fold: Vec<FoldReport>,
    /// Mean decrease in impurity, averaged over folds.
    pub feature_importance: Vec<FeatureWeight>,
}

impl MetricsReport {
    pub fn class(&self, label: Label) -> &ClassMetrics {
        self.classes
            .iter()
            .find(|c| c.label == label)
            .expect("report covers both classes")
    }

    /// Feature names ordered by decreasing importance (stable on ties).
    pub fn importance_ranking(&self) -> Vec<&str> {
        let mut order: Vec<&FeatureWeight> = self.feature_importance.iter().collect();
        order.sort_by(|a, b| b.weight.total_cmp(&a.weight));
        order.into_iter().map(|f| f.name.as_str()).collect()
    }
}

/// Trains on each training split and evaluates on the held-out fold.
pub fn cross_validate(
    x: &[Vec<f64>],
    y: &[Label],
    feature_names: &[String],
    params: &ForestParams,
    k: usize,
    seed: u64,
) -> Result<MetricsReport, EvalError> {
    if x.len() != y.len() {
        return Err(EvalError::LengthMismatch {
            rows: x.len(),
            labels: y.len(),
        });
    }
    let folds = kfold_split(y, k, seed)?;
    for (f, fold) in folds.iter().enumerate() {
        for label in Label::ALL {
            if !fold.train.iter().any(|&i| y[i] == label) {
                return Err(EvalError::MissingClass { fold: f, label });
            }
        }
    }

    struct FoldResult {
        report: FoldReport,
        importance: Vec<f64>,
    }

    let results: Vec<FoldResult> = folds
        .par_iter()
        .enumerate()
        .map(|(f, fold)| -> Result<FoldResult, EvalError> {
            let pick = |idx: &[usize]| -> (Vec<Vec<f64>>, Vec<usize>) {
                (
                    idx.iter().map(|&i| x[i].clone()).collect(),
                    idx.iter().map(|&i| y[i].index()).collect(),
                )
            };
            let (train_x, train_y) = pick(&fold.train);
            let fold_params = ForestParams {
                seed: seed::derive(params.seed, f as u64),
                ..params.clone()
            };
            let model = fit_named(&train_x, &train_y, feature_names.to_vec(), &fold_params)?;
            let to_labels = |v: Vec<usize>| -> Vec<Label> {
                v.into_iter()
                    .map(|c| Label::from_index(c).expect("binary model"))
                    .collect()
            };
            let train_pred = to_labels(model.predict_many(&train_x)?);
            let train_truth: Vec<Label> = fold.train.iter().map(|&i| y[i]).collect();
            let train_counts = ConfusionCounts::tally(&train_truth, &train_pred, Label::Grinding);

            let (test_x, _) = pick(&fold.test);
            let test_pred = to_labels(model.predict_many(&test_x)?);
            let test_truth: Vec<Label> = fold.test.iter().map(|&i| y[i]).collect();
            let counts = ConfusionCounts::tally(&test_truth, &test_pred, Label::Grinding);

            Ok(FoldResult {
                report: FoldReport {
                    fold: f,
                    n_test: fold.test.len(),
                    counts,
                    accuracy: compute_metrics(&counts)?.accuracy,
                    train_accuracy: compute_metrics(&train_counts)?.accuracy,
                },
                importance: model.feature_importance().weights,
            })
        })
        .collect::<Result<_, _>>()?;

    let pooled = results
        .iter()
        .fold(ConfusionCounts::default(), |acc, r| acc + r.report.counts);
    let positive = compute_metrics(&pooled)?;
    let negative = compute_metrics(&pooled.swapped())?;
    let train_accuracy =
        results.iter().map(|r| r.report.train_accuracy).sum::<f64>() / results.len() as f64;
    let mut importance = vec![0.0; feature_names.len()];
    for r in &results {
        for (acc, w) in importance.iter_mut().zip(&r.importance) {
            *acc += w / results.len() as f64;
        }
    }

    Ok(MetricsReport {
        n_samples: x.len(),
        folds: k,
        seed,
        params: params.clone(),
        pooled,
        accuracy: positive.accuracy,
        train_accuracy,
        classes: vec![
            ClassMetrics {
                label: Label::NoGrinding,
                precision: negative.precision,
                recall: negative.recall,
                f1: negative.f1,
            },
            ClassMetrics {
                label: Label::Grinding,
                precision: positive.precision,
                recall: positive.recall,
                f1: positive.f1,
            },
        ],
        per_fold: results.into_iter().map(|r| r.report).collect(),
        feature_importance: feature_names
            .iter()
            .zip(importance)
            .map(|(name, weight)| FeatureWeight {
                name: name.clone(),
                weight,
            })
            .collect(),
    })
}
