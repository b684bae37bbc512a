use rand::seq::index;
use rand_chacha::ChaCha8Rng;

use super::{gini_unchecked, ForestParams};

/// Gains at or below this are treated as zero, and candidate splits must beat
/// the incumbent by more than this to replace it. Keeps exact ties resolved
/// toward the lower feature / threshold despite rounding.
pub const GAIN_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    /// `x[feature] <= threshold` goes left.
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        class_counts: Vec<usize>,
    },
}

impl TreeNode {
    pub fn leaf(&self, x: &[f64]) -> &[usize] {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { class_counts } => return class_counts,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] <= *threshold {
                        left
                    } else {
                        right
                    }
                }
            }
        }
    }

    /// Majority class of the leaf reached by `x`; ties go to the lower class.
    pub fn vote(&self, x: &[f64]) -> usize {
        argmax_first(self.leaf(x))
    }

    /// Class counts of every training sample that reached this node.
    pub fn class_counts(&self) -> Vec<usize> {
        match self {
            TreeNode::Leaf { class_counts } => class_counts.clone(),
            TreeNode::Split { left, right, .. } => left
                .class_counts()
                .iter()
                .zip(right.class_counts())
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn num_nodes(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => 1 + left.num_nodes() + right.num_nodes(),
        }
    }
}

pub(crate) fn argmax_first(counts: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate().skip(1) {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    /// Parent Gini minus the size-weighted Gini of the children.
    pub gain: f64,
}

fn counts_of(rows: &[usize], y: &[usize], n_classes: usize) -> Vec<usize> {
    let mut counts = vec![0; n_classes];
    for &r in rows {
        counts[y[r]] += 1;
    }
    counts
}

/// Best axis-aligned Gini split of the samples `rows` over `features`.
///
/// Candidate thresholds are midpoints between consecutive distinct sorted
/// values. Returns `None` when no candidate has positive gain.
pub fn best_split(
    x: &[Vec<f64>],
    y: &[usize],
    rows: &[usize],
    features: &[usize],
    n_classes: usize,
) -> Option<Split> {
    let n = rows.len();
    if n < 2 {
        return None;
    }
    let parent_counts = counts_of(rows, y, n_classes);
    let parent = gini_unchecked(&parent_counts);
    if parent == 0.0 {
        return None;
    }

    let mut sorted_features = features.to_vec();
    sorted_features.sort_unstable();
    let mut best: Option<Split> = None;
    let mut order = rows.to_vec();
    for &feature in &sorted_features {
        order.sort_by(|&a, &b| x[a][feature].total_cmp(&x[b][feature]));
        let mut left = vec![0usize; n_classes];
        let mut right = parent_counts.clone();
        for i in 0..n - 1 {
            let class = y[order[i]];
            left[class] += 1;
            right[class] -= 1;
            let (lo, hi) = (x[order[i]][feature], x[order[i + 1]][feature]);
            if lo == hi {
                continue;
            }
            let n_left = (i + 1) as f64;
            let n_right = (n - i - 1) as f64;
            let children =
                (n_left * gini_unchecked(&left) + n_right * gini_unchecked(&right)) / n as f64;
            let gain = parent - children;
            if best.is_none_or(|b| gain > b.gain + GAIN_EPSILON) {
                let mid = lo + (hi - lo) / 2.0;
                let threshold = if mid < hi { mid } else { lo };
                best = Some(Split {
                    feature,
                    threshold,
                    gain,
                });
            }
        }
    }
    best.filter(|s| s.gain > GAIN_EPSILON)
}

pub(crate) struct Grower<'a> {
    pub x: &'a [Vec<f64>],
    pub y: &'a [usize],
    pub n_classes: usize,
    pub n_features: usize,
    pub subset_size: usize,
    pub params: &'a ForestParams,
    pub rng: ChaCha8Rng,
}

impl Grower<'_> {
    pub fn grow(&mut self, rows: &[usize], depth: usize) -> TreeNode {
        let counts = counts_of(rows, self.y, self.n_classes);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_reached = self.params.max_depth.is_some_and(|d| depth >= d);
        if rows.len() < self.params.min_samples_split || pure || depth_reached {
            return TreeNode::Leaf {
                class_counts: counts,
            };
        }

        let features: Vec<usize> = if self.subset_size >= self.n_features {
            (0..self.n_features).collect()
        } else {
            index::sample(&mut self.rng, self.n_features, self.subset_size).into_vec()
        };
        let Some(split) = best_split(self.x, self.y, rows, &features, self.n_classes) else {
            return TreeNode::Leaf {
                class_counts: counts,
            };
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&r| self.x[r][split.feature] <= split.threshold);
        let left = self.grow(&left_rows, depth + 1);
        let right = self.grow(&right_rows, depth + 1);
        TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: Box::new(left),
            right: Box::new(right),
        }
    }
}
