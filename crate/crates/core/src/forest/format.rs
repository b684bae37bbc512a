//! Line-oriented model file.
//!
//! ```text
//! bruxsense-forest v1
//! classes 2
//! features <d> <name_0> ... <name_d-1>
//! n_estimators 90
//! min_samples_split 2
//! max_features sqrt
//! max_depth none
//! seed 42
//! n_train 162
//! tree 0 <node count>
//! split <feature> <threshold>
//! leaf <count_0> ... <count_C-1>
//! ...
//! end
//! ```
//!
//! Nodes are listed in pre-order (node, left subtree, right subtree).
//! Thresholds use Rust's shortest round-trip float formatting.

use super::{ForestError, ForestModel, ForestParams, TreeNode};

pub const FORMAT_TAG: &str = "bruxsense-forest v1";

pub(super) fn write(model: &ForestModel) -> String {
    let p = &model.params;
    let mut out = String::new();
    out.push_str(FORMAT_TAG);
    out.push('\n');
    out.push_str(&format!("classes {}\n", model.n_classes));
    out.push_str(&format!(
        "features {} {}\n",
        model.feature_names.len(),
        model.feature_names.join(" ")
    ));
    out.push_str(&format!("n_estimators {}\n", p.n_estimators));
    out.push_str(&format!("min_samples_split {}\n", p.min_samples_split));
    out.push_str(&format!("max_features {}\n", p.max_features));
    match p.max_depth {
        Some(d) => out.push_str(&format!("max_depth {d}\n")),
        None => out.push_str("max_depth none\n"),
    }
    out.push_str(&format!("seed {}\n", p.seed));
    out.push_str(&format!("n_train {}\n", model.n_train));
    for (i, tree) in model.trees.iter().enumerate() {
        out.push_str(&format!("tree {i} {}\n", tree.num_nodes()));
        write_node(tree, &mut out);
    }
    out.push_str("end\n");
    out
}

fn write_node(node: &TreeNode, out: &mut String) {
    match node {
        TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        } => {
            out.push_str(&format!("split {feature} {threshold}\n"));
            write_node(left, out);
            write_node(right, out);
        }
        TreeNode::Leaf { class_counts } => {
            out.push_str("leaf");
            for c in class_counts {
                out.push_str(&format!(" {c}"));
            }
            out.push('\n');
        }
    }
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn err(&self, message: impl Into<String>) -> ForestError {
        ForestError::Format {
            line: self.line,
            message: message.into(),
        }
    }

    fn next_line(&mut self) -> Result<&'a str, ForestError> {
        match self.inner.next() {
            Some((i, l)) => {
                self.line = i + 1;
                Ok(l)
            }
            None => Err(self.err("unexpected end of file")),
        }
    }

    /// Next line split into words, its first word required to be `key`.
    fn keyed(&mut self, key: &str) -> Result<Vec<&'a str>, ForestError> {
        let line = self.next_line()?;
        let mut words = line.split_whitespace();
        match words.next() {
            Some(k) if k == key => Ok(words.collect()),
            _ => Err(self.err(format!("expected `{key}`, found `{line}`"))),
        }
    }

    fn single<T: std::str::FromStr>(&mut self, key: &str) -> Result<T, ForestError> {
        let words = self.keyed(key)?;
        match words.as_slice() {
            [v] => v
                .parse()
                .map_err(|_| self.err(format!("bad value for `{key}`: `{v}`"))),
            _ => Err(self.err(format!("`{key}` takes exactly one value"))),
        }
    }

    fn parse<T: std::str::FromStr>(&self, word: &str) -> Result<T, ForestError> {
        word.parse()
            .map_err(|_| self.err(format!("cannot parse `{word}`")))
    }
}

pub(super) fn read(text: &str) -> Result<ForestModel, ForestError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        line: 0,
    };
    let tag = lines.next_line()?.trim();
    if tag != FORMAT_TAG {
        return Err(ForestError::VersionMismatch(tag.to_string()));
    }
    let n_classes: usize = lines.single("classes")?;
    if n_classes < 2 {
        return Err(lines.err("at least two classes required"));
    }
    let words = lines.keyed("features")?;
    let Some((count, names)) = words.split_first() else {
        return Err(lines.err("missing feature count"));
    };
    let d: usize = lines.parse(count)?;
    if names.len() != d || d == 0 {
        return Err(lines.err(format!("expected {d} feature names, found {}", names.len())));
    }
    let feature_names = names.iter().map(|s| s.to_string()).collect();

    let n_estimators: usize = lines.single("n_estimators")?;
    let min_samples_split = lines.single("min_samples_split")?;
    let max_features = lines.single("max_features")?;
    let depth: String = lines.single("max_depth")?;
    let max_depth = match depth.as_str() {
        "none" => None,
        d => Some(lines.parse(d)?),
    };
    let seed = lines.single("seed")?;
    let n_train = lines.single("n_train")?;
    let params = ForestParams {
        n_estimators,
        min_samples_split,
        max_features,
        max_depth,
        seed,
    };
    params.validate()?;

    let mut trees = Vec::with_capacity(n_estimators);
    for i in 0..n_estimators {
        let words = lines.keyed("tree")?;
        let (index, nodes): (usize, usize) = match words.as_slice() {
            [a, b] => (lines.parse(a)?, lines.parse(b)?),
            _ => return Err(lines.err("`tree` takes an index and a node count")),
        };
        if index != i {
            return Err(lines.err(format!("expected tree {i}, found tree {index}")));
        }
        let mut remaining = nodes;
        let tree = read_node(&mut lines, &mut remaining, n_classes, d)?;
        if remaining != 0 {
            return Err(lines.err(format!("tree {i} declares {nodes} nodes but has fewer")));
        }
        trees.push(tree);
    }
    let last = lines.next_line()?;
    if last.trim() != "end" {
        return Err(lines.err(format!("expected `end`, found `{last}`")));
    }
    Ok(ForestModel {
        trees,
        n_classes,
        feature_names,
        params,
        n_train,
    })
}

fn read_node(
    lines: &mut Lines<'_>,
    remaining: &mut usize,
    n_classes: usize,
    d: usize,
) -> Result<TreeNode, ForestError> {
    if *remaining == 0 {
        return Err(lines.err("more nodes than declared"));
    }
    *remaining -= 1;
    let line = lines.next_line()?;
    let words: Vec<&str> = line.split_whitespace().collect();
    match words.as_slice() {
        ["split", feature, threshold] => {
            let feature: usize = lines.parse(feature)?;
            let threshold: f64 = lines.parse(threshold)?;
            if feature >= d {
                return Err(lines.err(format!("feature {feature} out of range")));
            }
            if !threshold.is_finite() {
                return Err(lines.err("non-finite threshold"));
            }
            let left = read_node(lines, remaining, n_classes, d)?;
            let right = read_node(lines, remaining, n_classes, d)?;
            Ok(TreeNode::Split {
                feature,
                threshold,
                left: Box::new(left),
                right: Box::new(right),
            })
        }
        ["leaf", counts @ ..] => {
            if counts.len() != n_classes {
                return Err(lines.err(format!("leaf needs {n_classes} class counts")));
            }
            let class_counts = counts
                .iter()
                .map(|c| lines.parse(c))
                .collect::<Result<Vec<usize>, _>>()?;
            if class_counts.iter().sum::<usize>() == 0 {
                return Err(lines.err("leaf with zero samples"));
            }
            Ok(TreeNode::Leaf { class_counts })
        }
        _ => Err(lines.err(format!("expected `split` or `leaf`, found `{line}`"))),
    }
}
