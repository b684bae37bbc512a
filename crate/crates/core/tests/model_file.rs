use std::path::Path;

use bruxsense::forest::{ForestModel, MaxFeatures, TreeNode};

fn golden() -> String {
    std::fs::read_to_string(
        Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/golden_model.txt"),
    )
    .unwrap()
}

fn row(variance: f64, band: f64) -> Vec<f64> {
    let mut x = vec![0.0; 11];
    x[2] = variance;
    x[6] = band;
    x
}

#[test]
fn golden_model_parses_and_predicts() {
    let model = ForestModel::from_text(&golden()).unwrap();
    assert_eq!(model.trees.len(), 3);
    assert_eq!(model.params.max_features, MaxFeatures::Fixed(3));
    assert_eq!(model.params.max_depth, Some(4));
    assert_eq!(model.n_train, 10);
    assert_eq!(model.feature_names[6], "band_energy_5_10");
    assert_eq!(
        model.trees[2],
        TreeNode::Leaf {
            class_counts: vec![3, 2]
        }
    );

    // Votes worked out by hand from the three trees.
    assert_eq!(model.votes(&row(0.02, 0.9)).unwrap(), vec![1, 2]);
    assert_eq!(model.predict(&row(0.02, 0.9)).unwrap(), 1);
    assert_eq!(model.votes(&row(0.005, 0.1)).unwrap(), vec![3, 0]);
    assert_eq!(model.votes(&row(0.005, 0.6)).unwrap(), vec![2, 1]);
    assert_eq!(model.predict(&row(0.005, 0.6)).unwrap(), 0);
    // Threshold equality goes left.
    assert_eq!(model.votes(&row(0.01, 0.5)).unwrap(), vec![3, 0]);
}

#[test]
fn golden_model_writes_back_identically() {
    let text = golden();
    assert_eq!(ForestModel::from_text(&text).unwrap().to_text(), text);
}

#[test]
fn golden_model_importance() {
    let model = ForestModel::from_text(&golden()).unwrap();
    let imp = model.feature_importance();
    assert!(imp.any_split);
    assert!((imp.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    let used: Vec<usize> = (0..11).filter(|&j| imp.weights[j] > 0.0).collect();
    assert_eq!(used, vec![2, 6]);
}
