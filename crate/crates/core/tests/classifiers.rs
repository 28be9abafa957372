mod common;

use proptest::prelude::*;

use readability::classifiers::*;
use readability::{Error, Matrix32, Matrix64};

#[test]
fn blobs_are_separable_by_every_family() {
    for kind in ModelKind::ALL {
        let (acc, _) = common::blob_accuracy(kind, 3);
        assert!(acc >= 0.95, "{}: {acc}", kind.name());
    }
}

#[test]
fn forest_degenerates_to_tree() {
    for seed in 0..50 {
        assert!(common::forest_matches_tree(seed), "seed {seed}");
    }
}

#[test]
fn mlp_gradients_match_finite_differences() {
    for seed in 0..5 {
        let err = common::mlp_gradient_error(seed, 20, 1e-5);
        assert!(err < 1e-4, "seed {seed}: {err}");
    }
}

#[test]
fn fitting_is_seed_deterministic() {
    let (x, y) = common::blobs(90, 4, 3, 2.0, 1);
    for kind in ModelKind::ALL {
        let a = fit(kind, &x, &y, 3, &TrainParams::default(), 9).unwrap();
        let b = fit(kind, &x, &y, 3, &TrainParams::default(), 9).unwrap();
        assert_eq!(a, b, "{}", kind.name());
    }
}

#[test]
fn forest_is_thread_count_independent() {
    let (x, y) = common::blobs(120, 6, 3, 1.5, 4);
    let fit_with = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| fit_extra_trees(&x, &y, 3, &ForestParams::extra_trees(), 5).unwrap())
    };
    assert_eq!(fit_with(1), fit_with(4));
}

#[test]
fn f32_models_train() {
    let (x, y) = common::blobs(150, 4, 3, 6.0, 2);
    let x32 = Matrix32::from_vec(
        x.rows(),
        x.cols(),
        x.as_slice().iter().map(|&v| v as f32).collect(),
    )
    .unwrap();
    for kind in ModelKind::ALL {
        let m = fit(kind, &x32, &y, 3, &TrainParams::default(), 1).unwrap();
        let acc = readability::eval::evaluate(&y, &m.predict(&x32).unwrap(), 3)
            .unwrap()
            .accuracy;
        assert!(acc > 0.9, "{}: {acc}", kind.name());
    }
}

#[test]
fn training_input_errors() {
    let x = Matrix64::from_rows(&[[0.0], [1.0]]).unwrap();
    assert!(fit_tree(&x, &[0], 2, &TreeParams::default(), 0).is_err());
    assert!(fit_tree(&x, &[0, 2], 2, &TreeParams::default(), 0).is_err());
    assert!(fit_linear_svm(&x, &[1, 1], 2, &SvmParams::default(), 0).is_err());
    assert!(fit_mlp(&x, &[0, 0], 2, &MlpParams::default(), 0).is_err());
    let nan = Matrix64::from_rows(&[[f64::NAN], [1.0]]).unwrap();
    assert!(fit_tree(&nan, &[0, 1], 2, &TreeParams::default(), 0).is_err());
    let tree = fit_tree(&x, &[0, 1], 2, &TreeParams::default(), 0).unwrap();
    assert!(matches!(
        tree.predict(&Matrix64::zeros(1, 3)),
        Err(Error::Dimension {
            expected: 1,
            got: 3
        })
    ));
}

#[test]
fn pure_node_is_a_leaf() {
    let x = Matrix64::from_rows(&[[0.0], [1.0], [2.0]]).unwrap();
    let t = fit_tree(&x, &[1, 1, 1], 2, &TreeParams::default(), 0).unwrap();
    assert_eq!(t.n_leaves(), 1);
    assert_eq!(t.leaf_histogram(&[5.0]), &[0, 3]);
}

#[test]
fn max_depth_is_respected() {
    let (x, y) = common::blobs(100, 3, 3, 0.5, 8);
    let params = TreeParams {
        max_depth: Some(2),
        ..TreeParams::default()
    };
    assert!(fit_tree(&x, &y, 3, &params, 0).unwrap().depth() <= 2);
}

#[test]
fn forest_votes_sum_leaf_histograms() {
    let (x, y) = common::blobs(60, 3, 3, 3.0, 2);
    let f = fit_random_forest(&x, &y, 3, &ForestParams::random_forest(), 1).unwrap();
    assert_eq!(f.trees.len(), 100);
    let row = x.row(0);
    let manual: usize = f
        .trees
        .iter()
        .map(|t| t.leaf_histogram(row).iter().sum::<usize>())
        .sum();
    assert_eq!(f.votes(row).iter().sum::<usize>(), manual);
}

#[test]
fn tree_splits_xor_without_gain_at_root() {
    let x = Matrix64::from_vec(4, 2, vec![0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0]).unwrap();
    let y = vec![0, 1, 1, 0];
    let t = fit_tree(&x, &y, 2, &TreeParams::default(), 0).unwrap();
    assert_eq!(t.predict(&x).unwrap(), y);
    assert_eq!(t.depth(), 2);
}

#[test]
fn mlp_outputs_are_distributions() {
    let (x, y) = common::blobs(150, 4, 3, 4.0, 6);
    let params = MlpParams {
        epochs: 400,
        ..MlpParams::default()
    };
    let m = fit_mlp(&x, &y, 3, &params, 0).unwrap();
    let p = m.predict_proba(x.row(0));
    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert_eq!(m.n_params(), 4 * 100 + 100 + 100 * 3 + 3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn fully_grown_tree_fits_distinct_rows(seed in any::<u64>()) {
        let (x, y, k) = common::small_dataset(seed);
        // Relabel duplicates so every feature vector has one label.
        let mut first = std::collections::HashMap::new();
        let y: Vec<usize> = (0..x.rows())
            .map(|i| *first.entry(format!("{:?}", x.row(i))).or_insert(y[i]))
            .collect();
        let t = fit_tree(&x, &y, k, &TreeParams::default(), seed).unwrap();
        prop_assert_eq!(t.predict(&x).unwrap(), y);
    }

    #[test]
    fn predictions_are_valid_classes(seed in any::<u64>()) {
        let (x, y, k) = common::small_dataset(seed);
        prop_assume!(y.iter().collect::<std::collections::HashSet<_>>().len() >= 2);
        let params = TrainParams {
            random_forest: ForestParams { n_trees: 5, ..ForestParams::random_forest() },
            extra_trees: ForestParams { n_trees: 5, ..ForestParams::extra_trees() },
            svm: SvmParams { epochs: 5, ..SvmParams::default() },
            mlp: MlpParams { epochs: 5, hidden: 4, ..MlpParams::default() },
            ..TrainParams::default()
        };
        for kind in ModelKind::ALL {
            let m = fit(kind, &x, &y, k, &params, seed).unwrap();
            prop_assert!(m.predict(&x).unwrap().iter().all(|&c| c < k));
        }
    }
}
