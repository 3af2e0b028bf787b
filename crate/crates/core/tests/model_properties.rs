use std::collections::HashSet;

use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use respira_core::dataset::{self, PhaseRecord};
use respira_core::svm::{self, gram_matrix, KernelSpec, SvmModel, TrainConfig};
use respira_core::Label;

fn points(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect()
}

fn labelled(n: usize, d: usize, seed: u64) -> Vec<PhaseRecord> {
    points(n, d, seed)
        .into_iter()
        .enumerate()
        .map(|(i, x)| {
            // Ring-shaped classes so that only the non-linear kernels separate them.
            let r2: f64 = x.iter().map(|v| v * v).sum();
            let label = if r2 > 1.5 * d as f64 / 3.0 {
                Label::Abnormal
            } else {
                Label::Normal
            };
            PhaseRecord::new(format!("x{i}"), label, x)
        })
        .collect()
}

fn min_eigenvalue(spec: &KernelSpec, xs: &[Vec<f64>]) -> f64 {
    let g = gram_matrix(spec, xs).unwrap();
    let m = DMatrix::from_fn(g.len(), g.len(), |i, j| g.get(i, j));
    SymmetricEigen::new(m).eigenvalues.min()
}

#[test]
fn gram_matrices_are_positive_semidefinite() {
    for seed in 0..10 {
        let xs = points(25, 4, seed);
        for spec in [
            KernelSpec::Linear,
            KernelSpec::Rbf { gamma: 0.7 },
            KernelSpec::Quadratic { coef0: 1.0 },
        ] {
            let lambda = min_eigenvalue(&spec, &xs);
            assert!(lambda >= -1e-9, "{spec:?} seed {seed}: {lambda}");
        }
        let g = gram_matrix(&KernelSpec::Rbf { gamma: 0.7 }, &xs).unwrap();
        assert!((0..g.len()).all(|i| g.get(i, i) == 1.0));
    }
}

#[test]
fn gram_permutes_with_its_inputs() {
    let xs = points(9, 3, 4);
    let order = [4usize, 0, 8, 2, 7, 1, 3, 6, 5];
    let permuted: Vec<Vec<f64>> = order.iter().map(|&i| xs[i].clone()).collect();
    let spec = KernelSpec::Quadratic { coef0: 0.5 };
    let (a, b) = (gram_matrix(&spec, &xs).unwrap(), gram_matrix(&spec, &permuted).unwrap());
    for (r, &i) in order.iter().enumerate() {
        for (c, &j) in order.iter().enumerate() {
            assert_eq!(b.get(r, c), a.get(i, j));
        }
    }
}

/// `[x_i x_j for all i, j] ++ √(2c)·x ++ [c]`
fn feature_map(x: &[f64], c: f64) -> Vec<f64> {
    let mut phi: Vec<f64> = x.iter().flat_map(|a| x.iter().map(move |b| a * b)).collect();
    phi.extend(x.iter().map(|v| (2.0 * c).sqrt() * v));
    phi.push(c);
    phi
}

#[test]
fn quadratic_model_is_linear_in_feature_space() {
    let data = labelled(40, 3, 11);
    let c = 1.0;
    let model = svm::train(&data, KernelSpec::Quadratic { coef0: c }, &TrainConfig::default()).unwrap();
    // Primal weight in the explicit feature space from the same dual coefficients.
    let dim = feature_map(&data[0].features, c).len();
    let mut w = vec![0.0; dim];
    for (sv, coef) in model.support_vectors.iter().zip(&model.coefficients) {
        for (wk, phik) in w.iter_mut().zip(feature_map(sv, c)) {
            *wk += coef * phik;
        }
    }
    for x in points(50, 3, 12) {
        let explicit: f64 = w.iter().zip(feature_map(&x, c)).map(|(a, b)| a * b).sum::<f64>() + model.bias;
        let kernel = model.decision_value(&x).unwrap();
        assert!(
            (explicit - kernel).abs() <= 1e-9 * (1.0 + kernel.abs()),
            "{explicit} vs {kernel}"
        );
    }
}

#[test]
fn trained_models_are_feasible_and_satisfy_kkt() {
    for seed in 0..6 {
        let data = labelled(30, 2, seed);
        for spec in [
            KernelSpec::Linear,
            KernelSpec::Rbf { gamma: 1.0 },
            KernelSpec::Quadratic { coef0: 1.0 },
        ] {
            let config = TrainConfig {
                c_penalty: 2.0,
                seed,
                ..TrainConfig::default()
            };
            let model = svm::train(&data, spec, &config).unwrap();
            let alphas = model.alphas_for(&data);
            assert!(alphas.iter().all(|&a| (0.0..=2.0).contains(&a)));
            let balance: f64 = alphas.iter().zip(&data).map(|(a, r)| a * r.label.sign().unwrap()).sum();
            assert!(balance.abs() <= 1e-6);
            assert!(
                svm::kkt_report(&model, &data, &config).unwrap().is_empty(),
                "{spec:?} seed {seed}"
            );
        }
    }
}

#[test]
fn training_is_deterministic() {
    let data = labelled(50, 3, 21);
    let config = TrainConfig {
        seed: 9,
        ..TrainConfig::default()
    };
    let a = svm::train(&data, KernelSpec::Rbf { gamma: 0.5 }, &config).unwrap();
    let b = svm::train(&data, KernelSpec::Rbf { gamma: 0.5 }, &config).unwrap();
    assert_eq!(svm::model_to_string(&a), svm::model_to_string(&b));
}

#[test]
fn augmentation_and_smote_leave_inputs_alone() {
    let mut data = labelled(40, 5, 31);
    for r in data.iter_mut().take(8) {
        *r = PhaseRecord {
            breaths_true: Some(6.0),
            ..r.clone()
        };
    }
    let before = data.clone();
    let noisy = dataset::augment_noise(&data, 0.2, 1).unwrap();
    assert_eq!(data, before);
    assert_eq!(noisy.len(), data.len());
    for (n, r) in noisy.iter().zip(&data) {
        assert_eq!(n.id, format!("{}-aug0.2", r.id));
        assert_eq!((n.label, n.breaths_true), (r.label, r.breaths_true));
    }
    let balanced = dataset::smote(&data, 5, 2).unwrap();
    assert_eq!(data, before);
    assert_eq!(&balanced[..data.len()], &data[..]);
    assert!(balanced[data.len()..]
        .iter()
        .all(|r| r.id.starts_with("smote-") && r.breaths_true.is_none()));
}

fn record_strategy(dim: usize) -> impl Strategy<Value = PhaseRecord> {
    (
        "[a-z][a-z0-9_-]{0,10}",
        prop_oneof![Just(Label::Normal), Just(Label::Abnormal), Just(Label::Unlabeled)],
        proptest::option::of(0.0f64..20.0),
        proptest::collection::vec(-1e6f64..1e6, dim),
    )
        .prop_map(|(id, label, breaths_true, features)| PhaseRecord {
            id,
            label,
            breaths_true,
            features,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn csv_round_trip(records in proptest::collection::vec(record_strategy(7), 0..12)) {
        let text = dataset::to_csv_string(&records).unwrap();
        prop_assert!(!text.contains('\r'));
        prop_assert_eq!(dataset::from_csv_str(&text).unwrap(), records);
    }

    #[test]
    fn split_is_a_stratified_partition(normal in 2usize..30, abnormal in 2usize..30, frac in 0.1f64..0.9, seed in any::<u64>()) {
        let mut records: Vec<PhaseRecord> = (0..normal + abnormal)
            .map(|i| {
                let label = if i < normal { Label::Normal } else { Label::Abnormal };
                PhaseRecord::new(format!("r{i}"), label, vec![i as f64])
            })
            .collect();
        records.reverse();
        let split = dataset::split(&records, frac, seed).unwrap();
        prop_assert_eq!(split.train.len() + split.validation.len(), records.len());
        let train: HashSet<&str> = split.train.iter().map(|r| r.id.as_str()).collect();
        let validation: HashSet<&str> = split.validation.iter().map(|r| r.id.as_str()).collect();
        prop_assert!(train.is_disjoint(&validation));
        for (label, total) in [(Label::Normal, normal), (Label::Abnormal, abnormal)] {
            let k = split.train.iter().filter(|r| r.label == label).count();
            prop_assert!((k as f64 - frac * total as f64).abs() <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn saved_models_reload_with_identical_decisions(seed in 0u64..1_000, gamma in 0.05f64..2.0) {
        let data = labelled(24, 3, seed);
        prop_assume!(data.iter().any(|r| r.label == Label::Normal) && data.iter().any(|r| r.label == Label::Abnormal));
        let mut model: SvmModel = svm::train(&data, KernelSpec::Rbf { gamma }, &TrainConfig::default()).unwrap();
        model.standardizer = dataset::Standardizer::fit(&data).unwrap();
        let back = svm::model_from_str(&svm::model_to_string(&model)).unwrap();
        prop_assert_eq!(&back, &model);
        for x in points(20, 3, seed + 1) {
            prop_assert_eq!(back.decision_value_raw(&x).unwrap(), model.decision_value_raw(&x).unwrap());
        }
    }

    #[test]
    fn zero_coefficient_vectors_never_matter(seed in 0u64..1_000) {
        let data = labelled(20, 2, seed);
        prop_assume!(data.iter().any(|r| r.label == Label::Normal) && data.iter().any(|r| r.label == Label::Abnormal));
        let model = svm::train(&data, KernelSpec::Quadratic { coef0: 1.0 }, &TrainConfig::default()).unwrap();
        let mut padded = model.clone();
        padded.support_vectors.push(vec![9.0, -9.0]);
        padded.coefficients.push(0.0);
        for x in points(10, 2, seed) {
            prop_assert_eq!(padded.decision_value(&x).unwrap(), model.decision_value(&x).unwrap());
        }
    }
}
