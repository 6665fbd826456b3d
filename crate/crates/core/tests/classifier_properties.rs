use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rf_sentinel::classifiers::{self, ForestConfig};

fn blobs(rng: &mut ChaCha8Rng, centres: &[Vec<f64>], n_per: usize) -> (Vec<Vec<f64>>, Vec<u32>) {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (c, centre) in centres.iter().enumerate() {
        for _ in 0..n_per {
            rows.push(
                centre
                    .iter()
                    .map(|m| m + rng.sample::<f64, _>(StandardNormal))
                    .collect(),
            );
            labels.push(c as u32);
        }
    }
    (rows, labels)
}

fn accuracy(pred: impl Fn(&[f64]) -> u32, rows: &[Vec<f64>], labels: &[u32]) -> f64 {
    let hits = rows
        .iter()
        .zip(labels)
        .filter(|(r, &l)| pred(r) == l)
        .count();
    hits as f64 / rows.len() as f64
}

#[test]
fn ten_sigma_toy_is_perfect_for_all() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let centres = vec![vec![0.0, 0.0], vec![10.0, 0.0], vec![0.0, 10.0]];
    let (rows, labels) = blobs(&mut rng, &centres, 40);
    let (test, test_labels) = blobs(&mut rng, &centres, 20);
    let p = classifiers::standardize_fit(&rows).unwrap();
    let z = classifiers::standardize_apply(&p, &rows).unwrap();
    let zt = classifiers::standardize_apply(&p, &test).unwrap();

    let knn = classifiers::knn_fit(&z, &labels, 5).unwrap();
    let da = classifiers::da_fit(&z, &labels).unwrap();
    let rf = classifiers::randf_fit(&z, &labels, &ForestConfig::default()).unwrap();
    for (set, lab) in [(&z, &labels), (&zt, &test_labels)] {
        assert_eq!(
            accuracy(|r| classifiers::knn_predict(&knn, r).unwrap(), set, lab),
            1.0
        );
        assert_eq!(
            accuracy(|r| classifiers::da_predict(&da, r).unwrap(), set, lab),
            1.0
        );
        assert_eq!(
            accuracy(|r| classifiers::randf_predict(&rf, r).unwrap(), set, lab),
            1.0
        );
    }
}

#[test]
fn forest_beats_its_trees_on_training_data() {
    let mut wins = 0;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = rng.random_range(2..6);
        let centres: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..p).map(|_| rng.random_range(-1.5..1.5)).collect())
            .collect();
        let (rows, labels) = blobs(&mut rng, &centres, 15);
        let cfg = ForestConfig {
            n_trees: 25,
            seed,
            ..ForestConfig::default()
        };
        let rf = classifiers::randf_fit(&rows, &labels, &cfg).unwrap();
        let forest = accuracy(
            |r| classifiers::randf_predict(&rf, r).unwrap(),
            &rows,
            &labels,
        );
        let best_tree = rf
            .trees
            .iter()
            .map(|t| accuracy(|r| t.predict(r), &rows, &labels))
            .fold(0.0, f64::max);
        if forest >= best_tree {
            wins += 1;
        }
    }
    assert!(wins >= 18, "{wins}/20");
}

#[test]
fn forest_is_deterministic_per_seed() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let centres = vec![vec![0.0, 0.0, 0.0], vec![1.0, 1.0, 0.0]];
    let (rows, labels) = blobs(&mut rng, &centres, 30);
    let cfg = ForestConfig {
        n_trees: 30,
        seed: 4,
        ..ForestConfig::default()
    };
    let a = classifiers::randf_fit(&rows, &labels, &cfg).unwrap();
    let b = classifiers::randf_fit(&rows, &labels, &cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn standardization_by_hand() {
    let p = classifiers::standardize_fit(&[vec![1.0], vec![2.0], vec![3.0]]).unwrap();
    let z = classifiers::standardize_apply(&p, &[vec![1.0], vec![2.0], vec![3.0]]).unwrap();
    for (got, want) in z.iter().zip([-1.0, 0.0, 1.0]) {
        assert!((got[0] - want).abs() < 1e-12);
    }
    assert!(classifiers::standardize_fit(&[vec![4.0, 1.0], vec![4.0, 2.0]]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn knn_ignores_common_scaling(seed in 0u64..10_000, c in 0.01f64..100.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let centres = vec![vec![0.0, 0.0], vec![1.0, 0.5], vec![-0.5, 1.0]];
        let (rows, labels) = blobs(&mut rng, &centres, 8);
        let (probe, _) = blobs(&mut rng, &centres, 5);
        let scale = |m: &[Vec<f64>]| -> Vec<Vec<f64>> {
            m.iter().map(|r| r.iter().map(|v| c * v).collect()).collect()
        };
        let a = classifiers::knn_fit(&rows, &labels, 5).unwrap();
        let b = classifiers::knn_fit(&scale(&rows), &labels, 5).unwrap();
        for (q, qs) in probe.iter().zip(scale(&probe)) {
            prop_assert_eq!(
                classifiers::knn_predict(&a, q).unwrap(),
                classifiers::knn_predict(&b, &qs).unwrap()
            );
        }
    }

    #[test]
    fn discriminant_scores_are_affine(seed in 0u64..10_000, alpha in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let centres = vec![vec![0.0, 0.0, 0.0], vec![2.0, 0.0, 1.0], vec![0.0, 2.0, -1.0]];
        let (rows, labels) = blobs(&mut rng, &centres, 10);
        let da = classifiers::da_fit(&rows, &labels).unwrap();
        let x: Vec<f64> = (0..3).map(|_| rng.random_range(-3.0..3.0)).collect();
        let z: Vec<f64> = (0..3).map(|_| rng.random_range(-3.0..3.0)).collect();
        let mid: Vec<f64> = x.iter().zip(&z).map(|(a, b)| alpha * a + (1.0 - alpha) * b).collect();
        let sx = classifiers::da_scores(&da, &x).unwrap();
        let sz = classifiers::da_scores(&da, &z).unwrap();
        let sm = classifiers::da_scores(&da, &mid).unwrap();
        for k in 0..sx.len() {
            let want = alpha * sx[k] + (1.0 - alpha) * sz[k];
            prop_assert!((sm[k] - want).abs() <= 1e-9 * (1.0 + want.abs()));
        }
    }
}
