use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rf_sentinel::nca::{self, FeatureDataset, NcaConfig};

fn names(p: usize) -> Vec<String> {
    (0..p).map(|i| format!("f{i}")).collect()
}

fn random_dataset(rng: &mut ChaCha8Rng, n_per: usize, p: usize, classes: u32) -> FeatureDataset {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for c in 0..classes {
        for _ in 0..n_per {
            rows.push(
                (0..p)
                    .map(|r| {
                        let z: f64 = rng.sample(StandardNormal);
                        z + if r == 0 { 1.5 * c as f64 } else { 0.0 }
                    })
                    .collect(),
            );
            labels.push(c);
        }
    }
    FeatureDataset::new(rows, labels, names(p))
        .unwrap()
        .mark_standardized()
}

/// Feature 0 carries the class, the rest are noise.
fn informative_dataset(seed: u64, p: usize) -> FeatureDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for c in 0..3u32 {
        for _ in 0..20 {
            let mut r: Vec<f64> = (0..p).map(|_| rng.sample(StandardNormal)).collect();
            r[0] = 3.0 * c as f64 + 0.3 * rng.sample::<f64, _>(StandardNormal);
            rows.push(r);
            labels.push(c);
        }
    }
    FeatureDataset::new(rows, labels, names(p))
        .unwrap()
        .mark_standardized()
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let h = 1e-5;
    for trial in 0..24 {
        let ds = random_dataset(
            &mut rng,
            4 + trial % 4,
            3 + trial % 3,
            2 + (trial % 2) as u32,
        );
        let cfg = NcaConfig {
            lambda: rng.random_range(0.0..1.0),
            kernel_width: rng.random_range(0.5..2.0),
            ..NcaConfig::default()
        };
        let w: Vec<f64> = (0..ds.n_features())
            .map(|_| rng.random_range(0.2..1.5))
            .collect();
        let g = nca::nca_gradient(&w, &ds, &cfg).unwrap();
        for r in 0..w.len() {
            let mut up = w.clone();
            let mut dn = w.clone();
            up[r] += h;
            dn[r] -= h;
            let fd = (nca::nca_objective(&up, &ds, &cfg).unwrap()
                - nca::nca_objective(&dn, &ds, &cfg).unwrap())
                / (2.0 * h);
            let scale = g[r].abs().max(fd.abs()).max(1e-3);
            assert!(
                (g[r] - fd).abs() <= 1e-4 * scale,
                "trial {trial} r {r}: {} vs {fd}",
                g[r]
            );
        }
    }
}

#[test]
fn zero_weights_give_uniform_neighbours() {
    let rows = vec![vec![0.0], vec![1.0], vec![5.0], vec![6.0]];
    let ds = FeatureDataset::new(rows, vec![0, 0, 1, 1], names(1))
        .unwrap()
        .mark_standardized();
    let cfg = NcaConfig {
        lambda: 0.7,
        ..NcaConfig::default()
    };
    let f = nca::nca_objective(&[0.0], &ds, &cfg).unwrap();
    assert!((f - 1.0 / 3.0).abs() < 1e-15);
}

#[test]
fn unstandardized_data_is_rejected() {
    let ds = FeatureDataset::new(
        vec![vec![0.0], vec![1.0], vec![5.0], vec![6.0]],
        vec![0, 0, 1, 1],
        names(1),
    )
    .unwrap();
    assert!(nca::nca_objective(&[1.0], &ds, &NcaConfig::default()).is_err());
}

#[test]
fn informative_feature_ranks_first() {
    for seed in 0..10 {
        let ds = informative_dataset(seed, 5);
        let fit = nca::fit_weights(&ds, &NcaConfig::default()).unwrap();
        assert_eq!(fit.ranking()[0], 0, "seed {seed}: {:?}", fit.w);
        for r in 1..5 {
            assert!(fit.w[r] < 0.25 * fit.w[0], "seed {seed}: {:?}", fit.w);
        }
        assert!(fit.objective_trace.windows(2).all(|p| p[1] >= p[0]));
    }
}

#[test]
fn regularization_shrinks_weights() {
    for seed in 0..3 {
        let ds = informative_dataset(100 + seed, 4);
        let norms: Vec<f64> = [0.1, 1.0, 10.0]
            .iter()
            .map(|&lambda| {
                let cfg = NcaConfig {
                    lambda,
                    ..NcaConfig::default()
                };
                let fit = nca::fit_weights(&ds, &cfg).unwrap();
                fit.w.iter().map(|v| v * v).sum::<f64>()
            })
            .collect();
        assert!(norms.windows(2).all(|p| p[1] <= p[0] + 1e-9), "{norms:?}");
    }
}

#[test]
fn ranking_survives_common_column_scaling() {
    for seed in 0..3 {
        let ds = informative_dataset(200 + seed, 4);
        let scaled: Vec<Vec<f64>> = ds
            .rows()
            .iter()
            .map(|r| r.iter().map(|v| 2.5 * v).collect())
            .collect();
        let ds2 = ds.with_rows(scaled).unwrap();
        let cfg = NcaConfig::default();
        let a = nca::fit_weights(&ds, &cfg).unwrap();
        let b = nca::fit_weights(&ds2, &cfg).unwrap();
        assert_eq!(a.ranking(), b.ranking());
        assert_eq!(a.ranking()[0], 0);
    }
}

#[test]
fn top_k_selection() {
    let fit = nca::fit_weights(&informative_dataset(7, 4), &NcaConfig::default()).unwrap();
    assert_eq!(nca::select_top_k(&fit, 1).unwrap(), vec![0]);
    let mut all = nca::select_top_k(&fit, 4).unwrap();
    all.sort_unstable();
    assert_eq!(all, vec![0, 1, 2, 3]);
    assert!(nca::select_top_k(&fit, 0).is_err());
    assert!(nca::select_top_k(&fit, 5).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn objective_ignores_row_order(seed in 0u64..10_000, w in proptest::collection::vec(0.0f64..2.0, 3)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ds = random_dataset(&mut rng, 5, 3, 3);
        let mut idx: Vec<usize> = (0..ds.len()).collect();
        for i in (1..idx.len()).rev() {
            idx.swap(i, rng.random_range(0..=i));
        }
        let shuffled = ds.subset(&idx);
        let cfg = NcaConfig::default();
        let a = nca::nca_objective(&w, &ds, &cfg).unwrap();
        let b = nca::nca_objective(&w, &shuffled, &cfg).unwrap();
        prop_assert!((a - b).abs() <= 1e-12);
    }
}
