use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rf_sentinel::detector::{self, State};
use rf_sentinel::dwt;
use rf_sentinel::transient::{self, EntropyMode};

/// Direct SSE evaluation of every upward split.
fn exhaustive_split(x: &[f64]) -> Option<usize> {
    let sse = |s: &[f64]| {
        let m = s.iter().sum::<f64>() / s.len() as f64;
        s.iter().map(|v| (v - m).powi(2)).sum::<f64>()
    };
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let whole = sse(x);
    let mut best: Option<(usize, f64)> = None;
    for s in 1..x.len() {
        if mean(&x[s..]) <= mean(&x[..s]) {
            continue;
        }
        let gain = whole - sse(&x[..s]) - sse(&x[s..]);
        if gain > 1e-12 * (1.0 + whole) && best.is_none_or(|(_, g)| gain > g) {
            best = Some((s, gain));
        }
    }
    best.map(|b| b.0)
}

#[test]
fn haar_eight_sample_example() {
    let x: Vec<f64> = (1..=8).map(f64::from).collect();
    let (a1, _) = dwt::haar_level(&x).unwrap();
    let r = std::f64::consts::SQRT_2;
    for (got, want) in a1.iter().zip([3.0, 7.0, 11.0, 15.0]) {
        assert!((got - want / r).abs() <= 4.0 * f64::EPSILON * want, "{got}");
    }
    assert_eq!(dwt::preprocess_samples(&x).unwrap().y_t, vec![-2.0, -2.0]);
}

#[test]
fn haar_four_sample_example() {
    let (a, d) = dwt::haar_level(&[1.0, 2.0, 3.0, 4.0]).unwrap();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    assert!((a[0] - 3.0 * r).abs() < 1e-15 && (a[1] - 7.0 * r).abs() < 1e-15);
    assert!(d.iter().all(|v| (v + r).abs() < 1e-15));
    assert!(dwt::haar_level(&[5.0]).is_err());
}

#[test]
fn preprocessing_shrinks_by_four() {
    let x: Vec<f64> = (0..25_000).map(|i| (i as f64 * 0.37).sin()).collect();
    assert_eq!(dwt::preprocess_samples(&x).unwrap().y_t.len(), 6_250);
}

#[test]
fn table_features_on_one_two_three() {
    let f = transient::extract_fingerprints(&[1.0, 2.0, 3.0], EntropyMode::UnitSum).unwrap();
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12;
    assert!(close(f.mean, 2.0));
    assert!(close(f.absolute_mean, 2.0));
    assert!(close(f.variance, 2.0 / 3.0));
    assert!(close(f.std_dev, 1.0));
    assert!(close(f.skewness, 0.0));
    assert!(close(f.peak_to_peak, 2.0));
    assert!(close(f.peak_value, 3.0));
    let rms = (14.0f64 / 3.0).sqrt();
    assert!(close(f.rms, rms));
    let root = ((1.0 + 2f64.sqrt() + 3f64.sqrt()) / 3.0).powi(2);
    assert!(close(f.root, root));
    assert!(close(f.kurtosis, 2.0 / 2.0));
    assert!(close(f.shape_factor, rms / 2.0));
    assert!(close(f.crest_factor, 3.0 / rms));
    assert!(close(f.impulse_factor, 1.5));
    assert!(close(f.clearance_factor, 3.0 / root));
    let h = -[1.0f64, 2.0, 3.0]
        .iter()
        .map(|v| (v / 6.0) * (v / 6.0).log2())
        .sum::<f64>();
    assert!(close(f.entropy, h));
}

#[test]
fn hand_counted_transitions() {
    let s = detector::quantize_states(&[0.2, -5.0, 3.0, 0.1], 1.0).unwrap();
    assert_eq!(s.states, vec![State::S1, State::S2, State::S2, State::S1]);
    let t = detector::transition_counts(&s).unwrap();
    assert_eq!(t.counts, [[0, 1], [1, 1]]);
    for (p, want) in t
        .probs
        .iter()
        .flatten()
        .zip([0.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0])
    {
        assert!((p - want).abs() < 1e-15);
    }
    let ll = detector::log_likelihood(&[[0, 1], [1, 1]], &[[0.25; 2]; 2]).unwrap();
    assert!((ll - 3.0 * 0.25f64.ln()).abs() < 1e-12);
    assert_eq!(
        detector::count_transitions(&[1.0, 1.0 + 1e-9], 1.0).unwrap(),
        [[0, 1], [0, 0]]
    );
    assert!(detector::quantize_states(&[0.3], 1.0).is_err());
    assert!(detector::count_transitions(&[0.3], 1.0).is_err());
}

#[test]
fn change_point_matches_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..400 {
        let n = rng.random_range(transient::MIN_TRAJECTORY_FRAMES..=512);
        let onset = rng.random_range(0..n);
        let x: Vec<f64> = (0..n)
            .map(|i| {
                let base = if i >= onset { 0.8 } else { 0.05 };
                (base + 0.2 * rng.random::<f64>()).min(1.0)
            })
            .collect();
        assert_eq!(
            transient::mean_change_point(&x),
            exhaustive_split(&x),
            "n {n} onset {onset}"
        );
    }
}

#[test]
fn step_trajectory_change_point() {
    let mut x = vec![0.05; 50];
    x.extend(vec![0.95; 50]);
    let s = transient::mean_change_point(&x).unwrap();
    assert!(s.abs_diff(50) <= 1);
    assert_eq!(transient::mean_change_point(&[0.5; 40]), None);
}
