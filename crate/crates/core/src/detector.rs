//! Two-state Markov naive-Bayes detector.
//!
//! A preprocessed trace is quantized into states `S1` (|y| <= delta) and
//! `S2` (|y| > delta). Each class (emission, noise) is summarised by the joint
//! distribution of consecutive state pairs, normalised by the total number of
//! transitions, and a capture is assigned to whichever class gives the larger
//! log-posterior. Ties go to the emission class.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dwt;
use crate::error::{Error, Result};
use crate::signal::SampledSignal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum State {
    S1,
    S2,
}

impl State {
    fn index(self) -> usize {
        match self {
            State::S1 => 0,
            State::S2 => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateSequence {
    pub states: Vec<State>,
    pub delta: f64,
}

/// 2x2 transition counts and their joint normalisation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrices {
    pub counts: [[u64; 2]; 2],
    pub probs: [[f64; 2]; 2],
}

impl TransitionMatrices {
    pub fn from_counts(counts: [[u64; 2]; 2]) -> Result<Self> {
        let total: u64 = counts.iter().flatten().sum();
        if total == 0 {
            return Err(Error::invalid("no transitions to normalise"));
        }
        let mut probs = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                probs[i][j] = counts[i][j] as f64 / total as f64;
            }
        }
        Ok(Self { counts, probs })
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

pub fn quantize_states(y_t: &[f64], delta: f64) -> Result<StateSequence> {
    check_delta(delta)?;
    if y_t.len() < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 samples, got {}",
            y_t.len()
        )));
    }
    let states = y_t
        .iter()
        .map(|v| {
            if v.abs() <= delta {
                State::S1
            } else {
                State::S2
            }
        })
        .collect();
    Ok(StateSequence { states, delta })
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::invalid(format!(
            "threshold must be positive, got {delta}"
        )));
    }
    Ok(())
}

pub fn transition_counts(states: &StateSequence) -> Result<TransitionMatrices> {
    if states.states.len() < 2 {
        return Err(Error::invalid(
            "need at least 2 states to count transitions",
        ));
    }
    let mut counts = [[0u64; 2]; 2];
    for w in states.states.windows(2) {
        counts[w[0].index()][w[1].index()] += 1;
    }
    TransitionMatrices::from_counts(counts)
}

/// Quantize and count in one pass, without materialising the states.
pub fn count_transitions(y_t: &[f64], delta: f64) -> Result<[[u64; 2]; 2]> {
    check_delta(delta)?;
    if y_t.len() < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 samples, got {}",
            y_t.len()
        )));
    }
    let mut counts = [[0u64; 2]; 2];
    let mut prev = usize::from(y_t[0].abs() > delta);
    for v in &y_t[1..] {
        let cur = usize::from(v.abs() > delta);
        counts[prev][cur] += 1;
        prev = cur;
    }
    Ok(counts)
}

/// `sum N_ij ln p_ij`.
pub fn log_likelihood(counts: &[[u64; 2]; 2], probs: &[[f64; 2]; 2]) -> Result<f64> {
    let mut acc = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let n = counts[i][j];
            if n == 0 {
                continue;
            }
            let p = probs[i][j];
            if !(p > 0.0) {
                return Err(Error::invalid(format!(
                    "p{}{} = {p} but {n} transitions observed",
                    i + 1,
                    j + 1
                )));
            }
            acc += n as f64 * p.ln();
        }
    }
    Ok(acc)
}

fn laplace(counts: &[[u64; 2]; 2]) -> [[f64; 2]; 2] {
    let total: u64 = counts.iter().flatten().sum::<u64>() + 4;
    let mut p = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            p[i][j] = (counts[i][j] + 1) as f64 / total as f64;
        }
    }
    p
}

fn smoothing_tag() -> String {
    "laplace1".to_string()
}

/// Fitted detector. Serialises to the on-disk JSON layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    pub delta: f64,
    pub sigma_noise: f64,
    pub probs_signal: [[f64; 2]; 2],
    pub probs_noise: [[f64; 2]; 2],
    pub prior_signal: f64,
    #[serde(default = "smoothing_tag")]
    pub smoothing: String,
}

impl DetectorModel {
    pub fn delta_multiple(&self) -> f64 {
        self.delta / self.sigma_noise
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_noise > 0.0) || !(self.delta > 0.0) {
            return Err(Error::invalid("detector needs positive sigma and delta"));
        }
        if !(self.prior_signal > 0.0 && self.prior_signal < 1.0) {
            return Err(Error::invalid(format!(
                "prior must lie in (0, 1), got {}",
                self.prior_signal
            )));
        }
        for p in self.probs_signal.iter().chain(&self.probs_noise).flatten() {
            if !(*p > 0.0 && *p <= 1.0) {
                return Err(Error::invalid(format!(
                    "transition probability {p} outside (0, 1]"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Signal,
    Noise,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub decision: Decision,
    pub log_posterior_signal: f64,
    pub log_posterior_noise: f64,
}

/// Sample standard deviation of the concatenated level-2 detail traces.
pub fn estimate_noise_sigma(noise_captures: &[SampledSignal]) -> Result<f64> {
    let traces = noise_captures
        .iter()
        .map(|c| dwt::preprocess(c).map(|w| w.y_t))
        .collect::<Result<Vec<_>>>()?;
    noise_sigma_from_traces(&traces)
}

pub fn noise_sigma_from_traces(traces: &[Vec<f64>]) -> Result<f64> {
    if traces.is_empty() {
        return Err(Error::invalid("no noise captures supplied"));
    }
    let n: usize = traces.iter().map(Vec::len).sum();
    if n < 100 {
        return Err(Error::invalid(format!(
            "only {n} preprocessed noise samples, need 100"
        )));
    }
    let mean = traces.iter().flatten().sum::<f64>() / n as f64;
    let ss: f64 = traces.iter().flatten().map(|v| (v - mean).powi(2)).sum();
    Ok((ss / (n - 1) as f64).sqrt())
}

pub fn fit_detector(
    signal_captures: &[SampledSignal],
    noise_captures: &[SampledSignal],
    delta_multiple: f64,
) -> Result<DetectorModel> {
    if signal_captures.is_empty() || noise_captures.is_empty() {
        return Err(Error::invalid(
            "both classes need at least one training capture",
        ));
    }
    let pre = |caps: &[SampledSignal]| -> Result<Vec<Vec<f64>>> {
        caps.iter()
            .map(|c| dwt::preprocess(c).map(|w| w.y_t))
            .collect()
    };
    let sig = pre(signal_captures)?;
    let noise = pre(noise_captures)?;
    let sigma = noise_sigma_from_traces(&noise)?;
    fit_detector_traces(&sig, &noise, sigma, delta_multiple, 0.5)
}

/// Fit on already-preprocessed traces with a known noise sigma.
pub fn fit_detector_traces(
    signal_traces: &[Vec<f64>],
    noise_traces: &[Vec<f64>],
    sigma_noise: f64,
    delta_multiple: f64,
    prior_signal: f64,
) -> Result<DetectorModel> {
    if signal_traces.is_empty() || noise_traces.is_empty() {
        return Err(Error::invalid(
            "both classes need at least one training capture",
        ));
    }
    if !(delta_multiple > 0.0 && delta_multiple.is_finite()) {
        return Err(Error::invalid(format!(
            "delta multiple must be positive, got {delta_multiple}"
        )));
    }
    if !(sigma_noise > 0.0) {
        return Err(Error::invalid("noise sigma estimate is zero"));
    }
    let delta = delta_multiple * sigma_noise;
    let pooled = |traces: &[Vec<f64>]| -> Result<[[u64; 2]; 2]> {
        let mut acc = [[0u64; 2]; 2];
        for t in traces {
            let c = count_transitions(t, delta)?;
            for i in 0..2 {
                for j in 0..2 {
                    acc[i][j] += c[i][j];
                }
            }
        }
        Ok(acc)
    };
    let model = DetectorModel {
        delta,
        sigma_noise,
        probs_signal: laplace(&pooled(signal_traces)?),
        probs_noise: laplace(&pooled(noise_traces)?),
        prior_signal,
        smoothing: smoothing_tag(),
    };
    model.validate()?;
    Ok(model)
}

pub fn detect(y_t: &[f64], model: &DetectorModel) -> Result<Detection> {
    model.validate()?;
    let counts = count_transitions(y_t, model.delta)?;
    let log_posterior_signal =
        log_likelihood(&counts, &model.probs_signal)? + model.prior_signal.ln();
    let log_posterior_noise =
        log_likelihood(&counts, &model.probs_noise)? + (1.0 - model.prior_signal).ln();
    let decision = if log_posterior_signal >= log_posterior_noise {
        Decision::Signal
    } else {
        Decision::Noise
    };
    Ok(Detection {
        decision,
        log_posterior_signal,
        log_posterior_noise,
    })
}

/// Preprocessed training and test traces for one SNR point.
#[derive(Debug, Clone)]
pub struct SnrCell {
    pub snr_db: f64,
    pub train_signal: Vec<Vec<f64>>,
    pub test_signal: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub snr_db: f64,
    pub delta_multiple: f64,
    pub detection_accuracy: f64,
    pub false_alarm_rate: f64,
    pub n_signal: usize,
    pub n_noise: usize,
}

/// Retrains and scores the detector for every (SNR, delta) pair. Noise
/// traces are shared across SNR points; sigma comes from `train_noise`.
pub fn sweep_threshold(
    cells: &[SnrCell],
    train_noise: &[Vec<f64>],
    test_noise: &[Vec<f64>],
    delta_multiples: &[f64],
) -> Result<Vec<SweepRow>> {
    if cells.is_empty() || delta_multiples.is_empty() {
        return Err(Error::invalid("SNR grid and delta grid must be non-empty"));
    }
    if train_noise.is_empty() || test_noise.is_empty() {
        return Err(Error::invalid("noise sets must be non-empty"));
    }
    if cells
        .iter()
        .any(|c| c.train_signal.is_empty() || c.test_signal.is_empty())
    {
        return Err(Error::invalid(
            "every SNR cell needs training and test signals",
        ));
    }
    let sigma = noise_sigma_from_traces(train_noise)?;
    let grid: Vec<(usize, f64)> = cells
        .iter()
        .enumerate()
        .flat_map(|(i, _)| delta_multiples.iter().map(move |&d| (i, d)))
        .collect();

    grid.par_iter()
        .map(|&(i, dm)| {
            let cell = &cells[i];
            let model = fit_detector_traces(&cell.train_signal, train_noise, sigma, dm, 0.5)?;
            let hits = count_signal(&cell.test_signal, &model)?;
            let alarms = count_signal(test_noise, &model)?;
            Ok(SweepRow {
                snr_db: cell.snr_db,
                delta_multiple: dm,
                detection_accuracy: hits as f64 / cell.test_signal.len() as f64,
                false_alarm_rate: alarms as f64 / test_noise.len() as f64,
                n_signal: cell.test_signal.len(),
                n_noise: test_noise.len(),
            })
        })
        .collect()
}

fn count_signal(traces: &[Vec<f64>], model: &DetectorModel) -> Result<usize> {
    let mut n = 0;
    for t in traces {
        if detect(t, model)?.decision == Decision::Signal {
            n += 1;
        }
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use State::*;

    #[test]
    fn quantize_by_rule() {
        let s = quantize_states(&[0.2, -5.0, 3.0, 0.1], 1.0).unwrap();
        assert_eq!(s.states, vec![S1, S2, S2, S1]);
        let s = quantize_states(&[0.5, -0.9, 1.0], 1.0).unwrap();
        assert!(s.states.iter().all(|&x| x == S1));
        let d = 0.7;
        let s = quantize_states(&[d, d + 1e-12], d).unwrap();
        assert_eq!(s.states, vec![S1, S2]);
        assert!(quantize_states(&[1.0, 2.0], 0.0).is_err());
        assert!(quantize_states(&[1.0, 2.0], -1.0).is_err());
    }

    #[test]
    fn hand_counted_transitions() {
        let seq = StateSequence {
            states: vec![S1, S2, S2, S1],
            delta: 1.0,
        };
        let t = transition_counts(&seq).unwrap();
        assert_eq!(t.counts, [[0, 1], [1, 1]]);
        let third = 1.0 / 3.0;
        assert_eq!(t.probs, [[0.0, third], [third, third]]);

        let seq = StateSequence {
            states: vec![S1; 9],
            delta: 1.0,
        };
        let t = transition_counts(&seq).unwrap();
        assert_eq!(t.counts, [[8, 0], [0, 0]]);
        assert_eq!(t.probs[0][0], 1.0);

        let seq = StateSequence {
            states: vec![S1],
            delta: 1.0,
        };
        assert!(transition_counts(&seq).is_err());
    }

    #[test]
    fn fused_counting_matches_two_step() {
        let y: Vec<f64> = (0..500)
            .map(|i| ((i * 37 % 101) as f64 - 50.0) / 20.0)
            .collect();
        let two_step = transition_counts(&quantize_states(&y, 1.1).unwrap()).unwrap();
        assert_eq!(count_transitions(&y, 1.1).unwrap(), two_step.counts);
    }

    #[test]
    fn likelihood_by_hand() {
        let ll = log_likelihood(&[[0, 1], [1, 1]], &[[0.25; 2]; 2]).unwrap();
        assert!((ll - 3.0 * 0.25f64.ln()).abs() < 1e-15);
        assert_eq!(log_likelihood(&[[0; 2]; 2], &[[0.25; 2]; 2]).unwrap(), 0.0);
        assert!(log_likelihood(&[[1, 0], [0, 0]], &[[0.0, 0.5], [0.25, 0.25]]).is_err());
    }

    fn model_with(probs_signal: [[f64; 2]; 2], probs_noise: [[f64; 2]; 2]) -> DetectorModel {
        DetectorModel {
            delta: 1.0,
            sigma_noise: 1.0,
            probs_signal,
            probs_noise,
            prior_signal: 0.5,
            smoothing: smoothing_tag(),
        }
    }

    #[test]
    fn ties_go_to_signal() {
        let m = model_with([[0.25; 2]; 2], [[0.25; 2]; 2]);
        let d = detect(&[0.1, 5.0, 0.3, 0.2], &m).unwrap();
        assert_eq!(d.decision, Decision::Signal);
        assert_eq!(d.log_posterior_signal, d.log_posterior_noise);
    }

    #[test]
    fn identical_classes_tie() {
        let noise: Vec<Vec<f64>> = (0..4)
            .map(|s| {
                crate::signal::generate_noise(4000, 1.0, s)
                    .unwrap()
                    .into_samples()
            })
            .collect();
        let m = fit_detector_traces(&noise, &noise, 1.0, 3.5, 0.5).unwrap();
        assert_eq!(m.probs_signal, m.probs_noise);
        assert_eq!(detect(&noise[0], &m).unwrap().decision, Decision::Signal);
    }

    #[test]
    fn fit_rejects_bad_inputs() {
        let t = vec![vec![0.0, 1.0, 2.0]];
        assert!(fit_detector_traces(&t, &t, 1.0, 0.0, 0.5).is_err());
        assert!(fit_detector_traces(&t, &t, 1.0, -1.0, 0.5).is_err());
        assert!(fit_detector_traces(&[], &t, 1.0, 1.0, 0.5).is_err());
        assert!(fit_detector(&[], &[], 3.5).is_err());
    }

    #[test]
    fn sigma_from_noise() {
        assert!(matches!(
            estimate_noise_sigma(&[]),
            Err(Error::InvalidArgument(_))
        ));
        let zeros =
            SampledSignal::new(vec![0.0; 1000], 1.0, crate::signal::SignalClass::Noise, 0).unwrap();
        assert_eq!(estimate_noise_sigma(&[zeros.clone()]).unwrap(), 0.0);
        assert!(fit_detector(&[zeros.clone()], &[zeros], 3.5).is_err());
    }

    #[test]
    fn sigma_of_white_noise_is_preserved() {
        // Orthonormal filters keep white-noise variance, so the detail band
        // of sigma-1 noise has sigma 1.
        let caps: Vec<SampledSignal> = (0..4)
            .map(|s| crate::signal::generate_noise(100_000, 1.0, 100 + s).unwrap())
            .collect();
        let s = estimate_noise_sigma(&caps).unwrap();
        assert!((0.98..=1.02).contains(&s), "{s}");
    }

    #[test]
    fn sweep_rejects_empty_grid() {
        let t = vec![vec![0.0, 1.0, 2.0]; 2];
        let cell = SnrCell {
            snr_db: 0.0,
            train_signal: t.clone(),
            test_signal: t.clone(),
        };
        assert!(sweep_threshold(&[cell.clone()], &t, &t, &[]).is_err());
        assert!(sweep_threshold(&[], &t, &t, &[1.0]).is_err());
    }

    #[test]
    fn far_non_increasing_in_delta() {
        // Brute force: for each noise trace and delta, count states above
        // threshold; S2 occupancy can only fall as delta grows, and so does
        // the alarm count when the signal model is held to a high-S2 shape.
        let noise: Vec<Vec<f64>> = (0..60)
            .map(|s| {
                crate::signal::generate_noise(2000, 1.0, 500 + s)
                    .unwrap()
                    .into_samples()
            })
            .collect();
        let deltas = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5];
        let mut prev_occ = vec![usize::MAX; noise.len()];
        for &d in &deltas {
            for (k, t) in noise.iter().enumerate() {
                let occ = t.iter().filter(|v| v.abs() > d).count();
                assert!(occ <= prev_occ[k]);
                prev_occ[k] = occ;
            }
        }
    }

    proptest! {
        #[test]
        fn probs_sum_to_one(bits in proptest::collection::vec(any::<bool>(), 2..300)) {
            let seq = StateSequence {
                states: bits.iter().map(|&b| if b { S2 } else { S1 }).collect(),
                delta: 1.0,
            };
            let t = transition_counts(&seq).unwrap();
            prop_assert_eq!(t.total() as usize, bits.len() - 1);
            let s: f64 = t.probs.iter().flatten().sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
            prop_assert!(t.probs.iter().flatten().all(|p| (0.0..=1.0).contains(p)));
        }

        #[test]
        fn likelihood_decreases_with_counts(
            c in proptest::array::uniform4(0u64..50),
            raw in proptest::array::uniform4(0.05f64..1.0),
            cell in 0usize..4,
        ) {
            let total: f64 = raw.iter().sum();
            let probs = [[raw[0] / total, raw[1] / total], [raw[2] / total, raw[3] / total]];
            let counts = [[c[0], c[1]], [c[2], c[3]]];
            let mut more = counts;
            more[cell / 2][cell % 2] += 1;
            let a = log_likelihood(&counts, &probs).unwrap();
            let b = log_likelihood(&more, &probs).unwrap();
            prop_assert!(b < a);
        }

        #[test]
        fn decision_is_scale_consistent(
            y in proptest::collection::vec(-5.0f64..5.0, 2..200),
            scale in 0.01f64..100.0,
        ) {
            let m = model_with([[0.1, 0.1], [0.1, 0.7]], [[0.7, 0.1], [0.1, 0.1]]);
            let mut scaled_model = m.clone();
            scaled_model.delta *= scale;
            scaled_model.sigma_noise *= scale;
            let ys: Vec<f64> = y.iter().map(|v| v * scale).collect();
            let a = quantize_states(&y, m.delta).unwrap();
            let b = quantize_states(&ys, scaled_model.delta).unwrap();
            prop_assert_eq!(&a.states, &b.states);
            prop_assert_eq!(detect(&y, &m).unwrap().decision, detect(&ys, &scaled_model).unwrap().decision);
        }
    }
}
