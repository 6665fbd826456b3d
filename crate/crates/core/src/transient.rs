//! Energy-time-frequency fingerprints.
//!
//! The preprocessed trace is turned into a spectrogram, collapsed to a
//! per-frame peak energy (the energy trajectory), and the transient is the
//! stretch starting at the most abrupt change of that trajectory. Fifteen
//! summary statistics of the transient form the fingerprint.

use std::io::Write;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dsp;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpectrogramConfig {
    pub segment_length: usize,
    pub overlap: usize,
    pub dft_points: usize,
}

impl Default for SpectrogramConfig {
    fn default() -> Self {
        Self {
            segment_length: 128,
            overlap: 120,
            dft_points: 256,
        }
    }
}

impl SpectrogramConfig {
    pub fn hop(&self) -> usize {
        self.segment_length - self.overlap
    }

    pub fn validate(&self) -> Result<()> {
        if self.segment_length == 0 || self.overlap >= self.segment_length {
            return Err(Error::invalid("overlap must be shorter than the segment"));
        }
        if self.dft_points < self.segment_length {
            return Err(Error::invalid("dft_points must cover the segment"));
        }
        Ok(())
    }
}

/// Power spectrogram, frames by one-sided bins, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub frames: usize,
    pub bins: usize,
    pub hop: usize,
    pub energy: Vec<f64>,
}

impl Spectrogram {
    pub fn frame(&self, i: usize) -> &[f64] {
        &self.energy[i * self.bins..(i + 1) * self.bins]
    }
}

pub fn spectrogram(y_t: &[f64], cfg: &SpectrogramConfig) -> Result<Spectrogram> {
    cfg.validate()?;
    if y_t.len() < cfg.segment_length {
        return Err(Error::invalid(format!(
            "spectrogram needs {} samples, got {}",
            cfg.segment_length,
            y_t.len()
        )));
    }
    let hop = cfg.hop();
    let frames = (y_t.len() - cfg.segment_length) / hop + 1;
    let bins = cfg.dft_points / 2 + 1;
    let win = dsp::hamming(cfg.segment_length);
    let plan = FftPlanner::new().plan_fft_forward(cfg.dft_points);
    let mut buf = vec![Complex64::new(0.0, 0.0); cfg.dft_points];
    let mut energy = Vec::with_capacity(frames * bins);
    for f in 0..frames {
        let seg = &y_t[f * hop..f * hop + cfg.segment_length];
        buf.fill(Complex64::new(0.0, 0.0));
        for (b, (&v, &w)) in buf.iter_mut().zip(seg.iter().zip(&win)) {
            b.re = v * w;
        }
        plan.process(&mut buf);
        energy.extend(buf[..bins].iter().map(|c| c.norm_sqr()));
    }
    Ok(Spectrogram {
        frames,
        bins,
        hop,
        energy,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyTrajectory {
    pub values: Vec<f64>,
    pub frame_hop_s: f64,
}

/// Per-frame maximum energy, normalized to a peak of one. `sample_rate_hz`
/// is the rate of the trace the spectrogram was computed from.
pub fn energy_trajectory(spec: &Spectrogram, sample_rate_hz: f64) -> Result<EnergyTrajectory> {
    if spec.frames == 0 || spec.bins == 0 {
        return Err(Error::invalid("empty spectrogram"));
    }
    let mut values: Vec<f64> = (0..spec.frames)
        .map(|i| spec.frame(i).iter().copied().fold(0.0, f64::max))
        .collect();
    let peak = values.iter().copied().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(Error::invalid("all-zero spectrogram cannot be normalized"));
    }
    for v in &mut values {
        *v /= peak;
    }
    Ok(EnergyTrajectory {
        values,
        frame_hop_s: spec.hop as f64 / sample_rate_hz,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChangeKind {
    /// Most abrupt rise of a two-segment constant-mean model.
    Mean,
    /// Most abrupt change of a two-segment constant-variance Gaussian model.
    Variance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyMode {
    UnitSum,
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureScope {
    Transient,
    FullTrajectory,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransientConfig {
    pub spectrogram: SpectrogramConfig,
    pub change: ChangeKind,
    pub entropy: EntropyMode,
    pub scope: FeatureScope,
    /// Fraction of the peak below which the transient has ended.
    pub end_fraction: f64,
}

impl Default for TransientConfig {
    fn default() -> Self {
        Self {
            spectrogram: SpectrogramConfig::default(),
            change: ChangeKind::Mean,
            entropy: EntropyMode::UnitSum,
            scope: FeatureScope::Transient,
            end_fraction: 0.1,
        }
    }
}

pub const MIN_TRAJECTORY_FRAMES: usize = 8;

/// Split index `s` (first frame of the right segment) of the largest
/// upward mean shift, by the reduction in summed squared deviation.
pub fn mean_change_point(x: &[f64]) -> Option<usize> {
    let n = x.len();
    let total: f64 = x.iter().sum();
    let sse_whole = x.iter().map(|v| v * v).sum::<f64>() - total * total / n as f64;
    let tol = 1e-12 * (1.0 + sse_whole.abs());
    let mut best: Option<(usize, f64)> = None;
    let mut left = 0.0;
    for s in 1..n {
        left += x[s - 1];
        let (nl, nr) = (s as f64, (n - s) as f64);
        let right = total - left;
        if right / nr <= left / nl {
            continue;
        }
        // SSE(whole) - SSE(left) - SSE(right)
        let gain = left * left / nl + right * right / nr - total * total / n as f64;
        if gain > tol && best.is_none_or(|(_, g)| gain > g) {
            best = Some((s, gain));
        }
    }
    best.map(|b| b.0)
}

/// Split index maximizing the Gaussian log-likelihood gain of separate
/// variances on either side. Each side keeps at least two frames.
pub fn variance_change_point(x: &[f64]) -> Option<usize> {
    let n = x.len();
    if n < 4 {
        return None;
    }
    let cost = |seg: &[f64]| {
        let m = seg.iter().sum::<f64>() / seg.len() as f64;
        let v = seg.iter().map(|a| (a - m).powi(2)).sum::<f64>() / seg.len() as f64;
        seg.len() as f64 * v.max(1e-12).ln()
    };
    let whole = cost(x);
    let mut best: Option<(usize, f64)> = None;
    for s in 2..=n - 2 {
        let gain = whole - cost(&x[..s]) - cost(&x[s..]);
        if gain > 1e-9 && best.is_none_or(|(_, g)| gain > g) {
            best = Some((s, gain));
        }
    }
    best.map(|b| b.0)
}

/// `(start, end)` frames of the energy transient, both inclusive.
pub fn detect_energy_transient(
    traj: &EnergyTrajectory,
    change: ChangeKind,
    end_fraction: f64,
) -> Result<(usize, usize)> {
    let x = &traj.values;
    if x.len() < MIN_TRAJECTORY_FRAMES {
        return Err(Error::invalid(format!(
            "trajectory needs {MIN_TRAJECTORY_FRAMES} frames, got {}",
            x.len()
        )));
    }
    let start = match change {
        ChangeKind::Mean => mean_change_point(x),
        ChangeKind::Variance => variance_change_point(x),
    }
    .ok_or_else(|| Error::NoTransient("trajectory has no change point".into()))?;
    let level = end_fraction * x.iter().copied().fold(f64::MIN, f64::max);
    let end = (start..x.len())
        .rev()
        .find(|&i| x[i] >= level)
        .ok_or_else(|| {
            Error::NoTransient("nothing above the end level after the change point".into())
        })?;
    if end <= start {
        return Err(Error::NoTransient(format!(
            "transient at frame {start} has no extent"
        )));
    }
    Ok((start, end))
}

pub const FEATURE_NAMES: [&str; 15] = [
    "mean",
    "absolute_mean",
    "std_dev",
    "skewness",
    "entropy",
    "rms",
    "root",
    "kurtosis",
    "variance",
    "peak_value",
    "peak_to_peak",
    "shape_factor",
    "crest_factor",
    "impulse_factor",
    "clearance_factor",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FingerprintVector {
    pub mean: f64,
    pub absolute_mean: f64,
    pub std_dev: f64,
    pub skewness: f64,
    pub entropy: f64,
    pub rms: f64,
    pub root: f64,
    pub kurtosis: f64,
    pub variance: f64,
    pub peak_value: f64,
    pub peak_to_peak: f64,
    pub shape_factor: f64,
    pub crest_factor: f64,
    pub impulse_factor: f64,
    pub clearance_factor: f64,
}

impl FingerprintVector {
    pub fn to_array(&self) -> [f64; 15] {
        [
            self.mean,
            self.absolute_mean,
            self.std_dev,
            self.skewness,
            self.entropy,
            self.rms,
            self.root,
            self.kurtosis,
            self.variance,
            self.peak_value,
            self.peak_to_peak,
            self.shape_factor,
            self.crest_factor,
            self.impulse_factor,
            self.clearance_factor,
        ]
    }
}

pub const MIN_SEGMENT_LEN: usize = 3;

fn entropy_bits(x: &[f64], mode: EntropyMode) -> f64 {
    let h = |q: f64| if q > 0.0 { -q * q.log2() } else { 0.0 };
    match mode {
        EntropyMode::Raw => x.iter().map(|&v| h(v)).sum(),
        EntropyMode::UnitSum => {
            let total: f64 = x.iter().map(|v| v.abs()).sum();
            x.iter().map(|&v| h(v.abs() / total)).sum()
        }
    }
}

/// The fifteen statistics of a segment.
pub fn extract_fingerprints(segment: &[f64], entropy: EntropyMode) -> Result<FingerprintVector> {
    let n = segment.len();
    if n < MIN_SEGMENT_LEN {
        return Err(Error::DegenerateSegment(format!(
            "{n} values, need {MIN_SEGMENT_LEN}"
        )));
    }
    if segment.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateSegment("non-finite value".into()));
    }
    let nf = n as f64;
    let mean = segment.iter().sum::<f64>() / nf;
    let absolute_mean = segment.iter().map(|v| v.abs()).sum::<f64>() / nf;
    let central = |p: i32| {
        segment
            .iter()
            .map(|v| (v - absolute_mean).powi(p))
            .sum::<f64>()
    };
    let std_dev = (central(2) / (nf - 1.0)).sqrt();
    if !(std_dev > 1e-12 * absolute_mean) || absolute_mean == 0.0 {
        return Err(Error::DegenerateSegment("segment is constant".into()));
    }
    let skewness = central(3) / ((nf - 1.0) * std_dev.powi(3));
    let kurtosis = central(4) / ((nf - 1.0) * std_dev.powi(4));
    let rms = (segment.iter().map(|v| v * v).sum::<f64>() / nf).sqrt();
    let root = (segment.iter().map(|v| v.abs().sqrt()).sum::<f64>() / nf).powi(2);
    let variance = segment.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / nf;
    let peak_value = segment.iter().copied().fold(f64::MIN, f64::max);
    let min = segment.iter().copied().fold(f64::MAX, f64::min);
    Ok(FingerprintVector {
        mean,
        absolute_mean,
        std_dev,
        skewness,
        entropy: entropy_bits(segment, entropy),
        rms,
        root,
        kurtosis,
        variance,
        peak_value,
        peak_to_peak: peak_value - min,
        shape_factor: rms / absolute_mean,
        crest_factor: peak_value / rms,
        impulse_factor: peak_value / absolute_mean,
        clearance_factor: peak_value / root,
    })
}

/// Everything the fingerprint stage learns about one capture.
#[derive(Debug, Clone, PartialEq)]
pub struct TransientAnalysis {
    pub trajectory: EnergyTrajectory,
    pub start_frame: usize,
    pub end_frame: usize,
    pub fingerprint: FingerprintVector,
}

/// Spectrogram, trajectory, transient and fingerprint of a preprocessed trace.
pub fn analyze(
    y_t: &[f64],
    sample_rate_hz: f64,
    cfg: &TransientConfig,
) -> Result<TransientAnalysis> {
    let spec = spectrogram(y_t, &cfg.spectrogram)?;
    let trajectory = energy_trajectory(&spec, sample_rate_hz)?;
    let (start_frame, end_frame) =
        detect_energy_transient(&trajectory, cfg.change, cfg.end_fraction)?;
    let segment = match cfg.scope {
        FeatureScope::Transient => &trajectory.values[start_frame..=end_frame],
        FeatureScope::FullTrajectory => &trajectory.values[..],
    };
    let fingerprint = extract_fingerprints(segment, cfg.entropy)?;
    Ok(TransientAnalysis {
        trajectory,
        start_frame,
        end_frame,
        fingerprint,
    })
}

/// One row of the exported feature table.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub label: String,
    pub controller_id: Option<u32>,
    pub snr_db: Option<f64>,
    pub features: [f64; 15],
}

pub fn write_feature_csv<W: Write>(mut out: W, rows: &[FeatureRow]) -> std::io::Result<()> {
    writeln!(
        out,
        "label,controller_id,snr_db,{}",
        FEATURE_NAMES.join(",")
    )?;
    for r in rows {
        let id = r.controller_id.map(|v| v.to_string()).unwrap_or_default();
        let snr = r.snr_db.map(|v| v.to_string()).unwrap_or_default();
        let feats: Vec<String> = r.features.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{},{id},{snr},{}", r.label, feats.join(","))?;
    }
    Ok(())
}
