//! Second-stage triage: Wi-Fi by occupied bandwidth, Bluetooth by FSK
//! modulation features, everything else passes on as a controller candidate.
//!
//! The modulation path mirrors a zero-crossing FSK receiver: shift the
//! emission to baseband and decimate, differentiate the phase, locate where
//! modulation starts with a sliding Higuchi fractal dimension, then read the
//! deviation off the robust peak-to-peak excursion and the symbol duration
//! off the histogram of intervals between transitions of the binarized trace.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dsp;
use crate::error::{Error, Result};
use crate::signal::SampledSignal;

pub const WIFI_THRESHOLD_HZ: f64 = 20e6;
/// Fraction of power the occupied bandwidth must contain.
pub const OCCUPIED_POWER_FRACTION: f64 = 0.99;
/// Target post-decimation rate of the demodulation path.
pub const TARGET_BASEBAND_RATE_HZ: f64 = 10e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthClass {
    #[serde(rename = "wifi")]
    WiFi,
    Narrowband,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulationFeatures {
    pub occupied_bandwidth_hz: f64,
    pub freq_deviation_hz: Option<f64>,
    pub symbol_duration_s: Option<f64>,
    pub start_index: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictKind {
    #[serde(rename = "wifi")]
    WiFi,
    Bluetooth,
    UavCandidate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterferenceVerdict {
    pub kind: VerdictKind,
    pub features: ModulationFeatures,
}

/// How the Bluetooth decision is made once the bandwidth rule has passed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum BluetoothRule {
    /// Symbol duration inside `symbol_s +/- symbol_tol_s` and deviation
    /// strictly below `max_deviation_hz`.
    Region {
        symbol_s: f64,
        symbol_tol_s: f64,
        max_deviation_hz: f64,
    },
    /// Nearest centroid in (symbol microseconds, deviation in 100 kHz units).
    NearestCentroid {
        bluetooth: (f64, f64),
        controller: (f64, f64),
    },
}

impl Default for BluetoothRule {
    fn default() -> Self {
        BluetoothRule::Region {
            symbol_s: 0.5e-6,
            symbol_tol_s: 0.1e-6,
            max_deviation_hz: 350e3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HiguchiConfig {
    pub window: usize,
    pub hop: usize,
    pub k_max: usize,
    pub margin: f64,
    /// Consecutive qualifying windows needed to declare a start.
    pub min_run: usize,
    /// Fractal dimension assumed for noise when the trace offers no
    /// noise-like windows to measure it from.
    pub nominal_noise_fd: f64,
}

impl Default for HiguchiConfig {
    fn default() -> Self {
        Self {
            window: 256,
            hop: 64,
            k_max: 8,
            margin: 0.3,
            min_run: 3,
            nominal_noise_fd: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterferenceConfig {
    pub wifi_threshold_hz: f64,
    pub bluetooth: BluetoothRule,
    pub higuchi: HiguchiConfig,
    pub target_rate_hz: f64,
}

impl Default for InterferenceConfig {
    fn default() -> Self {
        Self {
            wifi_threshold_hz: WIFI_THRESHOLD_HZ,
            bluetooth: BluetoothRule::default(),
            higuchi: HiguchiConfig::default(),
            target_rate_hz: TARGET_BASEBAND_RATE_HZ,
        }
    }
}

/// Welch PSD with the noise floor removed. Returns `(bin_hz, excess power)`.
fn floor_removed_psd(x: &[f64], sample_rate_hz: f64) -> Result<(f64, Vec<f64>)> {
    if x.len() < 256 {
        return Err(Error::invalid(format!(
            "bandwidth analysis needs 256 samples, got {}",
            x.len()
        )));
    }
    let nfft = if x.len() >= 1024 { 1024 } else { 256 };
    let (df, psd, segments) = dsp::welch_psd(x, nfft, sample_rate_hz);
    let total: f64 = psd.iter().sum();
    if !(total > 0.0) {
        return Err(Error::invalid("signal has no spectral power"));
    }
    // Averaged periodogram bins of white noise are ~chi2(2K)/2K; the 10th
    // percentile sits 1.28/sqrt(K) below the mean.
    let spread = 1.0 / (segments as f64).sqrt();
    let floor = dsp::percentile(&psd, 0.10) / (1.0 - 1.2816 * spread).max(0.1);
    let cut = floor * (1.0 + 4.0 * spread);
    let excess: Vec<f64> = psd.iter().map(|p| (p - cut).max(0.0)).collect();
    if excess.iter().sum::<f64>() > 0.0 {
        Ok((df, excess))
    } else {
        Ok((df, psd))
    }
}

/// Smallest contiguous bin interval containing the peak bin and
/// [`OCCUPIED_POWER_FRACTION`] of the power. Returns inclusive bin indices.
fn occupied_interval(power: &[f64]) -> (usize, usize) {
    let n = power.len();
    let peak = (0..n)
        .max_by(|&a, &b| power[a].total_cmp(&power[b]))
        .unwrap_or(0);
    let mut prefix = vec![0.0; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] + power[i];
    }
    let need = OCCUPIED_POWER_FRACTION * prefix[n];
    let mut best = (0, n - 1);
    let mut hi = peak;
    // For each lo <= peak the minimal hi is non-increasing as lo decreases,
    // so sweep lo downward while pulling hi back.
    for lo in (0..=peak).rev() {
        while hi > peak && prefix[hi] - prefix[lo] >= need {
            hi -= 1;
        }
        while hi < n - 1 && prefix[hi + 1] - prefix[lo] < need {
            hi += 1;
        }
        if prefix[hi + 1] - prefix[lo] >= need && hi - lo < best.1 - best.0 {
            best = (lo, hi);
        }
    }
    best
}

/// 99%-power occupied bandwidth around the spectral peak.
pub fn occupied_bandwidth(signal: &SampledSignal) -> Result<f64> {
    occupied_bandwidth_of(signal.samples(), signal.sample_rate_hz())
}

pub fn occupied_bandwidth_of(x: &[f64], sample_rate_hz: f64) -> Result<f64> {
    if x.iter().all(|&v| v == 0.0) {
        return Err(Error::invalid("all-zero signal has no bandwidth"));
    }
    let (df, power) = floor_removed_psd(x, sample_rate_hz)?;
    let (lo, hi) = occupied_interval(&power);
    Ok((hi - lo + 1) as f64 * df)
}

/// Occupied interval `(low_hz, high_hz)` and its power-weighted centre.
fn occupied_band(x: &[f64], sample_rate_hz: f64) -> Result<(f64, f64, f64)> {
    let (df, power) = floor_removed_psd(x, sample_rate_hz)?;
    let (lo, hi) = occupied_interval(&power);
    let (mut w, mut m) = (0.0, 0.0);
    for (k, p) in power.iter().enumerate().take(hi + 1).skip(lo) {
        w += p;
        m += p * k as f64;
    }
    Ok(((lo as f64 - 0.5) * df, (hi as f64 + 0.5) * df, m / w * df))
}

pub fn classify_bandwidth(bandwidth_hz: f64, wifi_threshold_hz: f64) -> BandwidthClass {
    if bandwidth_hz >= wifi_threshold_hz {
        BandwidthClass::WiFi
    } else {
        BandwidthClass::Narrowband
    }
}

/// Complex baseband after shifting the emission centre to 0 Hz.
#[derive(Debug, Clone)]
pub struct Baseband {
    pub samples: Vec<Complex64>,
    pub sample_rate_hz: f64,
    pub shift_hz: f64,
    /// Occupied interval relative to the shifted centre.
    pub band_hz: (f64, f64),
}

/// Largest decimation up to `source_rate / target_rate` that still leaves
/// four times the occupied bandwidth.
pub fn choose_decimation(sample_rate_hz: f64, bandwidth_hz: f64, target_rate_hz: f64) -> usize {
    let max = (sample_rate_hz / target_rate_hz).round().max(1.0) as usize;
    (1..=max)
        .rev()
        .find(|&d| sample_rate_hz / d as f64 >= 4.0 * bandwidth_hz)
        .unwrap_or(1)
}

/// Analytic-signal shift of the emission centre to DC, ideal low-pass at the
/// new Nyquist frequency, and decimation by `decimation`.
pub fn baseband_shift_decimate(signal: &SampledSignal, decimation: usize) -> Result<Baseband> {
    if decimation == 0 {
        return Err(Error::invalid("decimation must be at least 1"));
    }
    let fs = signal.sample_rate_hz();
    let (low, high, center) = occupied_band(signal.samples(), fs)?;
    let bandwidth = high - low;
    let new_rate = fs / decimation as f64;
    if new_rate < 4.0 * bandwidth {
        return Err(Error::Aliasing {
            rate_hz: new_rate,
            bandwidth_hz: bandwidth,
        });
    }
    let n = signal.len() / decimation * decimation;
    let m = n / decimation;
    let spectrum = dsp::fft_real(&signal.samples()[..n]);
    let bin_hz = fs / n as f64;
    let shift_bin = (center / bin_hz).round() as isize;

    // Keep positive frequencies within +/- new_rate/2 of the centre (doubled
    // for the analytic signal) and fold them straight into an m-point grid.
    let half = (m / 2) as isize;
    let mut out = vec![Complex64::new(0.0, 0.0); m];
    for off in -half..half {
        let k = shift_bin + off;
        if k <= 0 || k as usize >= n.div_ceil(2) {
            continue;
        }
        let dst = off.rem_euclid(m as isize) as usize;
        out[dst] += spectrum[k as usize] * 2.0;
    }
    let mut samples = dsp::ifft(&out);
    let scale = 1.0 / n as f64;
    for s in &mut samples {
        *s *= scale;
    }
    Ok(Baseband {
        samples,
        sample_rate_hz: new_rate,
        shift_hz: shift_bin as f64 * bin_hz,
        band_hz: (
            low - shift_bin as f64 * bin_hz,
            high - shift_bin as f64 * bin_hz,
        ),
    })
}

/// Gaussian band-pass centred on the occupied interval of a baseband signal,
/// with a standard deviation of half the interval's width.
pub fn band_limit(baseband: &Baseband) -> Vec<Complex64> {
    let m = baseband.samples.len();
    let (lo, hi) = baseband.band_hz;
    let centre = 0.5 * (lo + hi);
    let sigma = 0.5 * (hi - lo);
    let mut spec = dsp::fft(&baseband.samples);
    let bin_hz = baseband.sample_rate_hz / m as f64;
    for (k, c) in spec.iter_mut().enumerate() {
        let f = if k > m / 2 {
            k as f64 - m as f64
        } else {
            k as f64
        } * bin_hz;
        let gain = if sigma > 0.0 {
            (-0.5 * ((f - centre) / sigma).powi(2)).exp()
        } else {
            0.0
        };
        *c *= gain / m as f64;
    }
    dsp::ifft(&spec)
}

/// Instantaneous frequency from the wrapped phase difference, in Hz.
pub fn fsk_demodulate(baseband: &[Complex64], sample_rate_hz: f64) -> Result<Vec<f64>> {
    if baseband.is_empty() {
        return Err(Error::invalid("empty baseband"));
    }
    let peak = baseband.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let dead = baseband.iter().filter(|z| z.norm() <= peak * 1e-12).count();
    let zero_fraction = dead as f64 / baseband.len() as f64;
    if peak == 0.0 || zero_fraction > 0.01 {
        return Err(Error::UnreliablePhase { zero_fraction });
    }
    Ok(baseband
        .windows(2)
        .map(|w| (w[1] * w[0].conj()).arg() * sample_rate_hz / (2.0 * PI))
        .collect())
}

/// Higuchi fractal dimension.
pub fn higuchi_fd(x: &[f64], k_max: usize) -> Result<f64> {
    if k_max < 2 {
        return Err(Error::invalid("k_max must be at least 2"));
    }
    if x.len() < 2 * k_max {
        return Err(Error::invalid(format!(
            "need {} samples for k_max {k_max}",
            2 * k_max
        )));
    }
    let n = x.len();
    let mut logs = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let mut lk = 0.0;
        for m in 0..k {
            let steps = (n - 1 - m) / k;
            if steps == 0 {
                continue;
            }
            let mut len = 0.0;
            for i in 1..=steps {
                len += (x[m + i * k] - x[m + (i - 1) * k]).abs();
            }
            lk += len * (n - 1) as f64 / (steps * k) as f64 / k as f64;
        }
        lk /= k as f64;
        if !(lk > 0.0) {
            return Err(Error::Numeric(
                "curve length vanished; fractal dimension undefined".into(),
            ));
        }
        logs.push(((1.0 / k as f64).ln(), lk.ln()));
    }
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k_max as f64;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k_max as f64;
    let sxy: f64 = logs.iter().map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = logs.iter().map(|(a, _)| (a - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Fractal dimension of each sliding window, paired with its leading index.
pub fn windowed_fd(trace: &[f64], cfg: &HiguchiConfig) -> Result<Vec<(usize, f64)>> {
    if cfg.window < 2 * cfg.k_max || cfg.hop == 0 {
        return Err(Error::invalid(
            "window must hold 2*k_max samples and hop must be positive",
        ));
    }
    if trace.len() < 4 * cfg.window {
        return Err(Error::invalid(format!(
            "trace of {} samples is shorter than 4 windows of {}",
            trace.len(),
            cfg.window
        )));
    }
    let mut out = Vec::new();
    let mut start = 0;
    while start + cfg.window <= trace.len() {
        // A perfectly flat window is as structured as a trace can be.
        let fd = higuchi_fd(&trace[start..start + cfg.window], cfg.k_max).unwrap_or(1.0);
        out.push((start, fd));
        start += cfg.hop;
    }
    Ok(out)
}

fn fd_threshold(fds: &[(usize, f64)], cfg: &HiguchiConfig) -> f64 {
    let values: Vec<f64> = fds.iter().map(|p| p.1).collect();
    let reference = dsp::median(&values).max(cfg.nominal_noise_fd);
    reference - cfg.margin
}

/// Median windowed fractal dimension of white noise pushed through the same
/// band limit and demodulator as `baseband`.
pub fn noise_reference_fd(baseband: &Baseband, cfg: &HiguchiConfig) -> Result<f64> {
    let mut r = crate::signal::rng(0x5eed_f00d);
    let noise: Vec<Complex64> = (0..baseband.samples.len())
        .map(|_| Complex64::new(r.sample(StandardNormal), r.sample(StandardNormal)))
        .collect();
    let surrogate = Baseband {
        samples: noise,
        ..baseband.clone()
    };
    let trace = fsk_demodulate(&band_limit(&surrogate), surrogate.sample_rate_hz)?;
    let fds: Vec<f64> = windowed_fd(&trace, cfg)?.into_iter().map(|p| p.1).collect();
    Ok(dsp::median(&fds))
}

/// Leading index of the first run of windows whose fractal dimension falls
/// below the noise reference minus the margin.
pub fn detect_start_point(trace: &[f64], cfg: &HiguchiConfig) -> Result<usize> {
    let fds = windowed_fd(trace, cfg)?;
    let threshold = fd_threshold(&fds, cfg);
    let run = cfg.min_run.max(1);
    (0..fds.len())
        .find(|&i| i + run <= fds.len() && fds[i..i + run].iter().all(|p| p.1 < threshold))
        .map(|i| fds[i].0)
        .ok_or(Error::NoSignalFound)
}

/// `[start, end)` of the modulated region: the start rule applied forwards
/// and to the time-reversed trace.
pub fn detect_active_span(trace: &[f64], cfg: &HiguchiConfig) -> Result<(usize, usize)> {
    let start = detect_start_point(trace, cfg)?;
    let reversed: Vec<f64> = trace.iter().rev().copied().collect();
    let end = trace.len() - detect_start_point(&reversed, cfg)?;
    if end <= start {
        return Err(Error::NoSignalFound);
    }
    Ok((start, end))
}

fn post_start(trace: &[f64], start: usize, min_len: usize) -> Result<&[f64]> {
    if start >= trace.len() || trace.len() - start < min_len {
        return Err(Error::invalid(format!(
            "need {min_len} samples after index {start}, trace has {}",
            trace.len()
        )));
    }
    Ok(&trace[start..])
}

/// Half-width of the binarizer's dead band as a fraction of the level spread.
pub const SYMBOL_HYSTERESIS: f64 = 0.1;

/// Transition indices of a trace binarized about the midpoint of its 5th and
/// 95th percentiles, with a dead band of [`SYMBOL_HYSTERESIS`] of their gap.
fn binarize_edges(x: &[f64]) -> Vec<usize> {
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let lo = dsp::percentile_sorted(&sorted, 0.05);
    let hi = dsp::percentile_sorted(&sorted, 0.95);
    let mid = 0.5 * (lo + hi);
    let band = SYMBOL_HYSTERESIS * (hi - lo);
    let mut level = x[0] > mid;
    let mut edges = Vec::new();
    for (i, &v) in x.iter().enumerate().skip(1) {
        let flip = if level {
            v < mid - band
        } else {
            v > mid + band
        };
        if flip {
            level = !level;
            edges.push(i);
        }
    }
    edges
}

/// Half the robust (0.5th to 99.5th percentile) peak-to-peak excursion.
pub fn estimate_freq_deviation(trace: &[f64], start: usize) -> Result<f64> {
    let x = post_start(trace, start, 100)?;
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    Ok((dsp::percentile_sorted(&v, 0.995) - dsp::percentile_sorted(&v, 0.005)) / 2.0)
}

/// Fraction of the tallest interval bin a shorter peak needs to count as the symbol.
pub const SYMBOL_PEAK_SHARE: f64 = 0.3;

/// Cap on whole-span refinements applied after the histogram estimate.
pub const SYMBOL_REFINE_PASSES: usize = 20;

/// Mean distance of interval/symbol ratios from the nearest whole number
/// above which the histogram estimate is tested at its submultiples.
pub const SYMBOL_GRID_TOL: f64 = 0.15;

/// Largest submultiple of the histogram estimate tried.
pub const SYMBOL_MAX_SUBDIVISION: usize = 3;

// High and low runs alternate, so edge shifts cancel over the whole span
// once every interval is read as a whole number of symbols.
fn refine_on_span(intervals: &[usize], span: f64, mut samples: f64) -> f64 {
    for _ in 0..SYMBOL_REFINE_PASSES {
        let n: f64 = intervals
            .iter()
            .map(|&iv| (iv as f64 / samples).round())
            .sum();
        if n < 1.0 || span / n == samples {
            break;
        }
        samples = span / n;
    }
    samples
}

fn grid_misfit(intervals: &[usize], samples: f64) -> f64 {
    let total: f64 = intervals
        .iter()
        .map(|&iv| {
            let r = iv as f64 / samples;
            (r - r.round()).abs()
        })
        .sum();
    total / intervals.len() as f64
}

/// Mode of the inter-transition interval histogram (2-sample bins), refined
/// to the mean of the intervals within one bin width of the mode centre and
/// then to the edge span over its symbol count. The mode is the shortest
/// local peak whose three-bin neighbourhood reaches [`SYMBOL_PEAK_SHARE`] of
/// the tallest bin, so runs of
/// several symbols never outvote single ones. When no single-symbol runs
/// survive, a submultiple that puts every interval on a whole-symbol grid
/// replaces the mode.
pub fn estimate_symbol_duration(trace: &[f64], start: usize, sample_rate_hz: f64) -> Result<f64> {
    let x = post_start(trace, start, 2)?;
    let edges = binarize_edges(x);
    if edges.len() < 2 {
        return Err(Error::NoTransitions);
    }
    let intervals: Vec<usize> = edges.windows(2).map(|w| w[1] - w[0]).collect();
    let bin_of = |iv: usize| iv.div_ceil(2);
    let max_bin = intervals.iter().map(|&iv| bin_of(iv)).max().unwrap_or(0);
    let mut hist = vec![0usize; max_bin + 1];
    for &iv in &intervals {
        hist[bin_of(iv)] += 1;
    }
    // Shortest local peak whose neighbourhood holds a fair share of the
    // tallest bin, so a peak split across two bins still counts.
    let top = *hist.iter().max().unwrap_or(&0);
    let floor = (top as f64 * SYMBOL_PEAK_SHARE).ceil() as usize;
    let mode = (1..hist.len())
        .find(|&b| {
            let next = hist.get(b + 1).copied().unwrap_or(0);
            hist[b - 1] + hist[b] + next >= floor.max(1)
                && hist[b] >= hist[b - 1]
                && hist.get(b + 1).is_none_or(|&n| hist[b] >= n)
        })
        .unwrap_or(0);
    let center = 2 * mode;
    let near: Vec<usize> = intervals
        .iter()
        .copied()
        .filter(|&iv| iv + 2 >= center && iv <= center + 2)
        .collect();
    let samples = near.iter().sum::<usize>() as f64 / near.len() as f64;
    let span = (edges[edges.len() - 1] - edges[0]) as f64;
    let refined = refine_on_span(&intervals, span, samples);
    // A missing single-symbol peak leaves intervals off the mode's grid.
    let samples = if grid_misfit(&intervals, refined) > SYMBOL_GRID_TOL {
        (2..=SYMBOL_MAX_SUBDIVISION)
            .map(|m| refine_on_span(&intervals, span, samples / m as f64))
            .find(|&s| s >= 2.0 && grid_misfit(&intervals, s) <= SYMBOL_GRID_TOL)
            .unwrap_or(refined)
    } else {
        refined
    };
    Ok(samples / sample_rate_hz)
}

pub fn classify_interference(
    features: &ModulationFeatures,
    cfg: &InterferenceConfig,
) -> InterferenceVerdict {
    let kind = if classify_bandwidth(features.occupied_bandwidth_hz, cfg.wifi_threshold_hz)
        == BandwidthClass::WiFi
    {
        VerdictKind::WiFi
    } else {
        match (features.symbol_duration_s, features.freq_deviation_hz) {
            (Some(sym), Some(dev)) if is_bluetooth(sym, dev, &cfg.bluetooth) => {
                VerdictKind::Bluetooth
            }
            _ => VerdictKind::UavCandidate,
        }
    };
    InterferenceVerdict {
        kind,
        features: *features,
    }
}

fn is_bluetooth(symbol_s: f64, deviation_hz: f64, rule: &BluetoothRule) -> bool {
    match *rule {
        BluetoothRule::Region {
            symbol_s: target,
            symbol_tol_s,
            max_deviation_hz,
        } => (symbol_s - target).abs() <= symbol_tol_s && deviation_hz < max_deviation_hz,
        BluetoothRule::NearestCentroid {
            bluetooth,
            controller,
        } => {
            let p = (symbol_s * 1e6, deviation_hz / 1e5);
            let d = |c: (f64, f64)| (p.0 - c.0).powi(2) + (p.1 - c.1).powi(2);
            d(bluetooth) <= d(controller)
        }
    }
}

/// Bandwidth, and for narrowband emissions the demodulated FSK features.
pub fn extract_modulation_features(
    signal: &SampledSignal,
    cfg: &InterferenceConfig,
) -> Result<ModulationFeatures> {
    let bw = occupied_bandwidth(signal)?;
    let mut features = ModulationFeatures {
        occupied_bandwidth_hz: bw,
        freq_deviation_hz: None,
        symbol_duration_s: None,
        start_index: None,
    };
    if classify_bandwidth(bw, cfg.wifi_threshold_hz) == BandwidthClass::WiFi {
        return Ok(features);
    }
    let decimation = choose_decimation(signal.sample_rate_hz(), bw, cfg.target_rate_hz);
    let bb = baseband_shift_decimate(signal, decimation)?;
    let narrow = fsk_demodulate(&band_limit(&bb), bb.sample_rate_hz)?;
    let higuchi = HiguchiConfig {
        nominal_noise_fd: noise_reference_fd(&bb, &cfg.higuchi)?,
        ..cfg.higuchi
    };
    // Without a modulation start the emission cannot be confirmed as
    // Bluetooth and passes on with empty FSK features.
    let (start, end) = match detect_active_span(&narrow, &higuchi) {
        Ok(span) => span,
        Err(Error::NoSignalFound) => return Ok(features),
        Err(e) => return Err(e),
    };
    // The edge windows straddle the onset and the release; keep the interior.
    let w = higuchi.window;
    let (from, to) = if end - start >= 4 * w {
        (start + w, end - w)
    } else {
        (start, end)
    };
    features.start_index = Some(start * decimation);
    features.freq_deviation_hz = Some(estimate_freq_deviation(&narrow[..to], from)?);
    let rate = bb.sample_rate_hz;
    features.symbol_duration_s = match estimate_symbol_duration(&narrow[..to], from, rate) {
        Err(Error::NoTransitions) if from != start => {
            estimate_symbol_duration(&narrow[..end], start, rate)
        }
        other => other,
    }
    .map(Some)
    .or_else(|e| {
        if matches!(e, Error::NoTransitions) {
            Ok(None)
        } else {
            Err(e)
        }
    })?;
    Ok(features)
}

pub fn triage(signal: &SampledSignal, cfg: &InterferenceConfig) -> Result<InterferenceVerdict> {
    let features = extract_modulation_features(signal, cfg)?;
    Ok(classify_interference(&features, cfg))
}
