//! Sample-domain types and synthetic emitters.
//!
//! Every generator here is a pure function of its spec and seed. Captures are
//! real-valued traces at a fixed sample rate; FSK emitters sit around an
//! intermediate frequency of `0.2 * sample_rate`, which lands inside the
//! passband of the level-2 Haar detail band used by the detector.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dsp;
use crate::error::{Error, Result};

/// Default simulation sample rate (100 MSa/s).
pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 100e6;
/// Default capture window (0.25 ms).
pub const DEFAULT_CAPTURE_S: f64 = 0.25e-3;

/// Intermediate frequency that FSK carrier offsets are measured from.
pub fn band_center_hz(sample_rate_hz: f64) -> f64 {
    0.2 * sample_rate_hz
}

/// Centre of the band that wideband (Wi-Fi-like) bursts occupy.
pub fn wideband_center_hz(sample_rate_hz: f64) -> f64 {
    0.25 * sample_rate_hz
}

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Who produced a capture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SignalClass {
    Noise,
    #[serde(rename = "wifi")]
    WiFi,
    Bluetooth {
        device_id: u32,
    },
    UavController {
        controller_id: u32,
    },
}

impl SignalClass {
    pub fn name(&self) -> &'static str {
        match self {
            SignalClass::Noise => "noise",
            SignalClass::WiFi => "wifi",
            SignalClass::Bluetooth { .. } => "bluetooth",
            SignalClass::UavController { .. } => "uav",
        }
    }

    pub fn controller_id(&self) -> Option<u32> {
        match self {
            SignalClass::UavController { controller_id } => Some(*controller_id),
            _ => None,
        }
    }

    pub fn is_emission(&self) -> bool {
        !matches!(self, SignalClass::Noise)
    }
}

/// A uniformly sampled real amplitude trace plus acquisition metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    samples: Vec<f64>,
    sample_rate_hz: f64,
    pub label: SignalClass,
    pub seed: u64,
    pub snr_db: Option<f64>,
}

impl SampledSignal {
    pub fn new(
        samples: Vec<f64>,
        sample_rate_hz: f64,
        label: SignalClass,
        seed: u64,
    ) -> Result<Self> {
        if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
            return Err(Error::invalid(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        if samples.len() < 2 {
            return Err(Error::invalid(format!(
                "a signal needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("sample {i} is not finite")));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
            label,
            seed,
            snr_db: None,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }

    /// Inclusive index range between the first and last nonzero sample.
    pub fn burst_support(&self) -> Option<(usize, usize)> {
        let first = self.samples.iter().position(|&x| x != 0.0)?;
        let last = self.samples.iter().rposition(|&x| x != 0.0)?;
        Some((first, last))
    }

    /// Mean squared amplitude over [`Self::burst_support`].
    pub fn burst_power(&self) -> f64 {
        match self.burst_support() {
            Some((a, b)) => mean_square(&self.samples[a..=b]),
            None => 0.0,
        }
    }

    pub fn scaled(mut self, gain: f64) -> Self {
        for x in &mut self.samples {
            *x *= gain;
        }
        self
    }

    /// Places this burst into a zero-filled window of `window_len` samples,
    /// starting at `onset`. Samples running past the window are dropped.
    pub fn placed_in_window(&self, window_len: usize, onset: usize) -> Result<Self> {
        if window_len < 2 {
            return Err(Error::invalid("window must hold at least 2 samples"));
        }
        if onset >= window_len {
            return Err(Error::invalid(format!(
                "onset {onset} lies outside a window of {window_len}"
            )));
        }
        let mut out = vec![0.0; window_len];
        let take = self.samples.len().min(window_len - onset);
        out[onset..onset + take].copy_from_slice(&self.samples[..take]);
        Ok(Self {
            samples: out,
            sample_rate_hz: self.sample_rate_hz,
            label: self.label,
            seed: self.seed,
            snr_db: self.snr_db,
        })
    }
}

pub(crate) fn mean_square(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

/// Continuous-phase (G)FSK emitter description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FskEmitterSpec {
    /// Peak amplitude, the `sqrt(2 Eb / Tb)` factor.
    pub amplitude: f64,
    /// Carrier offset from [`band_center_hz`].
    pub carrier_offset_hz: f64,
    pub freq_deviation_hz: f64,
    pub symbol_duration_s: f64,
    pub burst_duration_s: f64,
    /// Bandwidth-time product of the Gaussian frequency-pulse filter.
    pub gaussian_bt: f64,
    pub phase_offset_rad: f64,
    /// Raised-cosine ramp time applied at both ends of the burst.
    pub envelope_attack_s: f64,
}

impl FskEmitterSpec {
    pub fn carrier_hz(&self, sample_rate_hz: f64) -> f64 {
        band_center_hz(sample_rate_hz) + self.carrier_offset_hz
    }

    pub fn validate(&self, sample_rate_hz: f64) -> Result<()> {
        let positive = [
            ("amplitude", self.amplitude),
            ("freq_deviation_hz", self.freq_deviation_hz),
            ("symbol_duration_s", self.symbol_duration_s),
            ("burst_duration_s", self.burst_duration_s),
            ("envelope_attack_s", self.envelope_attack_s),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if !(self.gaussian_bt > 0.0 && self.gaussian_bt <= 1.0) {
            return Err(Error::invalid(format!(
                "gaussian_bt must lie in (0, 1], got {}",
                self.gaussian_bt
            )));
        }
        if !(sample_rate_hz > 0.0) {
            return Err(Error::invalid("sample rate must be positive"));
        }
        if self.freq_deviation_hz >= sample_rate_hz / 4.0 {
            return Err(Error::invalid(format!(
                "deviation {} Hz is not representable at {} Sa/s",
                self.freq_deviation_hz, sample_rate_hz
            )));
        }
        if self.symbol_duration_s * sample_rate_hz < 8.0 {
            return Err(Error::invalid(format!(
                "symbol duration {} s spans fewer than 8 samples at {} Sa/s",
                self.symbol_duration_s, sample_rate_hz
            )));
        }
        let fc = self.carrier_hz(sample_rate_hz);
        if fc - self.freq_deviation_hz <= 0.0 || fc + self.freq_deviation_hz >= sample_rate_hz / 2.0
        {
            return Err(Error::invalid(format!(
                "carrier {fc} Hz +/- deviation leaves the Nyquist band"
            )));
        }
        if (self.burst_duration_s * sample_rate_hz).round() < 2.0 {
            return Err(Error::invalid("burst shorter than two samples"));
        }
        Ok(())
    }
}

/// Band-limited noise burst standing in for an OFDM/DSSS emitter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WidebandEmitterSpec {
    pub occupied_bandwidth_hz: f64,
    pub burst_duration_s: f64,
    /// RMS amplitude of the burst.
    pub amplitude: f64,
}

impl WidebandEmitterSpec {
    pub fn validate(&self, sample_rate_hz: f64) -> Result<()> {
        if !(self.occupied_bandwidth_hz > 0.0) {
            return Err(Error::invalid("occupied bandwidth must be positive"));
        }
        if self.occupied_bandwidth_hz >= sample_rate_hz / 2.0 {
            return Err(Error::invalid(format!(
                "bandwidth {} Hz reaches Nyquist {} Hz",
                self.occupied_bandwidth_hz,
                sample_rate_hz / 2.0
            )));
        }
        if !(self.amplitude > 0.0) || !(self.burst_duration_s > 0.0) {
            return Err(Error::invalid(
                "amplitude and burst duration must be positive",
            ));
        }
        if (self.burst_duration_s * sample_rate_hz).round() < 2.0 {
            return Err(Error::invalid("burst shorter than two samples"));
        }
        Ok(())
    }
}

/// Zero-mean white Gaussian noise.
pub fn generate_noise(n_samples: usize, sigma: f64, seed: u64) -> Result<SampledSignal> {
    if n_samples < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 samples, got {n_samples}"
        )));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    let mut r = rng(seed);
    let samples = (0..n_samples)
        .map(|_| sigma * r.sample::<f64, _>(StandardNormal))
        .collect();
    SampledSignal::new(samples, DEFAULT_SAMPLE_RATE_HZ, SignalClass::Noise, seed)
}

/// Draws the random ±1 data bits used by [`generate_fsk_burst`].
pub fn random_bits(n: usize, seed: u64) -> Vec<i8> {
    let mut r = rng(seed);
    (0..n)
        .map(|_| if r.random::<bool>() { 1 } else { -1 })
        .collect()
}

pub fn symbols_in_burst(spec: &FskEmitterSpec, sample_rate_hz: f64) -> usize {
    let n = (spec.burst_duration_s * sample_rate_hz).round() as usize;
    let sps = spec.symbol_duration_s * sample_rate_hz;
    (n as f64 / sps).ceil() as usize + 1
}

/// FSK burst driven by random bits derived from `seed`.
pub fn generate_fsk_burst(
    spec: &FskEmitterSpec,
    sample_rate_hz: f64,
    seed: u64,
) -> Result<SampledSignal> {
    spec.validate(sample_rate_hz)?;
    let bits = random_bits(symbols_in_burst(spec, sample_rate_hz), seed);
    let mut s = generate_fsk_burst_with_bits(spec, sample_rate_hz, &bits)?;
    s.seed = seed;
    Ok(s)
}

/// Normalized (unit-peak) frequency pulse train: Gaussian-smoothed NRZ bits,
/// one value per output sample.
pub fn frequency_pulse(
    spec: &FskEmitterSpec,
    sample_rate_hz: f64,
    bits: &[i8],
    n: usize,
) -> Vec<f64> {
    let sps = spec.symbol_duration_s * sample_rate_hz;
    let nrz: Vec<f64> = (0..n)
        .map(|i| {
            let k = ((i as f64 / sps) as usize).min(bits.len() - 1);
            f64::from(bits[k])
        })
        .collect();

    let sigma_samples = (2f64.ln()).sqrt() / (2.0 * PI * spec.gaussian_bt) * sps;
    let half = (3.0 * sigma_samples).ceil() as isize;
    let kernel: Vec<f64> = (-half..=half)
        .map(|k| (-(k as f64).powi(2) / (2.0 * sigma_samples * sigma_samples)).exp())
        .collect();
    let norm: f64 = kernel.iter().sum();

    // Edge-extended NRZ convolved with the kernel through the FFT.
    let h = half as usize;
    let ext_len = n + 2 * h;
    let size = (ext_len + kernel.len() - 1).next_power_of_two();
    let mut a = vec![Complex64::new(0.0, 0.0); size];
    for (i, slot) in a.iter_mut().take(ext_len).enumerate() {
        *slot = Complex64::new(nrz[i.saturating_sub(h).min(n - 1)], 0.0);
    }
    let mut b = vec![Complex64::new(0.0, 0.0); size];
    for (slot, &w) in b.iter_mut().zip(&kernel) {
        *slot = Complex64::new(w, 0.0);
    }
    let fa = dsp::fft(&a);
    let fb = dsp::fft(&b);
    let prod: Vec<Complex64> = fa.iter().zip(&fb).map(|(x, y)| x * y).collect();
    let conv = dsp::ifft(&prod);
    let scale = 1.0 / (size as f64 * norm);
    (0..n).map(|i| conv[i + 2 * h].re * scale).collect()
}

/// FSK burst with explicit data bits (`+1`/`-1`). Bits beyond the burst are
/// ignored; too few bits repeat the last one.
pub fn generate_fsk_burst_with_bits(
    spec: &FskEmitterSpec,
    sample_rate_hz: f64,
    bits: &[i8],
) -> Result<SampledSignal> {
    spec.validate(sample_rate_hz)?;
    if bits.is_empty() {
        return Err(Error::invalid("bit sequence is empty"));
    }
    if bits.iter().any(|&b| b != 1 && b != -1) {
        return Err(Error::invalid("bits must be +1 or -1"));
    }
    let n = (spec.burst_duration_s * sample_rate_hz).round() as usize;
    let pulse = frequency_pulse(spec, sample_rate_hz, bits, n);
    let env = ramp_envelope(
        n,
        (spec.envelope_attack_s * sample_rate_hz).round() as usize,
    );
    let fc = spec.carrier_hz(sample_rate_hz);

    let mut phase = spec.phase_offset_rad;
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        samples.push(spec.amplitude * env[i] * phase.cos());
        phase += 2.0 * PI * (fc + spec.freq_deviation_hz * pulse[i]) / sample_rate_hz;
        if phase > PI {
            phase -= 2.0 * PI * (phase / (2.0 * PI)).round();
        }
    }
    SampledSignal::new(
        samples,
        sample_rate_hz,
        SignalClass::UavController { controller_id: 0 },
        0,
    )
}

/// Raised-cosine rise over `attack` samples and a mirrored fall at the end.
fn ramp_envelope(n: usize, attack: usize) -> Vec<f64> {
    let attack = attack.clamp(1, n / 2).max(1);
    (0..n)
        .map(|i| {
            let from_edge = i.min(n - 1 - i);
            if from_edge >= attack {
                1.0
            } else {
                0.5 * (1.0 - (PI * (from_edge as f64 + 0.5) / attack as f64).cos())
            }
        })
        .collect()
}

/// Band-limited Gaussian noise centred on [`wideband_center_hz`].
pub fn generate_wideband_burst(
    spec: &WidebandEmitterSpec,
    sample_rate_hz: f64,
    seed: u64,
) -> Result<SampledSignal> {
    spec.validate(sample_rate_hz)?;
    let n = (spec.burst_duration_s * sample_rate_hz).round() as usize;
    let mut r = rng(seed);
    let mut buf: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(r.sample::<f64, _>(StandardNormal), 0.0))
        .collect();

    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let center = wideband_center_hz(sample_rate_hz);
    let (lo, hi) = (
        center - spec.occupied_bandwidth_hz / 2.0,
        center + spec.occupied_bandwidth_hz / 2.0,
    );
    for (k, c) in buf.iter_mut().enumerate() {
        let f = if k <= n / 2 { k as f64 } else { (n - k) as f64 } * sample_rate_hz / n as f64;
        if f < lo || f > hi {
            *c = Complex64::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(n).process(&mut buf);

    let mut samples: Vec<f64> = buf.iter().map(|c| c.re).collect();
    let rms = mean_square(&samples).sqrt();
    if rms == 0.0 {
        return Err(Error::Numeric("wideband burst came out empty".into()));
    }
    for x in &mut samples {
        *x *= spec.amplitude / rms;
    }
    let mut s = SampledSignal::new(samples, sample_rate_hz, SignalClass::WiFi, seed)?;
    s.snr_db = None;
    Ok(s)
}

/// Adds white Gaussian noise so that the burst-support SNR equals `snr_db`.
/// `f64::INFINITY` returns the input unchanged (apart from the recorded SNR).
pub fn add_awgn_at_snr(signal: &SampledSignal, snr_db: f64, seed: u64) -> Result<SampledSignal> {
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::invalid(format!(
            "snr_db must be a number, got {snr_db}"
        )));
    }
    let power = signal.burst_power();
    if power <= 0.0 {
        return Err(Error::invalid(
            "signal has no burst power to reference the SNR to",
        ));
    }
    let mut out = signal.clone();
    out.snr_db = Some(snr_db);
    if snr_db == f64::INFINITY {
        return Ok(out);
    }
    let sigma = (power / 10f64.powf(snr_db / 10.0)).sqrt();
    let mut r = rng(seed);
    for x in &mut out.samples {
        *x += sigma * r.sample::<f64, _>(StandardNormal);
    }
    Ok(out)
}

/// `10 log10(P_signal / P_noise)` from mean squared amplitudes.
pub fn measure_snr(signal: &[f64], noise_reference: &[f64]) -> Result<f64> {
    if signal.is_empty() || noise_reference.is_empty() {
        return Err(Error::invalid("both inputs must be non-empty"));
    }
    let pn = mean_square(noise_reference);
    if pn <= 0.0 {
        return Err(Error::invalid("noise reference has zero power"));
    }
    Ok(10.0 * (mean_square(signal) / pn).log10())
}
