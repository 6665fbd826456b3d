//! Synthetic capture catalogue: UAV controllers, Bluetooth and Wi-Fi
//! interferers, and background noise, all at a fixed receiver noise floor.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{
    self, FskEmitterSpec, SampledSignal, SignalClass, WidebandEmitterSpec, DEFAULT_CAPTURE_S,
    DEFAULT_SAMPLE_RATE_HZ,
};

/// Receiver and capture-window settings shared by every synthetic capture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaptureConfig {
    pub sample_rate_hz: f64,
    pub window_samples: usize,
    pub noise_sigma: f64,
    /// Receiver gain varies uniformly within +/- this many dB per capture.
    pub gain_jitter_db: f64,
    /// Burst onset range as fractions of the window.
    pub onset_fraction: (f64, f64),
}

impl Default for CaptureConfig {
    fn default() -> Self {
        Self {
            sample_rate_hz: DEFAULT_SAMPLE_RATE_HZ,
            window_samples: (DEFAULT_CAPTURE_S * DEFAULT_SAMPLE_RATE_HZ).round() as usize,
            noise_sigma: 1.0,
            gain_jitter_db: 1.5,
            onset_fraction: (0.08, 0.20),
        }
    }
}

impl CaptureConfig {
    pub fn validate(&self) -> Result<()> {
        let (a, b) = self.onset_fraction;
        if !(self.sample_rate_hz > 0.0) || self.window_samples < 1024 {
            return Err(Error::invalid(
                "capture needs a positive rate and at least 1024 samples",
            ));
        }
        if !(self.noise_sigma > 0.0) || !(self.gain_jitter_db >= 0.0) {
            return Err(Error::invalid(
                "noise sigma must be positive and gain jitter non-negative",
            ));
        }
        if !(0.0..1.0).contains(&a) || !(a..1.0).contains(&b) {
            return Err(Error::invalid(
                "onset fractions must satisfy 0 <= lo <= hi < 1",
            ));
        }
        Ok(())
    }
}

/// UAV controller emitter parameters, by controller id (1-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Catalogue {
    pub controllers: Vec<(u32, FskEmitterSpec)>,
}

// (attack us, burst us, deviation kHz, symbol us, BT, carrier offset MHz)
const BASE_CONTROLLERS: [(f64, f64, f64, f64, f64, f64); 15] = [
    (2.0, 100.0, 50.0, 2.0, 0.5, -3.0),
    (8.0, 100.0, 80.0, 4.0, 0.5, -2.0),
    (20.0, 100.0, 120.0, 5.0, 0.3, -1.0),
    (35.0, 100.0, 60.0, 10.0, 0.3, 0.0),
    (50.0, 100.0, 100.0, 20.0, 0.3, 1.0),
    (2.0, 140.0, 100.0, 10.0, 0.3, 2.0),
    (8.0, 140.0, 50.0, 5.0, 0.5, 3.0),
    (20.0, 140.0, 80.0, 20.0, 0.3, -3.0),
    (35.0, 140.0, 150.0, 10.0, 0.3, -2.0),
    (50.0, 140.0, 60.0, 4.0, 0.5, -1.0),
    (2.0, 180.0, 80.0, 5.0, 0.3, 0.0),
    (8.0, 180.0, 120.0, 20.0, 0.3, 1.0),
    (20.0, 180.0, 60.0, 2.0, 0.5, 2.0),
    (35.0, 180.0, 100.0, 5.0, 0.3, 3.0),
    (50.0, 180.0, 50.0, 10.0, 0.5, -3.0),
];

/// Controllers whose spec is reused by the extra ids 16 and 17.
pub const DUPLICATED_CONTROLLERS: [u32; 2] = [3, 9];

impl Catalogue {
    /// The fifteen base controllers, or with `with_duplicates` two more
    /// sharing the make and model of [`DUPLICATED_CONTROLLERS`].
    pub fn standard(with_duplicates: bool) -> Self {
        let mut controllers: Vec<(u32, FskEmitterSpec)> = BASE_CONTROLLERS
            .iter()
            .enumerate()
            .map(|(i, &(attack, burst, dev, sym, bt, offset))| {
                (
                    i as u32 + 1,
                    FskEmitterSpec {
                        amplitude: 1.0,
                        carrier_offset_hz: offset * 1e6,
                        freq_deviation_hz: dev * 1e3,
                        symbol_duration_s: sym * 1e-6,
                        burst_duration_s: burst * 1e-6,
                        gaussian_bt: bt,
                        phase_offset_rad: 0.0,
                        envelope_attack_s: attack * 1e-6,
                    },
                )
            })
            .collect();
        if with_duplicates {
            for (k, &src) in DUPLICATED_CONTROLLERS.iter().enumerate() {
                let spec = controllers[src as usize - 1].1;
                controllers.push((16 + k as u32, spec));
            }
        }
        Self { controllers }
    }

    pub fn ids(&self) -> Vec<u32> {
        self.controllers.iter().map(|c| c.0).collect()
    }

    pub fn spec(&self, controller_id: u32) -> Result<&FskEmitterSpec> {
        self.controllers
            .iter()
            .find(|c| c.0 == controller_id)
            .map(|c| &c.1)
            .ok_or_else(|| Error::invalid(format!("controller {controller_id} is not catalogued")))
    }
}

/// Bluetooth basic-rate burst: 1 Msym/s GFSK on a random channel.
pub fn bluetooth_spec<R: Rng>(r: &mut R) -> FskEmitterSpec {
    FskEmitterSpec {
        amplitude: 1.0,
        carrier_offset_hz: r.random_range(-4i32..=4) as f64 * 1e6,
        freq_deviation_hz: r.random_range(150e3..275e3),
        symbol_duration_s: 0.5e-6,
        burst_duration_s: r.random_range(100e-6..180e-6),
        gaussian_bt: 0.5,
        phase_offset_rad: 0.0,
        envelope_attack_s: 1e-6,
    }
}

/// Wi-Fi-like wideband burst.
pub fn wifi_spec<R: Rng>(r: &mut R) -> WidebandEmitterSpec {
    WidebandEmitterSpec {
        occupied_bandwidth_hz: r.random_range(22e6..30e6),
        burst_duration_s: r.random_range(100e-6..180e-6),
        amplitude: 1.0,
    }
}

/// One synthetic capture of `class` at `snr_db` (burst-support SNR against
/// the receiver noise floor). Noise captures ignore `snr_db`.
pub fn synthesize(
    class: SignalClass,
    snr_db: f64,
    seed: u64,
    cfg: &CaptureConfig,
    catalogue: &Catalogue,
) -> Result<SampledSignal> {
    cfg.validate()?;
    let mut r = signal::rng(seed);
    let gain_db = if cfg.gain_jitter_db > 0.0 {
        r.random_range(-cfg.gain_jitter_db..=cfg.gain_jitter_db)
    } else {
        0.0
    };
    let gain = 10f64.powf(gain_db / 20.0);
    let burst_seed: u64 = r.random();
    let noise_seed: u64 = r.random();
    let onset_frac = r.random_range(cfg.onset_fraction.0..=cfg.onset_fraction.1);
    let onset = (onset_frac * cfg.window_samples as f64) as usize;
    let fs = cfg.sample_rate_hz;

    let burst = match class {
        SignalClass::Noise => {
            let noise = signal::generate_noise(cfg.window_samples, cfg.noise_sigma, noise_seed)?;
            let mut s = SampledSignal::new(noise.into_samples(), fs, SignalClass::Noise, seed)?
                .scaled(gain);
            s.snr_db = None;
            return Ok(s);
        }
        SignalClass::UavController { controller_id } => {
            let mut spec = *catalogue.spec(controller_id)?;
            spec.phase_offset_rad = r.random_range(0.0..std::f64::consts::TAU);
            signal::generate_fsk_burst(&spec, fs, burst_seed)?
        }
        SignalClass::Bluetooth { .. } => {
            let mut spec = bluetooth_spec(&mut r);
            spec.phase_offset_rad = r.random_range(0.0..std::f64::consts::TAU);
            signal::generate_fsk_burst(&spec, fs, burst_seed)?
        }
        SignalClass::WiFi => signal::generate_wideband_burst(&wifi_spec(&mut r), fs, burst_seed)?,
    };
    let placed = burst.placed_in_window(cfg.window_samples, onset)?;
    let target = cfg.noise_sigma * cfg.noise_sigma * 10f64.powf(snr_db / 10.0);
    let level = (target / placed.burst_power()).sqrt();
    let noisy = signal::add_awgn_at_snr(&placed.scaled(level), snr_db, noise_seed)?;
    let mut out = SampledSignal::new(noisy.into_samples(), fs, class, seed)?.scaled(gain);
    out.snr_db = Some(snr_db);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalogue_sizes_and_duplicates() {
        let c15 = Catalogue::standard(false);
        let c17 = Catalogue::standard(true);
        assert_eq!(c15.ids(), (1..=15).collect::<Vec<_>>());
        assert_eq!(c17.ids().len(), 17);
        assert_eq!(c17.spec(16).unwrap(), c17.spec(3).unwrap());
        assert_eq!(c17.spec(17).unwrap(), c17.spec(9).unwrap());
        assert!(c15.spec(16).is_err());
        for (_, s) in &c17.controllers {
            s.validate(DEFAULT_SAMPLE_RATE_HZ).unwrap();
            let bt_like =
                (s.symbol_duration_s - 0.5e-6).abs() <= 0.1e-6 && s.freq_deviation_hz < 350e3;
            assert!(!bt_like);
        }
    }

    #[test]
    fn deterministic_and_labelled() {
        let cfg = CaptureConfig::default();
        let cat = Catalogue::standard(false);
        let class = SignalClass::UavController { controller_id: 4 };
        let a = synthesize(class, 10.0, 9, &cfg, &cat).unwrap();
        let b = synthesize(class, 10.0, 9, &cfg, &cat).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 25_000);
        assert_eq!(a.label, class);
        assert_eq!(a.snr_db, Some(10.0));
        let c = synthesize(class, 10.0, 10, &cfg, &cat).unwrap();
        assert_ne!(a.samples(), c.samples());
    }

    #[test]
    fn noise_floor_and_snr() {
        let cfg = CaptureConfig {
            gain_jitter_db: 0.0,
            ..CaptureConfig::default()
        };
        let cat = Catalogue::standard(false);
        let n = synthesize(SignalClass::Noise, 0.0, 1, &cfg, &cat).unwrap();
        let p = signal::mean_square(n.samples());
        assert!((p - 1.0).abs() < 0.05, "{p}");

        // Burst-on power minus the floor gives back the requested SNR.
        let s = synthesize(
            SignalClass::UavController { controller_id: 1 },
            10.0,
            2,
            &cfg,
            &cat,
        )
        .unwrap();
        let on = &s.samples()[5_000..14_000];
        let snr = 10.0 * (signal::mean_square(on) - 1.0).log10();
        assert!((snr - 10.0).abs() < 0.3, "{snr}");
    }

    #[test]
    fn bad_config() {
        let cat = Catalogue::standard(false);
        let cfg = CaptureConfig {
            onset_fraction: (0.5, 0.2),
            ..CaptureConfig::default()
        };
        assert!(synthesize(SignalClass::Noise, 0.0, 1, &cfg, &cat).is_err());
    }
}
