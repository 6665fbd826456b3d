//! Capture datasets on disk: `manifest.json` plus one headerless
//! little-endian binary32 file per capture.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{SampledSignal, SignalClass};
use crate::synth::{self, CaptureConfig, Catalogue};

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controller_id: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub device_id: Option<u32>,
    pub snr_db: Option<f64>,
    pub seed: u64,
    pub n_samples: usize,
}

impl ManifestEntry {
    pub fn class(&self) -> Result<SignalClass> {
        match (self.label.as_str(), self.controller_id) {
            ("noise", _) => Ok(SignalClass::Noise),
            ("wifi", _) => Ok(SignalClass::WiFi),
            ("bluetooth", _) => Ok(SignalClass::Bluetooth {
                device_id: self.device_id.unwrap_or(0),
            }),
            ("uav", Some(controller_id)) => Ok(SignalClass::UavController { controller_id }),
            ("uav", None) => Err(Error::Format(format!(
                "{}: uav entry without controller_id",
                self.file
            ))),
            (other, _) => Err(Error::Format(format!(
                "{}: unknown label '{other}'",
                self.file
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub sample_rate_hz: f64,
    pub entries: Vec<ManifestEntry>,
}

/// Reads a raw capture. The length must be a multiple of 4 bytes.
pub fn read_raw(path: &Path) -> Result<Vec<f64>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() % 4 != 0 {
        return Err(Error::Format(format!(
            "{}: {} bytes is not a whole number of binary32 samples",
            path.display(),
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect())
}

pub fn write_raw(path: &Path, samples: &[f64]) -> Result<()> {
    let mut bytes = Vec::with_capacity(samples.len() * 4);
    for &v in samples {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Loads a capture file as a signal of unknown class.
pub fn load_raw_capture(path: &Path, sample_rate_hz: f64) -> Result<SampledSignal> {
    let samples = read_raw(path)?;
    SampledSignal::new(samples, sample_rate_hz, SignalClass::Noise, 0)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => {
            Error::Format(format!("{}: manifest not found", path.display()))
        }
        _ => Error::io(&path, e),
    })?;
    let m: Manifest = serde_json::from_str(&text)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    if m.format_version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "{}: format_version {} is not supported",
            path.display(),
            m.format_version
        )));
    }
    if !(m.sample_rate_hz > 0.0) {
        return Err(Error::Format(format!(
            "{}: sample rate must be positive",
            path.display()
        )));
    }
    Ok(m)
}

/// Writes every capture plus the manifest. All captures must share a rate.
pub fn write_dataset(dir: &Path, captures: &[SampledSignal]) -> Result<Manifest> {
    let first = captures
        .first()
        .ok_or_else(|| Error::invalid("no captures to write"))?;
    let rate = first.sample_rate_hz();
    if captures.iter().any(|c| c.sample_rate_hz() != rate) {
        return Err(Error::invalid(
            "captures in one dataset must share a sample rate",
        ));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let entries = captures
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let file = format!("capture_{i:05}.f32");
            write_raw(&dir.join(&file), c.samples())?;
            Ok(ManifestEntry {
                file,
                label: c.label.name().to_string(),
                controller_id: c.label.controller_id(),
                device_id: match c.label {
                    SignalClass::Bluetooth { device_id } => Some(device_id),
                    _ => None,
                },
                snr_db: c.snr_db,
                seed: c.seed,
                n_samples: c.len(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        sample_rate_hz: rate,
        entries,
    };
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest)?;
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

pub fn load_entry(dir: &Path, manifest: &Manifest, entry: &ManifestEntry) -> Result<SampledSignal> {
    let path: PathBuf = dir.join(&entry.file);
    let samples = read_raw(&path)?;
    if samples.len() != entry.n_samples {
        return Err(Error::Format(format!(
            "{}: {} samples on disk, manifest says {}",
            path.display(),
            samples.len(),
            entry.n_samples
        )));
    }
    let mut s = SampledSignal::new(samples, manifest.sample_rate_hz, entry.class()?, entry.seed)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    s.snr_db = entry.snr_db;
    Ok(s)
}

/// Loads every capture listed in `dir`'s manifest, in manifest order.
pub fn load_dataset(dir: &Path) -> Result<(Manifest, Vec<SampledSignal>)> {
    let m = read_manifest(dir)?;
    let caps = m
        .entries
        .par_iter()
        .map(|e| load_entry(dir, &m, e))
        .collect::<Result<Vec<_>>>()?;
    Ok((m, caps))
}

/// Seed of capture `k` of class slot `slot` under a base seed.
pub fn capture_seed(base: u64, slot: usize, k: usize) -> u64 {
    let mut z = base ^ ((slot as u64) << 32 | k as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// What to synthesise: `count` captures of each class at one SNR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationSpec {
    pub classes: Vec<SignalClass>,
    pub count_per_class: usize,
    pub snr_db: f64,
    pub seed: u64,
    pub capture: CaptureConfig,
    pub with_duplicates: bool,
}

impl GenerationSpec {
    /// Every catalogued controller, 15 or 17 of them.
    pub fn controllers(
        count_per_class: usize,
        snr_db: f64,
        seed: u64,
        with_duplicates: bool,
    ) -> Self {
        let classes = Catalogue::standard(with_duplicates)
            .ids()
            .into_iter()
            .map(|controller_id| SignalClass::UavController { controller_id })
            .collect();
        Self {
            classes,
            count_per_class,
            snr_db,
            seed,
            capture: CaptureConfig::default(),
            with_duplicates,
        }
    }
}

/// Captures ordered class by class, `count_per_class` each.
pub fn generate(spec: &GenerationSpec) -> Result<Vec<SampledSignal>> {
    if spec.count_per_class == 0 {
        return Err(Error::invalid("count per class must be positive"));
    }
    if spec.classes.is_empty() {
        return Err(Error::invalid("no classes to generate"));
    }
    let catalogue = Catalogue::standard(spec.with_duplicates);
    let jobs: Vec<(usize, usize)> = (0..spec.classes.len())
        .flat_map(|s| (0..spec.count_per_class).map(move |k| (s, k)))
        .collect();
    jobs.par_iter()
        .map(|&(slot, k)| {
            let seed = capture_seed(spec.seed, slot, k);
            synth::synthesize(
                spec.classes[slot],
                spec.snr_db,
                seed,
                &spec.capture,
                &catalogue,
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raw_round_trip_is_binary32() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.f32");
        write_raw(&p, &[1.0, -0.5, 0.1]).unwrap();
        let bytes = fs::read(&p).unwrap();
        assert_eq!(bytes.len(), 12);
        assert_eq!(&bytes[..4], &1.0f32.to_le_bytes());
        let back = read_raw(&p).unwrap();
        assert_eq!(back, vec![1.0, -0.5, 0.1f32 as f64]);
    }

    #[test]
    fn ragged_file_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.f32");
        fs::write(&p, [0u8; 7]).unwrap();
        assert!(matches!(read_raw(&p), Err(Error::Format(_))));
    }

    #[test]
    fn missing_manifest_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(read_manifest(dir.path()), Err(Error::Format(_))));
    }

    #[test]
    fn seeds_are_distinct() {
        let mut s: Vec<u64> = (0..4)
            .flat_map(|a| (0..50).map(move |k| capture_seed(9, a, k)))
            .collect();
        s.sort_unstable();
        s.dedup();
        assert_eq!(s.len(), 200);
    }

    #[test]
    fn labels_round_trip() {
        let classes = [
            SignalClass::Noise,
            SignalClass::WiFi,
            SignalClass::Bluetooth { device_id: 4 },
            SignalClass::UavController { controller_id: 12 },
        ];
        for c in classes {
            let e = ManifestEntry {
                file: "f".into(),
                label: c.name().into(),
                controller_id: c.controller_id(),
                device_id: match c {
                    SignalClass::Bluetooth { device_id } => Some(device_id),
                    _ => None,
                },
                snr_db: None,
                seed: 0,
                n_samples: 2,
            };
            assert_eq!(e.class().unwrap(), c);
        }
    }
}
