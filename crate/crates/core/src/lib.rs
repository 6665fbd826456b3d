//! Multistage RF surveillance: detect emissions in raw captures, triage
//! Wi-Fi and Bluetooth interference, and fingerprint remote-controller
//! transmitters from the statistics of their energy transients.
//!
//! Stages, in processing order:
//!
//! - [`dwt`]: two-level Haar preprocessing of the raw trace.
//! - [`detector`]: two-state Markov naive-Bayes emission/noise decision.
//! - [`interference`]: bandwidth rule and FSK modulation features.
//! - [`transient`]: spectrogram energy trajectory and its 15 statistics.
//! - [`nca`]: feature weighting and selection.
//! - [`classifiers`]: kNN, linear discriminant analysis and random forest.
//! - [`eval`]: the end-to-end pipeline and Monte-Carlo evaluation protocol.
//!
//! [`signal`] and [`synth`] provide the synthetic emitters that stand in
//! for hardware captures; [`dataset`] reads and writes them on disk.

pub mod classifiers;
pub mod dataset;
pub mod detector;
pub mod dsp;
pub mod dwt;
pub mod error;
pub mod eval;
pub mod interference;
pub mod nca;
pub mod signal;
pub mod synth;
pub mod transient;

pub use error::{Error, Result};
pub use signal::{SampledSignal, SignalClass};
