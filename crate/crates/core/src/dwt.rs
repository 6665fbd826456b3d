//! Two-level orthonormal Haar decomposition.
//!
//! The level-2 detail band `d2` of a raw capture is what every later stage
//! works on: it is a quarter of the length, and constant offsets vanish.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::signal::SampledSignal;

/// Output of [`preprocess`].
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletOutput {
    /// Level-2 detail coefficients.
    pub y_t: Vec<f64>,
    pub decimation_factor: usize,
    pub source_length: usize,
}

/// One analysis step. A trailing odd sample is dropped.
pub fn haar_level(x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if x.len() < 2 {
        return Err(Error::invalid(format!(
            "haar step needs 2 samples, got {}",
            x.len()
        )));
    }
    let half = x.len() / 2;
    let mut approx = Vec::with_capacity(half);
    let mut detail = Vec::with_capacity(half);
    for pair in x.chunks_exact(2) {
        approx.push((pair[0] + pair[1]) * FRAC_1_SQRT_2);
        detail.push((pair[0] - pair[1]) * FRAC_1_SQRT_2);
    }
    Ok((approx, detail))
}

/// Full two-level decomposition: `(a2, d2, d1)`.
pub fn decompose(x: &[f64]) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    if x.len() < 4 {
        return Err(Error::invalid(format!(
            "two-level decomposition needs 4 samples, got {}",
            x.len()
        )));
    }
    let (a1, d1) = haar_level(x)?;
    let (a2, d2) = haar_level(&a1)?;
    Ok((a2, d2, d1))
}

pub fn preprocess_samples(x: &[f64]) -> Result<WaveletOutput> {
    let (_, d2, _) = decompose(x)?;
    Ok(WaveletOutput {
        y_t: d2,
        decimation_factor: 4,
        source_length: x.len(),
    })
}

pub fn preprocess(y: &SampledSignal) -> Result<WaveletOutput> {
    preprocess_samples(y.samples())
}
