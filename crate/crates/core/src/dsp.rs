//! Small spectral helpers shared by the triage and transient stages.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

pub fn fft(x: &[Complex64]) -> Vec<Complex64> {
    let mut buf = x.to_vec();
    FftPlanner::new()
        .plan_fft_forward(buf.len())
        .process(&mut buf);
    buf
}

/// Unnormalised inverse transform.
pub fn ifft(x: &[Complex64]) -> Vec<Complex64> {
    let mut buf = x.to_vec();
    FftPlanner::new()
        .plan_fft_inverse(buf.len())
        .process(&mut buf);
    buf
}

pub fn fft_real(x: &[f64]) -> Vec<Complex64> {
    let buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft(&buf)
}

/// Symmetric Hamming window.
pub fn hamming(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 0.54 - 0.46 * (2.0 * PI * i as f64 / (n - 1) as f64).cos())
        .collect()
}

/// Periodic Hann window.
pub fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// One-sided Welch PSD estimate (Hann, 50% overlap). Returns the bin
/// spacing and `nfft / 2 + 1` power values. Input must hold `nfft` samples.
pub fn welch_psd(x: &[f64], nfft: usize, sample_rate_hz: f64) -> (f64, Vec<f64>, usize) {
    assert!(x.len() >= nfft && nfft >= 2);
    let win = hann(nfft);
    let hop = nfft / 2;
    let segments = (x.len() - nfft) / hop + 1;
    let mut planner = FftPlanner::new();
    let plan = planner.plan_fft_forward(nfft);
    let mut acc = vec![0.0; nfft / 2 + 1];
    let mut buf = vec![Complex64::new(0.0, 0.0); nfft];
    for s in 0..segments {
        let seg = &x[s * hop..s * hop + nfft];
        for (b, (&v, &w)) in buf.iter_mut().zip(seg.iter().zip(&win)) {
            *b = Complex64::new(v * w, 0.0);
        }
        plan.process(&mut buf);
        for (a, c) in acc.iter_mut().zip(&buf) {
            *a += c.norm_sqr();
        }
    }
    for a in &mut acc {
        *a /= segments as f64;
    }
    (sample_rate_hz / nfft as f64, acc, segments)
}

/// Linear-interpolated percentile of already sorted data, `q` in [0, 1].
pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

pub fn percentile(data: &[f64], q: f64) -> f64 {
    let mut v = data.to_vec();
    v.sort_by(f64::total_cmp);
    percentile_sorted(&v, q)
}

pub fn median(data: &[f64]) -> f64 {
    percentile(data, 0.5)
}
