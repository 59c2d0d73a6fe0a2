//! Spectral test: counts low-magnitude DFT bins of the +/-1 sequence and
//! compares the tally against the 95% threshold expected of noise.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::params::TestParams;
use crate::result::{TestId, TestResult};
use crate::special::erfc;
use crate::debug_assert_bits;

/// Peak-height threshold containing 95% of bins for a random sequence.
pub fn spectral_threshold(n: usize) -> f64 {
    (n as f64 * 20f64.ln()).sqrt()
}

/// Magnitudes of the first n/2 DFT bins (DC included) of the +/-1 signal.
pub fn half_spectrum(bits: &[u8]) -> Vec<f64> {
    let n = bits.len();
    let mut buf: Vec<Complex<f64>> = bits
        .iter()
        .map(|&b| Complex::new(2.0 * f64::from(b) - 1.0, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf[..n / 2].iter().map(|c| c.norm()).collect()
}

pub fn discrete_fourier_transform(bits: &[u8], params: &TestParams) -> TestResult {
    debug_assert_bits(bits);
    let n = bits.len();
    if n < 2 {
        return TestResult::not_applicable(
            TestId::Dft,
            format!("needs at least 2 bits, have {n}"),
        );
    }
    let threshold = spectral_threshold(n);
    let below = half_spectrum(bits)
        .iter()
        .filter(|&&m| m < threshold)
        .count() as f64;
    let expected = 0.95 * n as f64 / 2.0;
    let d = (below - expected) / (n as f64 * 0.95 * 0.05 / 4.0).sqrt();
    let p = erfc(d.abs() / 2f64.sqrt());
    TestResult::from_p_values(
        TestId::Dft,
        vec![p],
        vec![
            ("N1".into(), below),
            ("N0".into(), expected),
            ("d".into(), d),
            ("T".into(), threshold),
        ],
        params.alpha,
    )
}
