//! Frequency tests over m-bit patterns with circular wraparound: the
//! serial test (second-order pattern uniformity) and approximate entropy
//! (drop in empirical entropy from m-bit to (m+1)-bit patterns).

use crate::params::TestParams;
use crate::result::{TestId, TestResult};
use crate::special::igamc;
use crate::debug_assert_bits;

const MAX_PATTERN_LEN: usize = 16;

/// Occurrences of every m-bit pattern across all n circular windows.
/// Index is the pattern read MSB-first.
pub fn circular_counts(bits: &[u8], m: usize) -> Vec<u64> {
    assert!(m <= MAX_PATTERN_LEN, "pattern length {m} too large");
    let n = bits.len();
    let mut counts = vec![0u64; 1 << m];
    if m == 0 {
        counts[0] = n as u64;
        return counts;
    }
    if n == 0 {
        return counts;
    }
    // Append the wrapped head so every window is a contiguous slice, then
    // slide a masked index across it.
    let mut ext = Vec::with_capacity(n + m - 1);
    ext.extend_from_slice(bits);
    while ext.len() < n + m - 1 {
        let take = (n + m - 1 - ext.len()).min(n);
        ext.extend_from_slice(&bits[..take]);
    }
    let mask = (1usize << m) - 1;
    let mut idx = 0usize;
    for &b in &ext[..m - 1] {
        idx = (idx << 1) | b as usize;
    }
    for &b in &ext[m - 1..] {
        idx = ((idx << 1) & mask) | b as usize;
        counts[idx] += 1;
    }
    counts
}

/// Pattern-uniformity statistic: (2^m / n) * sum of squared counts - n.
/// Zero when every pattern appears equally often; zero by definition at m=0.
pub fn psi_squared(bits: &[u8], m: usize) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let n = bits.len() as f64;
    let sum: f64 = circular_counts(bits, m)
        .iter()
        .map(|&c| c as f64 * c as f64)
        .sum();
    (1u64 << m) as f64 / n * sum - n
}

/// Empirical pattern-entropy term: sum over patterns of (c/n) ln(c/n).
pub fn phi(bits: &[u8], m: usize) -> f64 {
    let n = bits.len() as f64;
    circular_counts(bits, m)
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let f = c as f64 / n;
            f * f.ln()
        })
        .sum()
}

pub fn serial(bits: &[u8], params: &TestParams) -> TestResult {
    debug_assert_bits(bits);
    let m = params.serial_m;
    if m < 2 || m > MAX_PATTERN_LEN {
        return TestResult::not_applicable(
            TestId::Serial,
            format!("pattern length {m} out of range"),
        );
    }
    if bits.len() < (1 << m) {
        return TestResult::not_applicable(
            TestId::Serial,
            format!("needs at least {} bits for m={m}, have {}", 1 << m, bits.len()),
        );
    }
    let psi_m = psi_squared(bits, m);
    let psi_m1 = psi_squared(bits, m - 1);
    let psi_m2 = psi_squared(bits, m - 2);
    let del1 = (psi_m - psi_m1).max(0.0);
    let del2 = (psi_m - 2.0 * psi_m1 + psi_m2).max(0.0);
    let p1 = igamc(2f64.powi(m as i32 - 2), del1 / 2.0);
    let p2 = igamc(2f64.powi(m as i32 - 3), del2 / 2.0);
    TestResult::from_p_values(
        TestId::Serial,
        vec![p1, p2],
        vec![
            ("m".into(), m as f64),
            ("psi2_m".into(), psi_m),
            ("del_psi2".into(), del1),
            ("del2_psi2".into(), del2),
        ],
        params.alpha,
    )
}

pub fn approximate_entropy(bits: &[u8], params: &TestParams) -> TestResult {
    debug_assert_bits(bits);
    let m = params.apen_m;
    if m < 1 || m + 1 > MAX_PATTERN_LEN {
        return TestResult::not_applicable(
            TestId::ApproximateEntropy,
            format!("pattern length {m} out of range"),
        );
    }
    let n = bits.len();
    if n <= m + 1 {
        return TestResult::not_applicable(
            TestId::ApproximateEntropy,
            format!("needs more than {} bits for m={m}, have {n}", m + 1),
        );
    }
    let apen = phi(bits, m) - phi(bits, m + 1);
    let chi2 = (2.0 * n as f64 * (std::f64::consts::LN_2 - apen)).max(0.0);
    let p = igamc(2f64.powi(m as i32 - 1), chi2 / 2.0);
    TestResult::from_p_values(
        TestId::ApproximateEntropy,
        vec![p],
        vec![
            ("m".into(), m as f64),
            ("ApEn".into(), apen),
            ("chi2".into(), chi2),
        ],
        params.alpha,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::result::Verdict;
    use proptest::prelude::*;

    fn bits_from_str(s: &str) -> Vec<u8> {
        s.bytes().map(|b| b - b'0').collect()
    }

    #[test]
    fn counts_wrap_around() {
        // "011" windows of 2, circularly: 01, 11, 10.
        let c = circular_counts(&bits_from_str("011"), 2);
        assert_eq!(c, vec![0, 1, 1, 1]);
    }

    #[test]
    fn psi_values_for_known_input() {
        let bits = bits_from_str("0011011101");
        assert!((psi_squared(&bits, 3) - 2.8).abs() < 1e-12);
        assert!((psi_squared(&bits, 2) - 1.2).abs() < 1e-12);
        assert!((psi_squared(&bits, 1) - 0.4).abs() < 1e-12);
        assert_eq!(psi_squared(&bits, 0), 0.0);
    }

    #[test]
    fn uniform_pattern_census_gives_p_one() {
        // 0011 is a full-cycle sequence for 2-bit patterns: every pattern
        // once, psi2 terms all vanish.
        let bits = bits_from_str("0011");
        let mut params = TestParams::default();
        params.serial_m = 2;
        let r = serial(&bits, &params);
        assert_eq!(r.p_values, vec![1.0, 1.0]);
    }

    #[test]
    fn alternating_input_fails_serial() {
        let bits: Vec<u8> = (0..1000).map(|i| (i % 2) as u8).collect();
        let mut params = TestParams::default();
        params.serial_m = 2;
        let r = serial(&bits, &params);
        assert_eq!(r.verdict, Verdict::Fail);
    }

    #[test]
    fn constant_input_fails_entropy() {
        let bits = vec![1u8; 2000];
        let mut params = TestParams::default();
        params.apen_m = 2;
        let r = approximate_entropy(&bits, &params);
        // Perfectly predictable: ApEn = 0, chi2 = 2n ln 2.
        assert!((r.statistics[1].1).abs() < 1e-12);
        assert_eq!(r.verdict, Verdict::Fail);
    }

    #[test]
    fn short_inputs_are_not_applicable() {
        let params = TestParams::default();
        assert_eq!(
            serial(&bits_from_str("0101"), &params).verdict,
            Verdict::NotApplicable
        );
        let mut tiny = TestParams::default();
        tiny.apen_m = 8;
        assert_eq!(
            approximate_entropy(&bits_from_str("0101"), &tiny).verdict,
            Verdict::NotApplicable
        );
    }

    proptest! {
        #[test]
        fn counts_total_n(bits in prop::collection::vec(0u8..=1, 1..200), m in 1usize..6) {
            let total: u64 = circular_counts(&bits, m).iter().sum();
            prop_assert_eq!(total, bits.len() as u64);
        }

        #[test]
        fn counts_are_extension_consistent(
            bits in prop::collection::vec(0u8..=1, 1..150),
            m in 1usize..5,
        ) {
            // Circularly, each m-pattern count equals the sum of its two
            // (m+1)-bit extensions.
            let short = circular_counts(&bits, m);
            let long = circular_counts(&bits, m + 1);
            for (idx, &c) in short.iter().enumerate() {
                prop_assert_eq!(c, long[idx << 1] + long[(idx << 1) | 1]);
            }
        }

        #[test]
        fn psi_one_equals_normalized_bias(bits in prop::collection::vec(0u8..=1, 1..300)) {
            // psi2 at m=1 collapses to S^2/n where S is the +/-1 sum.
            let n = bits.len() as f64;
            let s: f64 = bits.iter().map(|&b| 2.0 * f64::from(b) - 1.0).sum();
            let psi1 = psi_squared(&bits, 1);
            prop_assert!((psi1 - s * s / n).abs() < 1e-9);
        }

        #[test]
        fn serial_deltas_are_nonnegative(bits in prop::collection::vec(0u8..=1, 16..200)) {
            let psi3 = psi_squared(&bits, 3);
            let psi2 = psi_squared(&bits, 2);
            let psi1 = psi_squared(&bits, 1);
            prop_assert!(psi3 - psi2 >= -1e-9);
            prop_assert!(psi3 - 2.0 * psi2 + psi1 >= -1e-9);
        }
    }
}
