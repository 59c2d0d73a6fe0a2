//! Frequency tests: global one/zero balance and per-block balance.

use crate::params::TestParams;
use crate::result::{TestId, TestResult};
use crate::special::{erfc, igamc};
use crate::{count_ones, debug_assert_bits};

/// Global balance: S_n = sum of +/-1 bits, p = erfc(|S_n|/sqrt(2n)).
pub fn frequency_monobit(bits: &[u8], params: &TestParams) -> TestResult {
    debug_assert_bits(bits);
    let n = bits.len();
    if n == 0 {
        return TestResult::not_applicable(TestId::Frequency, "empty input");
    }
    let ones = count_ones(bits) as i64;
    let s_n = 2 * ones - n as i64;
    let s_obs = (s_n as f64).abs() / (n as f64).sqrt();
    let p = erfc(s_obs / std::f64::consts::SQRT_2);
    TestResult::from_p_values(
        TestId::Frequency,
        vec![p],
        vec![("S_n".into(), s_n as f64), ("s_obs".into(), s_obs)],
        params.alpha,
    )
}

/// Per-block balance: chi^2 = 4M sum (pi_i - 1/2)^2 over N = floor(n/M)
/// blocks, p = igamc(N/2, chi^2/2). Trailing bits beyond N*M are unused.
pub fn block_frequency(bits: &[u8], params: &TestParams) -> TestResult {
    debug_assert_bits(bits);
    let m = params.block_freq_m;
    if m == 0 {
        return TestResult::not_applicable(TestId::BlockFrequency, "block length is zero");
    }
    let blocks = bits.len() / m;
    if blocks == 0 {
        return TestResult::not_applicable(
            TestId::BlockFrequency,
            format!("needs at least one block of {m} bits, have {}", bits.len()),
        );
    }
    let mut chi2 = 0.0;
    for block in bits.chunks_exact(m).take(blocks) {
        let pi = count_ones(block) as f64 / m as f64;
        chi2 += (pi - 0.5) * (pi - 0.5);
    }
    chi2 *= 4.0 * m as f64;
    let p = igamc(blocks as f64 / 2.0, chi2 / 2.0);
    TestResult::from_p_values(
        TestId::BlockFrequency,
        vec![p],
        vec![
            ("M".into(), m as f64),
            ("N".into(), blocks as f64),
            ("chi2".into(), chi2),
        ],
        params.alpha,
    )
}
