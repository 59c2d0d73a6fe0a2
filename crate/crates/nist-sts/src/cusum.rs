//! Cumulative sums test: maximal excursion of the +/-1 random walk, in
//! forward or reverse bit order.

use crate::params::TestParams;
use crate::result::{TestId, TestResult};
use crate::special::normal_cdf;
use crate::debug_assert_bits;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CusumMode {
    Forward,
    Reverse,
}

/// P-value for max |partial sum| = z over n steps: two series of normal
/// CDF differences. The bin indices need true floor division (they go
/// negative).
fn cusum_p_value(z: f64, n: f64) -> f64 {
    let sqrt_n = n.sqrt();
    let floor = |v: f64| v.floor() as i64;
    let mut sum1 = 0.0;
    for k in floor((-n / z + 1.0) / 4.0)..=floor((n / z - 1.0) / 4.0) {
        let k = k as f64;
        sum1 += normal_cdf((4.0 * k + 1.0) * z / sqrt_n) - normal_cdf((4.0 * k - 1.0) * z / sqrt_n);
    }
    let mut sum2 = 0.0;
    for k in floor((-n / z - 3.0) / 4.0)..=floor((n / z - 1.0) / 4.0) {
        let k = k as f64;
        sum2 += normal_cdf((4.0 * k + 3.0) * z / sqrt_n) - normal_cdf((4.0 * k + 1.0) * z / sqrt_n);
    }
    (1.0 - sum1 + sum2).clamp(0.0, 1.0)
}

pub fn cumulative_sums(bits: &[u8], mode: CusumMode, params: &TestParams) -> TestResult {
    debug_assert_bits(bits);
    let id = match mode {
        CusumMode::Forward => TestId::CumulativeSumsForward,
        CusumMode::Reverse => TestId::CumulativeSumsReverse,
    };
    if bits.is_empty() {
        return TestResult::not_applicable(id, "empty input");
    }
    let mut s = 0i64;
    let mut z = 0i64;
    let step = |b: u8| 2 * i64::from(b) - 1;
    match mode {
        CusumMode::Forward => {
            for &b in bits {
                s += step(b);
                z = z.max(s.abs());
            }
        }
        CusumMode::Reverse => {
            for &b in bits.iter().rev() {
                s += step(b);
                z = z.max(s.abs());
            }
        }
    }
    if z == 0 {
        // Impossible for nonempty input: the first partial sum is +/-1.
        unreachable!("max |S| is at least 1");
    }
    let p = cusum_p_value(z as f64, bits.len() as f64);
    TestResult::from_p_values(id, vec![p], vec![("z".into(), z as f64)], params.alpha)
}
