//! Run-structure tests: total number of runs, and the distribution of the
//! longest run of ones per block.

use crate::params::TestParams;
use crate::result::{TestId, TestResult};
use crate::special::{erfc, igamc};
use crate::{count_ones, debug_assert_bits};

/// Total runs V_n against the expectation for the observed bias. The
/// prerequisite |pi - 1/2| < 2/sqrt(n) guards the normal approximation;
/// when it fails the result is p = 0 by definition.
pub fn runs(bits: &[u8], params: &TestParams) -> TestResult {
    debug_assert_bits(bits);
    let n = bits.len();
    if n < 2 {
        return TestResult::not_applicable(TestId::Runs, "needs at least 2 bits");
    }
    let nf = n as f64;
    let pi = count_ones(bits) as f64 / nf;
    let tau = 2.0 / nf.sqrt();
    if (pi - 0.5).abs() >= tau {
        return TestResult::from_p_values(
            TestId::Runs,
            vec![0.0],
            vec![("pi".into(), pi), ("V_n".into(), f64::NAN)],
            params.alpha,
        );
    }
    let v_n = 1 + bits.windows(2).filter(|w| w[0] != w[1]).count();
    let expected = 2.0 * nf * pi * (1.0 - pi);
    let p = erfc((v_n as f64 - expected).abs() / (2.0 * (2.0 * nf).sqrt() * pi * (1.0 - pi)));
    TestResult::from_p_values(
        TestId::Runs,
        vec![p],
        vec![("pi".into(), pi), ("V_n".into(), v_n as f64)],
        params.alpha,
    )
}

struct LongestRunRegime {
    block_len: usize,
    /// Category lower edges: count <= edges[0] is the first bucket, then
    /// one bucket per value, >= edges.last() the final bucket.
    lowest: u32,
    highest: u32,
    pi: &'static [f64],
}

/// Reference category probabilities for the longest run of ones within a
/// block of the given size.
fn regime_for(n: usize) -> Option<LongestRunRegime> {
    if n < 128 {
        None
    } else if n < 6272 {
        Some(LongestRunRegime {
            block_len: 8,
            lowest: 1,
            highest: 4,
            pi: &[0.2148, 0.3672, 0.2305, 0.1875],
        })
    } else if n < 750_000 {
        Some(LongestRunRegime {
            block_len: 128,
            lowest: 4,
            highest: 9,
            pi: &[0.1174, 0.2430, 0.2493, 0.1752, 0.1027, 0.1124],
        })
    } else {
        Some(LongestRunRegime {
            block_len: 10_000,
            lowest: 10,
            highest: 16,
            pi: &[0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727],
        })
    }
}

fn longest_ones_run(block: &[u8]) -> u32 {
    let mut best = 0u32;
    let mut current = 0u32;
    for &b in block {
        if b == 1 {
            current += 1;
            best = best.max(current);
        } else {
            current = 0;
        }
    }
    best
}

/// Longest run of ones per block, bucketed against the reference
/// distribution; p = igamc(K/2, chi^2/2).
pub fn longest_run(bits: &[u8], params: &TestParams) -> TestResult {
    debug_assert_bits(bits);
    let Some(regime) = regime_for(bits.len()) else {
        return TestResult::not_applicable(TestId::LongestRun, "needs at least 128 bits");
    };
    let blocks = bits.len() / regime.block_len;
    let mut counts = vec![0u64; regime.pi.len()];
    for block in bits.chunks_exact(regime.block_len).take(blocks) {
        let run = longest_ones_run(block).clamp(regime.lowest, regime.highest);
        counts[(run - regime.lowest) as usize] += 1;
    }
    let nf = blocks as f64;
    let mut chi2 = 0.0;
    for (i, &obs) in counts.iter().enumerate() {
        let expected = nf * regime.pi[i];
        chi2 += (obs as f64 - expected).powi(2) / expected;
    }
    let k = (regime.pi.len() - 1) as f64;
    let p = igamc(k / 2.0, chi2 / 2.0);
    let mut statistics = vec![
        ("M".into(), regime.block_len as f64),
        ("N".into(), nf),
        ("chi2".into(), chi2),
    ];
    for (i, &obs) in counts.iter().enumerate() {
        statistics.push((format!("nu{i}"), obs as f64));
    }
    TestResult::from_p_values(TestId::LongestRun, vec![p], statistics, params.alpha)
}
