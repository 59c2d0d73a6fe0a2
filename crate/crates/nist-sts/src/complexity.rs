//! Linear complexity test: shortest-LFSR length of fixed-size blocks,
//! bucketed around the theoretical mean.
//!
//! Berlekamp-Massey runs on 64-bit packed words. The discrepancy at step
//! N needs bits s[N], s[N-1], ..., s[N-L] ANDed against the connection
//! polynomial; storing the sequence reversed turns that window into a
//! contiguous ascending bit run, so each step is a handful of shifts,
//! ANDs and a popcount instead of a bit-by-bit loop.

use crate::params::TestParams;
use crate::result::{TestId, TestResult};
use crate::special::igamc;
use crate::debug_assert_bits;

/// 64-bit window of packed bits starting at start_bit, word w of the window.
/// Reads past the end are zero.
fn window_word(words: &[u64], start_bit: usize, w: usize) -> u64 {
    let k = start_bit / 64 + w;
    let r = start_bit % 64;
    let lo = words.get(k).copied().unwrap_or(0);
    if r == 0 {
        lo
    } else {
        let hi = words.get(k + 1).copied().unwrap_or(0);
        (lo >> r) | (hi << (64 - r))
    }
}

/// dst ^= src << shift_bits, over packed words.
fn xor_shifted(dst: &mut [u64], src: &[u64], shift_bits: usize) {
    let q = shift_bits / 64;
    let r = shift_bits % 64;
    let w = dst.len();
    if r == 0 {
        for i in 0..w.saturating_sub(q) {
            dst[i + q] ^= src[i];
        }
    } else {
        for i in 0..w.saturating_sub(q) {
            dst[i + q] ^= src[i] << r;
            if i + q + 1 < w {
                dst[i + q + 1] ^= src[i] >> (64 - r);
            }
        }
    }
}

/// Length of the shortest LFSR generating the bit sequence.
pub fn berlekamp_massey(bits: &[u8]) -> usize {
    let n = bits.len();
    if n == 0 {
        return 0;
    }
    let w = n / 64 + 2;
    let mut rev = vec![0u64; w];
    for (j, &b) in bits.iter().rev().enumerate() {
        debug_assert!(b <= 1);
        if b != 0 {
            rev[j / 64] |= 1u64 << (j % 64);
        }
    }
    // c: connection polynomial (bit i = coefficient of x^i), deg <= l.
    let mut c = vec![0u64; w];
    let mut prev = vec![0u64; w];
    c[0] = 1;
    prev[0] = 1;
    let mut l = 0usize;
    let mut gap = 1usize;
    for step in 0..n {
        let start = n - 1 - step;
        let mut acc = 0u64;
        for wi in 0..=(l / 64).min(w - 1) {
            acc ^= c[wi] & window_word(&rev, start, wi);
        }
        if acc.count_ones() & 1 == 1 {
            if 2 * l <= step {
                let keep = c.clone();
                xor_shifted(&mut c, &prev, gap);
                prev = keep;
                l = step + 1 - l;
                gap = 1;
            } else {
                xor_shifted(&mut c, &prev, gap);
                gap += 1;
            }
        } else {
            gap += 1;
        }
    }
    l
}

/// Expected LFSR length of a random block of the given size.
pub fn expected_complexity(block_len: usize) -> f64 {
    let m = block_len as f64;
    // Parity term: -1 for even block lengths, +1 for odd.
    let sign = if block_len % 2 == 0 { -1.0 } else { 1.0 };
    m / 2.0 + (9.0 + sign) / 36.0 - (m / 3.0 + 2.0 / 9.0) / 2f64.powi(block_len as i32)
}

const LC_PI: [f64; 7] = [
    1.0 / 96.0,
    1.0 / 32.0,
    1.0 / 8.0,
    1.0 / 2.0,
    1.0 / 4.0,
    1.0 / 16.0,
    1.0 / 48.0,
];

pub fn linear_complexity(bits: &[u8], params: &TestParams) -> TestResult {
    debug_assert_bits(bits);
    let m = params.lincomp_m;
    if m < 4 {
        return TestResult::not_applicable(
            TestId::LinearComplexity,
            format!("block length {m} too small"),
        );
    }
    let n_blocks = bits.len() / m;
    if n_blocks == 0 {
        return TestResult::not_applicable(
            TestId::LinearComplexity,
            format!("needs at least {m} bits, have {}", bits.len()),
        );
    }
    let mu = expected_complexity(m);
    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
    let mut buckets = [0u64; 7];
    for block in bits.chunks_exact(m).take(n_blocks) {
        let l = berlekamp_massey(block) as f64;
        let t = sign * (l - mu) + 2.0 / 9.0;
        let idx = if t <= -2.5 {
            0
        } else if t <= -1.5 {
            1
        } else if t <= -0.5 {
            2
        } else if t <= 0.5 {
            3
        } else if t <= 1.5 {
            4
        } else if t <= 2.5 {
            5
        } else {
            6
        };
        buckets[idx] += 1;
    }
    let nf = n_blocks as f64;
    let chi2: f64 = buckets
        .iter()
        .zip(&LC_PI)
        .map(|(&obs, &pi)| {
            let e = nf * pi;
            (obs as f64 - e) * (obs as f64 - e) / e
        })
        .sum();
    let p = igamc(3.0, chi2 / 2.0);
    let mut result = TestResult::from_p_values(
        TestId::LinearComplexity,
        vec![p],
        vec![
            ("M".into(), m as f64),
            ("N".into(), nf),
            ("mu".into(), mu),
            ("chi2".into(), chi2),
        ],
        params.alpha,
    );
    if bits.len() < 1_000_000 {
        result = result.with_warning(format!(
            "input of {} bits is below the recommended 1000000 for this test",
            bits.len()
        ));
    }
    result
}
