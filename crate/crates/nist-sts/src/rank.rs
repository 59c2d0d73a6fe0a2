//! Binary matrix rank test: rank distribution of 32x32 matrices drawn
//! from consecutive input bits, against the exact random-matrix law.

use crate::params::TestParams;
use crate::result::{TestId, TestResult};
use crate::special::igamc;
use crate::debug_assert_bits;

pub const MATRIX_DIM: usize = 32;
const MATRIX_BITS: usize = MATRIX_DIM * MATRIX_DIM;
/// Below this many matrices the three-bucket chi-square is unreliable.
const MIN_MATRICES: usize = 38;

/// Rank over GF(2) by Gaussian elimination on row words.
pub fn gf2_rank(rows: &mut [u32; MATRIX_DIM]) -> u32 {
    let mut rank = 0usize;
    for col in 0..MATRIX_DIM {
        let mask = 1u32 << col;
        if let Some(pivot) = (rank..MATRIX_DIM).find(|&r| rows[r] & mask != 0) {
            rows.swap(rank, pivot);
            for r in 0..MATRIX_DIM {
                if r != rank && rows[r] & mask != 0 {
                    rows[r] ^= rows[rank];
                }
            }
            rank += 1;
        }
    }
    rank as u32
}

/// P(rank = dim - deficiency) for a random square GF(2) matrix, from the
/// exact product formula.
pub fn rank_probability(dim: u32, deficiency: u32) -> f64 {
    let m = dim as i32;
    let r = (dim - deficiency) as i32;
    let mut p = 2f64.powi(r * (2 * m - r) - m * m);
    for i in 0..r {
        let num = 1.0 - 2f64.powi(i - m);
        let den = 1.0 - 2f64.powi(i - r);
        p *= num * num / den;
    }
    p
}

fn pack_matrix(bits: &[u8]) -> [u32; MATRIX_DIM] {
    let mut rows = [0u32; MATRIX_DIM];
    for (r, row_bits) in bits.chunks_exact(MATRIX_DIM).enumerate().take(MATRIX_DIM) {
        let mut word = 0u32;
        for (c, &b) in row_bits.iter().enumerate() {
            word |= u32::from(b) << c;
        }
        rows[r] = word;
    }
    rows
}

/// Buckets: full rank, one short, everything lower.
pub fn matrix_rank(bits: &[u8], params: &TestParams) -> TestResult {
    debug_assert_bits(bits);
    let matrices = bits.len() / MATRIX_BITS;
    if matrices < MIN_MATRICES {
        return TestResult::not_applicable(
            TestId::Rank,
            format!(
                "needs {} bits for {MIN_MATRICES} matrices, have {}",
                MIN_MATRICES * MATRIX_BITS,
                bits.len()
            ),
        );
    }
    let mut counts = [0u64; 3];
    for chunk in bits.chunks_exact(MATRIX_BITS).take(matrices) {
        let mut rows = pack_matrix(chunk);
        let deficiency = MATRIX_DIM as u32 - gf2_rank(&mut rows);
        counts[(deficiency as usize).min(2)] += 1;
    }
    let probs = [
        rank_probability(MATRIX_DIM as u32, 0),
        rank_probability(MATRIX_DIM as u32, 1),
        1.0 - rank_probability(MATRIX_DIM as u32, 0) - rank_probability(MATRIX_DIM as u32, 1),
    ];
    let nf = matrices as f64;
    let chi2: f64 = counts
        .iter()
        .zip(&probs)
        .map(|(&obs, &p)| {
            let e = nf * p;
            (obs as f64 - e) * (obs as f64 - e) / e
        })
        .sum();
    let p = igamc(1.0, chi2 / 2.0);
    TestResult::from_p_values(
        TestId::Rank,
        vec![p],
        vec![
            ("N".into(), nf),
            ("F_full".into(), counts[0] as f64),
            ("F_full_minus_1".into(), counts[1] as f64),
            ("F_lower".into(), counts[2] as f64),
            ("chi2".into(), chi2),
        ],
        params.alpha,
    )
}
