//! Cross-checks of the optimized kernels against direct, definition-level
//! implementations on small inputs, plus Monte Carlo confirmation of the
//! rank bucket probabilities.

use nist_sts::complexity::berlekamp_massey;
use nist_sts::dft::half_spectrum;
use nist_sts::patterns::circular_counts;
use nist_sts::rank::{gf2_rank, rank_probability, MATRIX_DIM};
use nist_sts::templates::{non_overlapping_matches, overlapping_matches};
use rand_core::{RngCore, SeedableRng};

type Rng = rand_chacha::ChaCha12Rng;

fn random_bits(rng: &mut Rng, count: usize) -> Vec<u8> {
    let mut bits = Vec::with_capacity(count);
    while bits.len() < count {
        let w = rng.next_u32();
        for i in 0..32 {
            if bits.len() == count {
                break;
            }
            bits.push(((w >> i) & 1) as u8);
        }
    }
    bits
}

/// Shortest LFSR by trying every length and every feedback tap set.
/// The first `l` bits are the register fill; taps bit j weights s[i-1-j].
fn shortest_lfsr(bits: &[u8]) -> usize {
    let n = bits.len();
    assert!(n <= 16, "exhaustive search is exponential");
    for l in 0..=n {
        for taps in 0u32..(1u32 << l) {
            let generates = (l..n).all(|i| {
                let mut fb = 0u8;
                for j in 0..l {
                    if (taps >> j) & 1 == 1 {
                        fb ^= bits[i - 1 - j];
                    }
                }
                fb == bits[i]
            });
            if generates {
                return l;
            }
        }
    }
    unreachable!("length n always succeeds: no positions left to constrain")
}

#[test]
fn lfsr_length_matches_exhaustive_search_on_all_short_sequences() {
    for n in 0..=10usize {
        for v in 0u32..(1u32 << n) {
            let bits: Vec<u8> = (0..n).map(|i| ((v >> i) & 1) as u8).collect();
            assert_eq!(
                berlekamp_massey(&bits),
                shortest_lfsr(&bits),
                "n={n}, v={v:b}"
            );
        }
    }
}

#[test]
fn lfsr_length_matches_exhaustive_search_on_random_sequences() {
    let mut rng = Rng::seed_from_u64(0x5eed_0001);
    for _ in 0..150 {
        let n = 11 + (rng.next_u32() % 6) as usize;
        let bits = random_bits(&mut rng, n);
        assert_eq!(berlekamp_massey(&bits), shortest_lfsr(&bits), "{bits:?}");
    }
}

/// Textbook elimination over byte matrices, one bit per byte.
fn naive_rank(mut m: Vec<Vec<u8>>) -> u32 {
    let rows = m.len();
    let cols = m[0].len();
    let mut rank = 0usize;
    for c in 0..cols {
        if let Some(pivot) = (rank..rows).find(|&r| m[r][c] == 1) {
            m.swap(rank, pivot);
            for r in 0..rows {
                if r != rank && m[r][c] == 1 {
                    for cc in 0..cols {
                        m[r][cc] ^= m[rank][cc];
                    }
                }
            }
            rank += 1;
        }
    }
    rank as u32
}

#[test]
fn packed_rank_matches_naive_elimination() {
    let mut rng = Rng::seed_from_u64(0x5eed_0002);
    for _ in 0..500 {
        let mut packed = [0u32; MATRIX_DIM];
        let mut bytes = vec![vec![0u8; MATRIX_DIM]; MATRIX_DIM];
        for r in 0..MATRIX_DIM {
            let w = rng.next_u32();
            packed[r] = w;
            for c in 0..MATRIX_DIM {
                bytes[r][c] = ((w >> c) & 1) as u8;
            }
        }
        assert_eq!(gf2_rank(&mut packed), naive_rank(bytes));
    }
}

#[test]
fn packed_rank_matches_naive_on_structured_matrices() {
    // Identity, zero, one repeated row, upper triangular of ones.
    let cases: Vec<[u32; MATRIX_DIM]> = vec![
        std::array::from_fn(|i| 1u32 << i),
        [0u32; MATRIX_DIM],
        [0xdead_beefu32; MATRIX_DIM],
        std::array::from_fn(|i| u32::MAX << i),
    ];
    for packed in cases {
        let bytes: Vec<Vec<u8>> = (0..MATRIX_DIM)
            .map(|r| (0..MATRIX_DIM).map(|c| ((packed[r] >> c) & 1) as u8).collect())
            .collect();
        assert_eq!(gf2_rank(&mut packed.clone()), naive_rank(bytes));
    }
}

#[test]
fn rank_bucket_probabilities_match_monte_carlo() {
    let mut rng = Rng::seed_from_u64(0x5eed_0003);
    let trials = 50_000u32;
    let mut full = 0u32;
    let mut minus1 = 0u32;
    for _ in 0..trials {
        let mut m: [u32; MATRIX_DIM] = std::array::from_fn(|_| rng.next_u32());
        match MATRIX_DIM as u32 - gf2_rank(&mut m) {
            0 => full += 1,
            1 => minus1 += 1,
            _ => {}
        }
    }
    // 4 sigma on a binomial proportion at n = 50000 is about 0.009.
    let f_full = f64::from(full) / f64::from(trials);
    let f_minus1 = f64::from(minus1) / f64::from(trials);
    assert!((f_full - rank_probability(32, 0)).abs() < 0.009, "{f_full}");
    assert!((f_minus1 - rank_probability(32, 1)).abs() < 0.009, "{f_minus1}");
}

/// O(n^2) transform straight off the definition.
fn direct_half_spectrum(bits: &[u8]) -> Vec<f64> {
    let n = bits.len();
    let x: Vec<f64> = bits.iter().map(|&b| 2.0 * f64::from(b) - 1.0).collect();
    (0..n / 2)
        .map(|j| {
            let (mut re, mut im) = (0.0f64, 0.0f64);
            for (i, &v) in x.iter().enumerate() {
                let ang = -2.0 * std::f64::consts::PI * (j * i) as f64 / n as f64;
                re += v * ang.cos();
                im += v * ang.sin();
            }
            re.hypot(im)
        })
        .collect()
}

#[test]
fn fft_magnitudes_match_direct_transform() {
    let mut rng = Rng::seed_from_u64(0x5eed_0004);
    for &n in &[2usize, 3, 5, 16, 100, 257, 511, 1000, 1024] {
        let bits = random_bits(&mut rng, n);
        let fast = half_spectrum(&bits);
        let slow = direct_half_spectrum(&bits);
        assert_eq!(fast.len(), slow.len());
        for (k, (a, b)) in fast.iter().zip(&slow).enumerate() {
            assert!((a - b).abs() < 1e-9, "n={n}, bin {k}: {a} vs {b}");
        }
    }
}

fn naive_circular_counts(bits: &[u8], m: usize) -> Vec<u64> {
    let n = bits.len();
    let mut counts = vec![0u64; 1 << m];
    for i in 0..n {
        let mut idx = 0usize;
        for j in 0..m {
            idx = (idx << 1) | bits[(i + j) % n] as usize;
        }
        counts[idx] += 1;
    }
    counts
}

#[test]
fn sliding_pattern_counts_match_naive_modulo_scan() {
    let mut rng = Rng::seed_from_u64(0x5eed_0005);
    for _ in 0..60 {
        let n = 1 + (rng.next_u32() % 200) as usize;
        let bits = random_bits(&mut rng, n);
        for m in 1..=8usize {
            assert_eq!(
                circular_counts(&bits, m),
                naive_circular_counts(&bits, m),
                "n={n}, m={m}"
            );
        }
    }
}

fn naive_overlapping(block: &[u8], t: &[u8]) -> u64 {
    if t.len() > block.len() {
        return 0;
    }
    block.windows(t.len()).filter(|w| *w == t).count() as u64
}

/// Leftmost-greedy selection over all match positions; equivalent to the
/// skip-ahead scan by exchange argument.
fn naive_non_overlapping(block: &[u8], t: &[u8]) -> u64 {
    if t.len() > block.len() {
        return 0;
    }
    let mut count = 0u64;
    let mut next_free = 0usize;
    for (j, w) in block.windows(t.len()).enumerate() {
        if j >= next_free && w == t {
            count += 1;
            next_free = j + t.len();
        }
    }
    count
}

#[test]
fn template_scans_match_naive_counters() {
    let mut rng = Rng::seed_from_u64(0x5eed_0006);
    for _ in 0..80 {
        let n = 1 + (rng.next_u32() % 120) as usize;
        let bits = random_bits(&mut rng, n);
        for m in 1..=6usize {
            let t = random_bits(&mut rng, m);
            assert_eq!(overlapping_matches(&bits, &t), naive_overlapping(&bits, &t));
            assert_eq!(
                non_overlapping_matches(&bits, &t),
                naive_non_overlapping(&bits, &t)
            );
        }
    }
}
