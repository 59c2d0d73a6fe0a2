//! Random excursions tests: per-cycle visit counts of the cumulative-sum
//! walk at small states, and total visit counts at a wider state range.

use crate::params::TestParams;
use crate::result::{TestId, TestResult};
use crate::special::{erfc, igamc};
use crate::debug_assert_bits;

/// States examined by the per-cycle test, in reported order.
pub const MAIN_STATES: [i64; 8] = [-4, -3, -2, -1, 1, 2, 3, 4];
/// States examined by the total-visits variant, in reported order.
pub const VARIANT_STATES: [i64; 18] = [
    -9, -8, -7, -6, -5, -4, -3, -2, -1, 1, 2, 3, 4, 5, 6, 7, 8, 9,
];
/// Below this many cycles the bucket law is unreliable.
const MIN_CYCLES: u64 = 500;

/// Raw walk census: cycle count, per-cycle visit buckets for the eight
/// small states (0..=5+ visits), and total visits for the wider range.
#[derive(Debug, Clone)]
pub struct ExcursionCensus {
    /// Number of zero-to-zero cycles (the tail after the last return
    /// counts as one).
    pub cycles: u64,
    /// cycle_buckets[state][k]: cycles visiting MAIN_STATES[state]
    /// exactly k times (k = 5 means five or more).
    pub cycle_buckets: [[u64; 6]; 8],
    /// visits[i]: total visits to VARIANT_STATES[i].
    pub visits: [u64; 18],
}

pub fn excursion_census(bits: &[u8]) -> ExcursionCensus {
    debug_assert_bits(bits);
    let mut census = ExcursionCensus {
        cycles: 0,
        cycle_buckets: [[0; 6]; 8],
        visits: [0; 18],
    };
    let mut in_cycle = [0u64; 8];
    let flush = |in_cycle: &mut [u64; 8], census: &mut ExcursionCensus| {
        census.cycles += 1;
        for (state, count) in in_cycle.iter_mut().enumerate() {
            census.cycle_buckets[state][(*count).min(5) as usize] += 1;
            *count = 0;
        }
    };
    let mut s = 0i64;
    for &b in bits {
        s += 2 * i64::from(b) - 1;
        if s == 0 {
            flush(&mut in_cycle, &mut census);
        } else {
            if (-4..=4).contains(&s) {
                let idx = if s < 0 { s + 4 } else { s + 3 } as usize;
                in_cycle[idx] += 1;
            }
            if (-9..=9).contains(&s) {
                let idx = if s < 0 { s + 9 } else { s + 8 } as usize;
                census.visits[idx] += 1;
            }
        }
    }
    if s != 0 {
        flush(&mut in_cycle, &mut census);
    }
    census
}

/// P(state x is visited exactly k times in one cycle), k = 5 meaning 5+.
pub fn visit_probability(x: i64, k: usize) -> f64 {
    let ax = x.unsigned_abs() as f64;
    let stay = 1.0 - 1.0 / (2.0 * ax);
    match k {
        0 => stay,
        1..=4 => stay.powi(k as i32 - 1) / (4.0 * ax * ax),
        _ => stay.powi(4) / (2.0 * ax),
    }
}

pub fn random_excursions(bits: &[u8], params: &TestParams) -> TestResult {
    let census = excursion_census(bits);
    let j = census.cycles;
    if j < MIN_CYCLES {
        return TestResult::not_applicable(
            TestId::RandomExcursions,
            format!("only {j} walk cycles, need {MIN_CYCLES}"),
        );
    }
    let jf = j as f64;
    let p_values: Vec<f64> = MAIN_STATES
        .iter()
        .enumerate()
        .map(|(idx, &x)| {
            let chi2: f64 = (0..6)
                .map(|k| {
                    let e = jf * visit_probability(x, k);
                    let obs = census.cycle_buckets[idx][k] as f64;
                    (obs - e) * (obs - e) / e
                })
                .sum();
            igamc(2.5, chi2 / 2.0)
        })
        .collect();
    TestResult::from_p_values(
        TestId::RandomExcursions,
        p_values,
        vec![("J".into(), jf)],
        params.alpha,
    )
}

pub fn random_excursions_variant(bits: &[u8], params: &TestParams) -> TestResult {
    let census = excursion_census(bits);
    let j = census.cycles;
    if j < MIN_CYCLES {
        return TestResult::not_applicable(
            TestId::RandomExcursionsVariant,
            format!("only {j} walk cycles, need {MIN_CYCLES}"),
        );
    }
    let jf = j as f64;
    let p_values: Vec<f64> = VARIANT_STATES
        .iter()
        .enumerate()
        .map(|(idx, &x)| {
            let xi = census.visits[idx] as f64;
            let denom = (2.0 * jf * (4.0 * x.abs() as f64 - 2.0)).sqrt();
            erfc((xi - jf).abs() / denom)
        })
        .collect();
    TestResult::from_p_values(
        TestId::RandomExcursionsVariant,
        p_values,
        vec![("J".into(), jf)],
        params.alpha,
    )
}
