//! Full statistical battery: runs every test in report order over one
//! bit sequence and collects the per-test outcomes.

use thiserror::Error;

use crate::complexity::linear_complexity;
use crate::cusum::{cumulative_sums, CusumMode};
use crate::dft::discrete_fourier_transform;
use crate::excursions::{random_excursions, random_excursions_variant};
use crate::frequency::{block_frequency, frequency_monobit};
use crate::params::TestParams;
use crate::patterns::{approximate_entropy, serial};
use crate::rank::matrix_rank;
use crate::result::{BatteryReport, TestId, TestResult, Verdict};
use crate::runs::{longest_run, runs};
use crate::templates::{non_overlapping_template, overlapping_template};

/// Length floor for the battery as a whole; individual tests may still
/// declare themselves not applicable above it.
pub const MIN_BATTERY_BITS: usize = 100;

#[derive(Debug, Error)]
pub enum BatteryError {
    #[error("sequence of {n} bits is too short for the battery (minimum {min})")]
    InputTooShort { n: usize, min: usize },
    #[error("sequence contains a byte that is not 0 or 1")]
    NotABitStream,
}

fn dispatch(id: TestId, bits: &[u8], params: &TestParams) -> TestResult {
    match id {
        TestId::Frequency => frequency_monobit(bits, params),
        TestId::BlockFrequency => block_frequency(bits, params),
        TestId::Runs => runs(bits, params),
        TestId::LongestRun => longest_run(bits, params),
        TestId::Rank => matrix_rank(bits, params),
        TestId::Dft => discrete_fourier_transform(bits, params),
        TestId::NonOverlappingTemplate => non_overlapping_template(bits, params),
        TestId::OverlappingTemplate => overlapping_template(bits, params),
        TestId::LinearComplexity => linear_complexity(bits, params),
        TestId::Serial => serial(bits, params),
        TestId::ApproximateEntropy => approximate_entropy(bits, params),
        TestId::CumulativeSumsForward => cumulative_sums(bits, CusumMode::Forward, params),
        TestId::CumulativeSumsReverse => cumulative_sums(bits, CusumMode::Reverse, params),
        TestId::RandomExcursions => random_excursions(bits, params),
        TestId::RandomExcursionsVariant => random_excursions_variant(bits, params),
    }
}

/// Run all fifteen tests in report order. Not-applicable rows never fail
/// the battery.
pub fn run_battery(bits: &[u8], params: &TestParams) -> Result<BatteryReport, BatteryError> {
    if bits.len() < MIN_BATTERY_BITS {
        return Err(BatteryError::InputTooShort {
            n: bits.len(),
            min: MIN_BATTERY_BITS,
        });
    }
    if bits.iter().any(|&b| b > 1) {
        return Err(BatteryError::NotABitStream);
    }
    let results: Vec<TestResult> = TestId::ROW_ORDER
        .iter()
        .map(|&id| dispatch(id, bits, params))
        .collect();
    let all_pass = results.iter().all(|r| r.verdict != Verdict::Fail);
    Ok(BatteryReport {
        n: bits.len() as u64,
        alpha: params.alpha,
        results,
        all_pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::result::Verdict;
    use rand_core::{RngCore, SeedableRng};

    fn random_bits(seed: u64, count: usize) -> Vec<u8> {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
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

    #[test]
    fn short_input_is_an_error() {
        let bits = vec![0u8, 1].repeat(49); // 98 bits
        match run_battery(&bits, &TestParams::default()) {
            Err(BatteryError::InputTooShort { n: 98, min: 100 }) => {}
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn non_binary_input_is_an_error() {
        let mut bits = vec![0u8; 200];
        bits[17] = 2;
        assert!(matches!(
            run_battery(&bits, &TestParams::default()),
            Err(BatteryError::NotABitStream)
        ));
    }

    #[test]
    fn rows_come_back_in_report_order() {
        let bits = random_bits(5, 4096);
        let report = run_battery(&bits, &TestParams::for_length(bits.len())).unwrap();
        assert_eq!(report.results.len(), 15);
        for (result, &id) in report.results.iter().zip(TestId::ROW_ORDER.iter()) {
            assert_eq!(result.id, id);
        }
        assert_eq!(report.n, 4096);
    }

    #[test]
    fn good_random_stream_passes_everything_applicable() {
        let bits = random_bits(424242, 1 << 17);
        let report = run_battery(&bits, &TestParams::for_length(bits.len())).unwrap();
        for r in &report.results {
            assert_ne!(
                r.verdict,
                Verdict::Fail,
                "{} failed with p={:?}",
                r.id.display_name(),
                r.p_values
            );
        }
        assert!(report.all_pass);
    }

    #[test]
    fn constant_stream_fails_but_never_errors() {
        let bits = vec![1u8; 1000];
        let report = run_battery(&bits, &TestParams::for_length(bits.len())).unwrap();
        assert!(!report.all_pass);
        assert_eq!(report.result(TestId::Frequency).verdict, Verdict::Fail);
        // Excursions cannot form cycles on a one-sided walk.
        let exc = report.result(TestId::RandomExcursions);
        assert_eq!(exc.verdict, Verdict::NotApplicable);
    }

    #[test]
    fn not_applicable_rows_do_not_fail_battery() {
        // 4096 random bits: rank (needs 38 matrices) and excursions are
        // N.A., everything else should pass for this seed.
        let bits = random_bits(99, 4096);
        let report = run_battery(&bits, &TestParams::for_length(bits.len())).unwrap();
        assert_eq!(report.result(TestId::Rank).verdict, Verdict::NotApplicable);
        assert!(report.all_pass, "{report:?}");
    }
}
