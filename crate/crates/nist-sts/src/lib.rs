//! Statistical randomness battery after NIST SP 800-22 Rev. 1a.
//!
//! Input is a bit sequence as a `&[u8]` slice of 0/1 values. Each test
//! returns a [`TestResult`] with one or more P-values and a verdict at the
//! configured significance level; [`battery::run_battery`] runs the full
//! fixed-order suite (Maurer's universal test excluded) and aggregates a
//! [`BatteryReport`].
//!
//! The special-function substrate (`erfc`, regularized incomplete gamma)
//! is self-contained so results do not depend on platform libm quirks.

pub mod battery;
pub mod complexity;
pub mod cusum;
pub mod dft;
pub mod excursions;
pub mod frequency;
pub mod params;
pub mod patterns;
pub mod rank;
pub mod result;
pub mod runs;
pub mod special;
pub mod templates;

pub use battery::{run_battery, BatteryError};
pub use params::{TemplateSet, TestParams};
pub use result::{BatteryReport, TestId, TestResult, Verdict};

/// Cheap sanity check that input really is a bit sequence.
pub(crate) fn debug_assert_bits(bits: &[u8]) {
    debug_assert!(
        bits.iter().all(|&b| b <= 1),
        "input must contain only 0 and 1"
    );
}

/// Number of one bits.
pub(crate) fn count_ones(bits: &[u8]) -> u64 {
    bits.iter().map(|&b| u64::from(b)).sum()
}
