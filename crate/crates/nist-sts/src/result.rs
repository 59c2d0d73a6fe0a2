//! Test identities, per-test results and the aggregated battery report.

use serde::Serialize;

/// The fifteen summary rows, in report order. The two cumulative-sums
/// directions are separate rows of the one test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestId {
    Frequency,
    BlockFrequency,
    Runs,
    LongestRun,
    Rank,
    Dft,
    NonOverlappingTemplate,
    OverlappingTemplate,
    LinearComplexity,
    Serial,
    ApproximateEntropy,
    CumulativeSumsForward,
    CumulativeSumsReverse,
    RandomExcursions,
    RandomExcursionsVariant,
}

impl TestId {
    /// Fixed report row order.
    pub const ROW_ORDER: [TestId; 15] = [
        TestId::Frequency,
        TestId::BlockFrequency,
        TestId::Runs,
        TestId::LongestRun,
        TestId::Rank,
        TestId::Dft,
        TestId::NonOverlappingTemplate,
        TestId::OverlappingTemplate,
        TestId::LinearComplexity,
        TestId::Serial,
        TestId::ApproximateEntropy,
        TestId::CumulativeSumsForward,
        TestId::CumulativeSumsReverse,
        TestId::RandomExcursions,
        TestId::RandomExcursionsVariant,
    ];

    pub fn display_name(self) -> &'static str {
        match self {
            TestId::Frequency => "Frequency Test (Monobit)",
            TestId::BlockFrequency => "Frequency Test within a Block",
            TestId::Runs => "Run Test",
            TestId::LongestRun => "Longest Run of Ones in a Block",
            TestId::Rank => "Binary Matrix Rank Test",
            TestId::Dft => "Discrete Fourier Transform",
            TestId::NonOverlappingTemplate => "Non-Overlapping Template Matching",
            TestId::OverlappingTemplate => "Overlapping Template Matching",
            TestId::LinearComplexity => "Linear Complexity Test",
            TestId::Serial => "Serial Test",
            TestId::ApproximateEntropy => "Approximate Entropy Test",
            TestId::CumulativeSumsForward => "Cumulative Sums (Forward) Test",
            TestId::CumulativeSumsReverse => "Cumulative Sums (Reverse) Test",
            TestId::RandomExcursions => "Random Excursions Test",
            TestId::RandomExcursionsVariant => "Random Excursions Variant Test",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    /// The input does not meet the test's applicability requirements;
    /// the row carries a reason instead of P-values.
    NotApplicable,
}

#[derive(Clone, Debug, Serialize)]
pub struct TestResult {
    pub id: TestId,
    /// One entry for single-statistic tests; one per template, state or
    /// direction for the multi-valued tests. Empty iff NotApplicable.
    pub p_values: Vec<f64>,
    /// Named intermediate statistics for the structured report.
    pub statistics: Vec<(String, f64)>,
    pub verdict: Verdict,
    pub na_reason: Option<String>,
    pub warnings: Vec<String>,
}

impl TestResult {
    /// Pass iff every P-value clears the significance level.
    pub fn from_p_values(
        id: TestId,
        p_values: Vec<f64>,
        statistics: Vec<(String, f64)>,
        alpha: f64,
    ) -> Self {
        debug_assert!(!p_values.is_empty());
        debug_assert!(
            p_values.iter().all(|p| (0.0..=1.0).contains(p)),
            "{id:?}: P-value outside [0,1]: {p_values:?}"
        );
        let verdict = if p_values.iter().all(|&p| p >= alpha) {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        TestResult {
            id,
            p_values,
            statistics,
            verdict,
            na_reason: None,
            warnings: Vec::new(),
        }
    }

    pub fn not_applicable(id: TestId, reason: impl Into<String>) -> Self {
        TestResult {
            id,
            p_values: Vec::new(),
            statistics: Vec::new(),
            verdict: Verdict::NotApplicable,
            na_reason: Some(reason.into()),
            warnings: Vec::new(),
        }
    }

    pub fn with_warning(mut self, warning: impl Into<String>) -> Self {
        self.warnings.push(warning.into());
        self
    }

    /// Smallest P-value, the summary figure for multi-valued tests.
    pub fn min_p(&self) -> Option<f64> {
        self.p_values.iter().copied().reduce(f64::min)
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BatteryReport {
    /// Bits tested.
    pub n: u64,
    pub alpha: f64,
    /// Fifteen rows in [`TestId::ROW_ORDER`].
    pub results: Vec<TestResult>,
    /// True iff no applicable row failed.
    pub all_pass: bool,
}

impl BatteryReport {
    pub fn result(&self, id: TestId) -> &TestResult {
        self.results
            .iter()
            .find(|r| r.id == id)
            .expect("report always holds all rows")
    }
}
