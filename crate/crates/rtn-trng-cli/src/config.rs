//! Command-line surface and the resolved pipeline configuration.

use std::path::PathBuf;

use clap::Parser;
use serde::Serialize;

use nist_sts::{TemplateSet, TestParams};
use rtn_trng::{AnalogParams, BackendSpec, EdgePolicy, ExtractorConfig, RtnParams};

use crate::bitfile::FileFormat;
use crate::pipeline::PipelineError;

/// Environment variable that overrides the QRNG service base URL, taking
/// precedence over any URL given in `--backend qrng:<url>`.
pub const QRNG_URL_ENV: &str = "RTN_TRNG_QRNG_URL";

/// Fewest bits the battery accepts, and therefore the least a CLI run may
/// request.
pub const MIN_TARGET_BITS: u64 = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeChoice {
    /// Read the counter on every transition.
    Both,
    /// Read on 0 -> 1 transitions only.
    Rising,
    /// Read on 1 -> 0 transitions only.
    Falling,
}

impl From<EdgeChoice> for EdgePolicy {
    fn from(choice: EdgeChoice) -> Self {
        match choice {
            EdgeChoice::Both => EdgePolicy::Both,
            EdgeChoice::Rising => EdgePolicy::RisingOnly,
            EdgeChoice::Falling => EdgePolicy::FallingOnly,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum TemplateChoice {
    /// Single canonical template 000000001.
    Canonical,
    /// All aperiodic templates of the configured length.
    AllAperiodic,
}

impl From<TemplateChoice> for TemplateSet {
    fn from(choice: TemplateChoice) -> Self {
        match choice {
            TemplateChoice::Canonical => TemplateSet::Canonical,
            TemplateChoice::AllAperiodic => TemplateSet::AllAperiodic,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ReportChoice {
    /// Fixed-order text table, one row per test.
    Table,
    /// Full machine-readable document: config, metadata, all p-values.
    Json,
}

/// Simulate a two-state random telegraph signal, extract random bits from
/// its transition timing, and grade them with a NIST SP 800-22 battery.
#[derive(Debug, Parser)]
#[command(name = "rtn-trng", version, about, allow_negative_numbers = true)]
pub struct Cli {
    /// Mean dwell time in the high state (units of --dt).
    #[arg(long, default_value_t = 2500.0)]
    pub tau_c: f64,

    /// Mean dwell time in the low state (units of --dt).
    #[arg(long, default_value_t = 2500.0)]
    pub tau_e: f64,

    /// Simulation tick duration.
    #[arg(long, default_value_t = 1.0)]
    pub dt: f64,

    /// Interval counter width W in bits (1..=32).
    #[arg(long, default_value_t = 8)]
    pub counter_width: u32,

    /// Most-significant counter bits discarded per read (< W).
    #[arg(long, default_value_t = 2)]
    pub discard_msb: u32,

    /// Which signal transitions trigger a counter read.
    #[arg(long, value_enum, default_value_t = EdgeChoice::Both)]
    pub edges: EdgeChoice,

    /// Signal ticks per counter increment.
    #[arg(long, default_value_t = 1)]
    pub clock_div: u64,

    /// Random bits to produce (at least 100).
    #[arg(long, default_value_t = 111_072)]
    pub bits: u64,

    /// Entropy source: os, seeded:<seed>, weak-lcg:<seed>, qrng[:<url>],
    /// or file:<path>. RTN_TRNG_QRNG_URL overrides the qrng URL.
    #[arg(long, default_value = "os")]
    pub backend: String,

    /// Route the signal through the analog stage (noise, low-pass
    /// reference, hysteresis comparator) before edge detection.
    #[arg(long)]
    pub analog: bool,

    /// Analog level for the high state.
    #[arg(long, default_value_t = 1.0)]
    pub v_high: f64,

    /// Analog level for the low state.
    #[arg(long, default_value_t = 0.0)]
    pub v_low: f64,

    /// Standard deviation of additive Gaussian noise on the waveform.
    #[arg(long, default_value_t = 0.05)]
    pub noise_sigma: f64,

    /// Moving-average window (ticks) for the comparator reference.
    #[arg(long, default_value_t = 16_384)]
    pub lp_window: usize,

    /// Comparator dead-band half-width.
    #[arg(long, default_value_t = 0.0)]
    pub hysteresis: f64,

    /// Write the generated bits to this path.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Bit file encoding for --out and --input.
    #[arg(long, value_enum, default_value_t = FileFormat::Raw)]
    pub format: FileFormat,

    /// Report style printed to stdout.
    #[arg(long, value_enum, default_value_t = ReportChoice::Table)]
    pub report: ReportChoice,

    /// Significance level: a test fails when any of its P-values drops
    /// below this.
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,

    /// Skip generation and grade an existing bit file instead.
    #[arg(long)]
    pub input: Option<PathBuf>,

    /// Template set for the non-overlapping matching test.
    #[arg(long, value_enum, default_value_t = TemplateChoice::Canonical)]
    pub templates: TemplateChoice,

    /// Cache file for QRNG words (qrng backend only).
    #[arg(long)]
    pub qrng_cache: Option<PathBuf>,

    /// uint16 samples requested per QRNG refill (qrng backend only).
    #[arg(long)]
    pub qrng_batch: Option<usize>,
}

impl Default for Cli {
    fn default() -> Self {
        Cli::parse_from(["rtn-trng"])
    }
}

/// Everything a pipeline run needs, fully resolved and serializable.
#[derive(Clone, Debug, Serialize)]
pub struct PipelineConfig {
    pub rtn: RtnParams,
    pub extractor: ExtractorConfig,
    pub backend: BackendSpec,
    pub target_bits: u64,
    /// Analog stage parameters; generation is purely digital when absent.
    pub analog: Option<AnalogParams>,
    pub test_params: TestParams,
    pub out: Option<PathBuf>,
    pub format: FileFormat,
    pub report: ReportChoice,
    /// Existing bit file to grade instead of generating.
    pub input: Option<PathBuf>,
}

impl PipelineConfig {
    /// Configuration for a plain seeded run with everything else at
    /// defaults; the usual starting point for tests.
    pub fn seeded(seed: u64) -> Self {
        PipelineConfig {
            rtn: RtnParams::default(),
            extractor: ExtractorConfig::default(),
            backend: BackendSpec::Seeded { seed },
            target_bits: 111_072,
            analog: None,
            test_params: TestParams::for_length(111_072),
            out: None,
            format: FileFormat::Raw,
            report: ReportChoice::Table,
            input: None,
        }
    }
}

impl Cli {
    /// Validates the flag combination and produces a run configuration.
    pub fn resolve(&self) -> Result<PipelineConfig, PipelineError> {
        let invalid = |msg: String| Err(PipelineError::Config(msg));

        let mut backend: BackendSpec = self
            .backend
            .parse()
            .map_err(|e: rtn_trng::BackendError| PipelineError::Config(e.to_string()))?;

        match &mut backend {
            BackendSpec::QrngHttp {
                base_url,
                batch_size,
                cache_path,
            } => {
                if let Ok(url) = std::env::var(QRNG_URL_ENV) {
                    *base_url = url;
                }
                if let Some(cache) = &self.qrng_cache {
                    *cache_path = cache.clone();
                }
                if let Some(batch) = self.qrng_batch {
                    *batch_size = batch;
                }
            }
            _ => {
                if self.qrng_cache.is_some() || self.qrng_batch.is_some() {
                    return invalid(format!(
                        "--qrng-cache and --qrng-batch only apply to the qrng \
                         backend, not '{}'",
                        self.backend
                    ));
                }
            }
        }

        if self.input.is_none() && self.bits < MIN_TARGET_BITS {
            return invalid(format!(
                "--bits {} is below the battery minimum of {MIN_TARGET_BITS}",
                self.bits
            ));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return invalid(format!(
                "--alpha must lie strictly between 0 and 1, got {}",
                self.alpha
            ));
        }

        let rtn = RtnParams {
            tau_c: self.tau_c,
            tau_e: self.tau_e,
            dt: self.dt,
        };
        let extractor = ExtractorConfig {
            counter_width: self.counter_width,
            discard_msb: self.discard_msb,
            clock_div: self.clock_div,
            edges: self.edges.into(),
        };
        let analog = self.analog.then(|| AnalogParams {
            v_high: self.v_high,
            v_low: self.v_low,
            noise_sigma: self.noise_sigma,
            lp_window: self.lp_window,
            hysteresis: self.hysteresis,
        });

        // Battery parameters follow the number of bits the battery will
        // actually see; with --input that is only known once the file is
        // read, so the pipeline rescales them (keeping alpha and the
        // template choice) at that point.
        let test_params = TestParams {
            alpha: self.alpha,
            templates: self.templates.into(),
            ..TestParams::for_length(self.bits as usize)
        };

        Ok(PipelineConfig {
            rtn,
            extractor,
            backend,
            target_bits: self.bits,
            analog,
            test_params,
            out: self.out.clone(),
            format: self.format,
            report: self.report,
            input: self.input.clone(),
        })
    }
}
