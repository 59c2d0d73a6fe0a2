//! Run orchestration: generate (or load) bits, optionally persist them,
//! grade them with the battery, render a report, map to an exit code.

use serde::Serialize;
use thiserror::Error;

use nist_sts::{run_battery, BatteryError, BatteryReport, TestParams};
use rtn_trng::analog::{AnalogError, RecoveredEventStream};
use rtn_trng::extractor::{bias_warning, pack, predict_bit_bias, ExtractError, WordStream};
use rtn_trng::markov::{EventStream, RtnError};
use rtn_trng::{BackendError, BitStream, EdgePolicy, TransitionEvent};

use crate::bitfile::{self, BitFileError};
use crate::config::{PipelineConfig, ReportChoice, MIN_TARGET_BITS};
use crate::report;

/// Operational failures; every variant maps to exit code 2.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("entropy backend failed: {0}")]
    Backend(#[source] BackendError),
    #[error("entropy ran out after {produced} of {target} bits ({shortfall} short)")]
    Shortfall {
        produced: u64,
        target: u64,
        shortfall: u64,
    },
    #[error(transparent)]
    BitFile(#[from] BitFileError),
    #[error("battery rejected the input: {0}")]
    Battery(#[from] BatteryError),
}

fn rtn_error(e: RtnError) -> PipelineError {
    match e {
        RtnError::Backend(b) => PipelineError::Backend(b),
        other => PipelineError::Config(other.to_string()),
    }
}

fn analog_error(e: AnalogError) -> PipelineError {
    match e {
        AnalogError::Backend(b) => PipelineError::Backend(b),
        other => PipelineError::Config(other.to_string()),
    }
}

/// Everything a run records about how its bits came to be.
#[derive(Clone, Debug, Serialize)]
pub struct GenerationMetadata {
    /// Backend self-description, including any seed.
    pub backend: String,
    /// Markov ticks stepped.
    pub ticks_simulated: u64,
    /// Raw words drawn from the backend. Equals `ticks_simulated` for
    /// digital runs; analog runs draw extra words for waveform noise.
    pub variates_consumed: u64,
    /// Signal transitions observed, selected or not.
    pub events_observed: u64,
    /// Transitions matching the edge policy.
    pub events_selected: u64,
    /// Inter-event intervals converted to counter words. One fewer than
    /// the selected events: the first selected edge only arms the counter.
    pub intervals_used: u64,
    pub bits_produced: u64,
    /// Words spent on analog noise deviates; absent for digital runs.
    pub noise_variates: Option<u64>,
    /// Modeled |P(bit=1) - 1/2| per kept counter bit, LSB first.
    pub predicted_bit_bias: Vec<f64>,
    pub warnings: Vec<String>,
}

#[derive(Debug)]
pub struct GenerationOutput {
    pub stream: BitStream,
    pub metadata: GenerationMetadata,
}

/// Result of a full run, before exit-code mapping.
#[derive(Debug)]
pub struct RunOutcome {
    pub report: BatteryReport,
    /// Report text exactly as printed to stdout.
    pub rendered: String,
    /// Present unless the bits came from `--input`.
    pub metadata: Option<GenerationMetadata>,
}

/// Mean selected-edge interval in counter counts. Both-edge reads span a
/// single dwell; single-edge reads span a full period (one dwell in each
/// state). This is the `tau_eff` the bias model runs on.
pub fn effective_tau(config: &PipelineConfig) -> f64 {
    let period_ticks = (config.rtn.tau_c + config.rtn.tau_e) / config.rtn.dt;
    let interval_ticks = match config.extractor.edges {
        EdgePolicy::Both => period_ticks / 2.0,
        EdgePolicy::RisingOnly | EdgePolicy::FallingOnly => period_ticks,
    };
    interval_ticks / config.extractor.clock_div as f64
}

/// Ends the event stream when a replay source runs dry, so packing can
/// report exactly how many bits were produced and how many are missing.
/// Other backend failures stay hard errors.
struct UntilExhausted<I> {
    inner: I,
}

impl<I> UntilExhausted<I> {
    fn inner(&self) -> &I {
        &self.inner
    }
}

impl<I: Iterator<Item = Result<TransitionEvent, BackendError>>> Iterator for UntilExhausted<I> {
    type Item = Result<TransitionEvent, BackendError>;

    fn next(&mut self) -> Option<Self::Item> {
        match self.inner.next() {
            Some(Err(BackendError::ReplayExhausted { .. })) => None,
            other => other,
        }
    }
}

struct Counters {
    ticks: u64,
    events_observed: u64,
    events_selected: u64,
    intervals_used: u64,
}

fn drive<I>(
    events: I,
    config: &PipelineConfig,
    ticks_of: impl Fn(&I) -> u64,
) -> Result<(BitStream, Counters), PipelineError>
where
    I: Iterator<Item = Result<TransitionEvent, BackendError>>,
{
    let mut words = WordStream::new(UntilExhausted { inner: events }, config.extractor)
        .map_err(|e| PipelineError::Config(e.to_string()))?;
    let packed = pack(
        &mut words,
        config.extractor.kept_bits(),
        config.target_bits,
    );
    let counters = Counters {
        ticks: ticks_of(words.source().inner()),
        events_observed: words.events_seen(),
        events_selected: words.events_selected(),
        intervals_used: words.intervals_used(),
    };
    let stream = packed.map_err(|e| match e {
        ExtractError::SupplyExhausted {
            bits_filled,
            bits_needed,
            ..
        } => PipelineError::Shortfall {
            produced: bits_filled,
            target: bits_needed,
            shortfall: bits_needed - bits_filled,
        },
        ExtractError::Backend(b) => PipelineError::Backend(b),
        ExtractError::InvalidConfig(msg) => PipelineError::Config(msg),
    })?;
    Ok((stream, counters))
}

/// Runs the signal simulation and extraction until `target_bits` bits
/// exist, returning them with full accounting of what was consumed.
pub fn generate(config: &PipelineConfig) -> Result<GenerationOutput, PipelineError> {
    let mut backend = config.backend.build().map_err(PipelineError::Backend)?;

    let (stream, counters) = match &config.analog {
        Some(analog) => {
            let events = RecoveredEventStream::new(&config.rtn, analog, backend.as_mut())
                .map_err(analog_error)?;
            drive(events, config, |ev| ev.ticks())?
        }
        None => {
            let events =
                EventStream::new(&config.rtn, backend.as_mut()).map_err(rtn_error)?;
            drive(events, config, |ev| ev.ticks())?
        }
    };

    let tau_eff = effective_tau(config);
    let variates_consumed = backend.consumed();
    let metadata = GenerationMetadata {
        backend: backend.describe(),
        ticks_simulated: counters.ticks,
        variates_consumed,
        events_observed: counters.events_observed,
        events_selected: counters.events_selected,
        intervals_used: counters.intervals_used,
        bits_produced: stream.bit_count(),
        noise_variates: config
            .analog
            .is_some()
            .then(|| variates_consumed - counters.ticks),
        predicted_bit_bias: predict_bit_bias(tau_eff, config.extractor.kept_bits()),
        warnings: bias_warning(tau_eff, &config.extractor)
            .into_iter()
            .collect(),
    };
    Ok(GenerationOutput { stream, metadata })
}

/// Battery parameters for the bits actually graded: autoselected from
/// the true length, keeping the configured alpha and template choice.
/// For a generated stream this is the stored parameter set.
fn battery_params(config: &PipelineConfig, n: usize) -> TestParams {
    if config.input.is_none() {
        return config.test_params.clone();
    }
    TestParams {
        alpha: config.test_params.alpha,
        templates: config.test_params.templates,
        ..TestParams::for_length(n)
    }
}

/// Full run without side effects on the process: returns the battery
/// report and the rendered text instead of printing or exiting.
pub fn execute(config: &PipelineConfig) -> Result<RunOutcome, PipelineError> {
    if config.input.is_none() && config.target_bits < MIN_TARGET_BITS {
        return Err(PipelineError::Config(format!(
            "target of {} bits is below the battery minimum of {MIN_TARGET_BITS}",
            config.target_bits
        )));
    }

    let (stream, metadata) = match &config.input {
        Some(path) => (bitfile::read_bitstream(path, config.format)?, None),
        None => {
            let output = generate(config)?;
            (output.stream, Some(output.metadata))
        }
    };

    if let Some(path) = &config.out {
        bitfile::write_bitstream(&stream, path, config.format)?;
    }

    let bits = stream.to_bits();
    let params = battery_params(config, bits.len());
    let report = run_battery(&bits, &params)?;
    let rendered = match config.report {
        ReportChoice::Table => report::render_table(&report, metadata.as_ref()),
        ReportChoice::Json => report::render_json(config, metadata.as_ref(), &report),
    };
    Ok(RunOutcome {
        report,
        rendered,
        metadata,
    })
}

/// Runs, prints, and maps the outcome to the process exit code:
/// 0 all applicable tests pass, 1 some test fails, 2 operational error.
pub fn run_pipeline(config: &PipelineConfig) -> i32 {
    match execute(config) {
        Ok(outcome) => {
            print!("{}", outcome.rendered);
            if outcome.report.all_pass {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(cause) = source {
                eprintln!("  caused by: {cause}");
                source = cause.source();
            }
            2
        }
    }
}
