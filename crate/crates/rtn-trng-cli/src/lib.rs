//! End-to-end random bit pipeline: simulate a two-state random telegraph
//! signal, extract bits from its transition timing, grade them with a
//! NIST SP 800-22 battery, and report the outcome.
//!
//! The [`config::Cli`] type is the flag surface of the `rtn-trng` binary;
//! [`pipeline::run_pipeline`] maps a resolved configuration to the
//! process exit code (0 all applicable tests pass, 1 a test fails,
//! 2 operational error). Everything in between is a plain library call,
//! so runs are scriptable and reproducible in tests.

pub mod bitfile;
pub mod config;
pub mod pipeline;
pub mod report;

pub use bitfile::{read_bitstream, write_bitstream, BitFileError, FileFormat};
pub use config::{Cli, PipelineConfig, ReportChoice};
pub use pipeline::{execute, generate, run_pipeline, GenerationMetadata, PipelineError};
