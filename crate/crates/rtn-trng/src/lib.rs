//! Simulation of a two-state random telegraph noise (RTN) signal and
//! extraction of random bits from its transition timing.
//!
//! The crate is organized around a small pipeline:
//!
//! * [`backends`] supplies uniform variates from the OS, a seeded CSPRNG,
//!   a deliberately weak LCG, a quantum-RNG web service cache, or a replay
//!   file.
//! * [`markov`] turns variates into a two-state discrete-time Markov chain:
//!   the simulated RTN signal.
//! * [`analog`] optionally synthesizes a noisy two-level waveform from the
//!   digital trace and recovers it with a low-pass reference and a
//!   hysteresis comparator.
//! * [`extractor`] measures the time between signal transitions with a
//!   wrap-around counter, truncates high-order counter bits, and packs the
//!   remainder into a bit stream.

pub mod analog;
pub mod backends;
pub mod extractor;
pub mod markov;
pub mod qrng;

pub use analog::AnalogParams;
pub use backends::{BackendError, BackendSpec, EntropySource, UniformVariate};
pub use extractor::{BitStream, EdgePolicy, ExtractorConfig};
pub use markov::{Direction, DigitalTrace, RtnParams, TransitionEvent, TransitionProbs};
