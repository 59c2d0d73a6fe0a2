//! Two-state discrete-time Markov model of a random telegraph signal.
//!
//! State 0 is the low level, state 1 the high level. Each simulated tick
//! draws exactly one uniform variate `u` and applies the transition rule
//!
//! ```text
//! state 0: go high  iff p01 > u        p01 = dt / tau_e
//! state 1: go low   iff p10 > u        p10 = dt / tau_c
//! ```
//!
//! so the dwell time in state 1 is geometric with mean `tau_c / dt` ticks
//! and the dwell time in state 0 geometric with mean `tau_e / dt` ticks.
//! The comparison is strict: `p = 1` forces a transition for every `u` on
//! the `[0, 1)` grid, and a variate exactly equal to `p` does not trigger.

use serde::Serialize;
use thiserror::Error;

use crate::backends::{BackendError, EntropySource, UniformVariate};

/// The signal always starts in state 0 at tick 0.
pub const INITIAL_STATE: u8 = 0;

/// Mean dwell times (same unit as `dt`) and the tick duration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RtnParams {
    /// Mean dwell time in state 1 (high level).
    pub tau_c: f64,
    /// Mean dwell time in state 0 (low level).
    pub tau_e: f64,
    /// Simulation tick duration.
    pub dt: f64,
}

impl Default for RtnParams {
    fn default() -> Self {
        RtnParams {
            tau_c: 2500.0,
            tau_e: 2500.0,
            dt: 1.0,
        }
    }
}

#[derive(Debug, Error)]
pub enum RtnError {
    #[error("invalid RTN parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

/// Per-tick transition probabilities derived from the dwell times.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransitionProbs {
    /// P(0 -> 1) per tick.
    pub p01: f64,
    /// P(1 -> 0) per tick.
    pub p10: f64,
}

/// Validates parameters and derives the per-tick transition probabilities.
pub fn derive_probs(params: &RtnParams) -> Result<TransitionProbs, RtnError> {
    let RtnParams { tau_c, tau_e, dt } = *params;
    let err = |msg: String| Err(RtnError::InvalidParams(msg));
    if !(tau_c.is_finite() && tau_c > 0.0) {
        return err(format!("tau_c must be positive and finite, got {tau_c}"));
    }
    if !(tau_e.is_finite() && tau_e > 0.0) {
        return err(format!("tau_e must be positive and finite, got {tau_e}"));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return err(format!("dt must be positive and finite, got {dt}"));
    }
    if dt > tau_c || dt > tau_e {
        return err(format!(
            "dt {dt} exceeds a dwell time (tau_c {tau_c}, tau_e {tau_e}); \
             transition probabilities would leave [0, 1]"
        ));
    }
    Ok(TransitionProbs {
        p01: dt / tau_e,
        p10: dt / tau_c,
    })
}

/// Advances the chain one tick. Pure: same inputs, same output.
pub fn step(state: u8, u: UniformVariate, probs: TransitionProbs) -> u8 {
    debug_assert!(state <= 1, "state must be binary");
    if state == 0 {
        u8::from(probs.p01 > u.value())
    } else {
        u8::from(!(probs.p10 > u.value()))
    }
}

/// Edge direction of a state change.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// 0 -> 1.
    Rising,
    /// 1 -> 0.
    Falling,
}

/// A state change; `tick` is the first tick at which the new state holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TransitionEvent {
    pub tick: u64,
    pub direction: Direction,
}

/// A materialized state sequence, one entry per tick.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DigitalTrace {
    pub states: Vec<u8>,
}

impl DigitalTrace {
    pub fn tick_count(&self) -> u64 {
        self.states.len() as u64
    }
}

/// Stop condition for [`simulate`].
#[derive(Clone, Copy, Debug)]
pub enum RunLimit {
    /// Stop after this many ticks.
    Ticks(u64),
    /// Stop once this many transition events have been recorded.
    Events(u64),
}

/// Streaming per-tick states. The iterator is unbounded; callers impose a
/// limit. After a backend error it yields that error once, then fuses.
pub struct StateStream<'a, B: EntropySource + ?Sized> {
    probs: TransitionProbs,
    backend: &'a mut B,
    state: u8,
    tick: u64,
    failed: bool,
}

impl<'a, B: EntropySource + ?Sized> StateStream<'a, B> {
    pub fn new(params: &RtnParams, backend: &'a mut B) -> Result<Self, RtnError> {
        Ok(StateStream {
            probs: derive_probs(params)?,
            backend,
            state: INITIAL_STATE,
            tick: 0,
            failed: false,
        })
    }

    /// Ticks simulated so far.
    pub fn ticks(&self) -> u64 {
        self.tick
    }
}

impl<B: EntropySource + ?Sized> Iterator for StateStream<'_, B> {
    type Item = Result<u8, BackendError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        let u = match self.backend.next_uniform() {
            Ok(u) => u,
            Err(e) => {
                self.failed = true;
                return Some(Err(e));
            }
        };
        self.state = step(self.state, u, self.probs);
        self.tick += 1;
        Some(Ok(self.state))
    }
}

/// Streaming transition events on top of [`StateStream`].
pub struct EventStream<'a, B: EntropySource + ?Sized> {
    states: StateStream<'a, B>,
    prev: u8,
}

impl<'a, B: EntropySource + ?Sized> EventStream<'a, B> {
    pub fn new(params: &RtnParams, backend: &'a mut B) -> Result<Self, RtnError> {
        Ok(EventStream {
            states: StateStream::new(params, backend)?,
            prev: INITIAL_STATE,
        })
    }

    pub fn ticks(&self) -> u64 {
        self.states.ticks()
    }
}

impl<B: EntropySource + ?Sized> Iterator for EventStream<'_, B> {
    type Item = Result<TransitionEvent, BackendError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let state = match self.states.next()? {
                Ok(s) => s,
                Err(e) => return Some(Err(e)),
            };
            if state != self.prev {
                let direction = if state == 1 {
                    Direction::Rising
                } else {
                    Direction::Falling
                };
                self.prev = state;
                return Some(Ok(TransitionEvent {
                    tick: self.states.ticks() - 1,
                    direction,
                }));
            }
        }
    }
}

/// Runs the chain until `limit` and materializes the trace and event list.
pub fn simulate<B: EntropySource + ?Sized>(
    params: &RtnParams,
    backend: &mut B,
    limit: RunLimit,
) -> Result<(DigitalTrace, Vec<TransitionEvent>), RtnError> {
    let mut stream = StateStream::new(params, backend)?;
    let mut states = match limit {
        RunLimit::Ticks(t) => Vec::with_capacity(t.min(1 << 28) as usize),
        RunLimit::Events(_) => Vec::new(),
    };
    let mut events = Vec::new();
    let mut prev = INITIAL_STATE;
    loop {
        match limit {
            RunLimit::Ticks(t) if stream.ticks() >= t => break,
            RunLimit::Events(n) if events.len() as u64 >= n => break,
            _ => {}
        }
        let state = match stream.next() {
            Some(Ok(s)) => s,
            Some(Err(e)) => return Err(e.into()),
            None => break,
        };
        if state != prev {
            events.push(TransitionEvent {
                tick: stream.ticks() - 1,
                direction: if state == 1 {
                    Direction::Rising
                } else {
                    Direction::Falling
                },
            });
            prev = state;
        }
        states.push(state);
    }
    Ok((DigitalTrace { states }, events))
}
