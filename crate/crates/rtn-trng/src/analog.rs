//! Optional analog stage: synthesize a noisy two-level waveform from a
//! digital trace and recover the trace with a low-pass reference and a
//! hysteresis comparator.
//!
//! The reference voltage is a causal moving average of the signal itself,
//! so it settles between the two levels once the window has seen both.
//! The comparator switches high when a sample exceeds `vref + hysteresis`,
//! low when it drops below `vref - hysteresis`, and holds inside the dead
//! band.

use serde::Serialize;
use std::collections::VecDeque;
use thiserror::Error;

use crate::backends::{BackendError, EntropySource};
use crate::markov::{derive_probs, step, Direction, RtnParams, TransitionEvent, INITIAL_STATE};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AnalogParams {
    /// Level for state 1.
    pub v_high: f64,
    /// Level for state 0.
    pub v_low: f64,
    /// Standard deviation of additive Gaussian noise.
    pub noise_sigma: f64,
    /// Moving-average window (ticks) for the reference voltage.
    pub lp_window: usize,
    /// Comparator dead band half-width.
    pub hysteresis: f64,
}

impl Default for AnalogParams {
    fn default() -> Self {
        AnalogParams {
            v_high: 1.0,
            v_low: 0.0,
            noise_sigma: 0.05,
            lp_window: 16_384,
            hysteresis: 0.0,
        }
    }
}

impl AnalogParams {
    pub fn validate(&self) -> Result<(), AnalogError> {
        let err = |msg: String| Err(AnalogError::InvalidParams(msg));
        if !(self.v_high.is_finite() && self.v_low.is_finite()) || self.v_high <= self.v_low {
            return err(format!(
                "levels must satisfy v_high > v_low, got {} and {}",
                self.v_high, self.v_low
            ));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return err(format!("noise sigma must be >= 0, got {}", self.noise_sigma));
        }
        if self.lp_window == 0 {
            return err("low-pass window must be at least 1".into());
        }
        if !(self.hysteresis.is_finite() && self.hysteresis >= 0.0)
            || self.hysteresis >= (self.v_high - self.v_low) / 2.0
        {
            return err(format!(
                "hysteresis must lie in [0, (v_high - v_low)/2), got {}",
                self.hysteresis
            ));
        }
        Ok(())
    }

    fn level(&self, state: u8) -> f64 {
        if state == 1 {
            self.v_high
        } else {
            self.v_low
        }
    }
}

#[derive(Debug, Error)]
pub enum AnalogError {
    #[error("invalid analog parameters: {0}")]
    InvalidParams(String),
    #[error("sample and reference lengths differ: {samples} vs {vref}")]
    LengthMismatch { samples: usize, vref: usize },
    #[error("empty input")]
    EmptyInput,
    #[error(transparent)]
    Backend(#[from] BackendError),
}

/// Standard normal deviates from uniform variates via the trigonometric
/// Box-Muller transform. Consumes exactly two variates per two deviates.
pub struct GaussianSource<'a, B: EntropySource + ?Sized> {
    backend: &'a mut B,
    spare: Option<f64>,
}

impl<'a, B: EntropySource + ?Sized> GaussianSource<'a, B> {
    pub fn new(backend: &'a mut B) -> Self {
        GaussianSource {
            backend,
            spare: None,
        }
    }

    pub fn next_deviate(&mut self) -> Result<f64, BackendError> {
        if let Some(g) = self.spare.take() {
            return Ok(g);
        }
        let (g0, g1) = gaussian_pair(self.backend)?;
        self.spare = Some(g1);
        Ok(g0)
    }
}

fn gaussian_pair<B: EntropySource + ?Sized>(backend: &mut B) -> Result<(f64, f64), BackendError> {
    let u1 = backend.next_uniform()?.value();
    let u2 = backend.next_uniform()?.value();
    // 1 - u1 lies in (0, 1], keeping the log finite.
    let r = (-2.0 * (1.0 - u1).ln()).sqrt();
    let theta = 2.0 * std::f64::consts::PI * u2;
    Ok((r * theta.cos(), r * theta.sin()))
}

/// Two-level waveform plus Gaussian noise, one sample per trace element.
pub fn synthesize<B: EntropySource + ?Sized>(
    trace: &[u8],
    params: &AnalogParams,
    backend: &mut B,
) -> Result<Vec<f64>, AnalogError> {
    params.validate()?;
    let mut gauss = GaussianSource::new(backend);
    let mut samples = Vec::with_capacity(trace.len());
    for &state in trace {
        let noise = if params.noise_sigma > 0.0 {
            params.noise_sigma * gauss.next_deviate()?
        } else {
            0.0
        };
        samples.push(params.level(state) + noise);
    }
    Ok(samples)
}

/// Causal moving average: mean of the last `window` samples, shrinking to
/// a prefix average while the window fills.
pub fn vref_lowpass(samples: &[f64], window: usize) -> Vec<f64> {
    assert!(window >= 1, "window must be at least 1");
    let mut out = Vec::with_capacity(samples.len());
    let mut sum = 0.0;
    for (i, &s) in samples.iter().enumerate() {
        sum += s;
        if i >= window {
            sum -= samples[i - window];
        }
        let len = (i + 1).min(window);
        out.push(sum / len as f64);
    }
    out
}

/// Hysteresis comparator. Initial output compares the first sample
/// directly against the first reference value.
pub fn digitize(samples: &[f64], vref: &[f64], hysteresis: f64) -> Result<Vec<u8>, AnalogError> {
    if samples.len() != vref.len() {
        return Err(AnalogError::LengthMismatch {
            samples: samples.len(),
            vref: vref.len(),
        });
    }
    if samples.is_empty() {
        return Err(AnalogError::EmptyInput);
    }
    let mut out = Vec::with_capacity(samples.len());
    let mut state = u8::from(samples[0] >= vref[0]);
    out.push(state);
    for i in 1..samples.len() {
        if samples[i] > vref[i] + hysteresis {
            state = 1;
        } else if samples[i] < vref[i] - hysteresis {
            state = 0;
        }
        out.push(state);
    }
    Ok(out)
}

/// Streaming analog chain: Markov states -> noisy samples -> moving-average
/// reference -> comparator -> transition events.
///
/// Drop-in replacement for the digital event stream when the analog stage
/// is enabled. One backend serves both the per-tick Markov draw and the
/// noise deviates, in a fixed interleaved order, so runs stay reproducible.
pub struct RecoveredEventStream<'a, B: EntropySource + ?Sized> {
    backend: &'a mut B,
    probs: crate::markov::TransitionProbs,
    params: AnalogParams,
    state: u8,
    spare_gauss: Option<f64>,
    ring: VecDeque<f64>,
    ring_sum: f64,
    out_prev: Option<u8>,
    tick: u64,
    failed: bool,
}

impl<'a, B: EntropySource + ?Sized> RecoveredEventStream<'a, B> {
    pub fn new(
        rtn: &RtnParams,
        analog: &AnalogParams,
        backend: &'a mut B,
    ) -> Result<Self, AnalogError> {
        analog.validate()?;
        let probs = derive_probs(rtn).map_err(|e| AnalogError::InvalidParams(e.to_string()))?;
        Ok(RecoveredEventStream {
            backend,
            probs,
            params: *analog,
            state: INITIAL_STATE,
            spare_gauss: None,
            ring: VecDeque::new(),
            ring_sum: 0.0,
            out_prev: None,
            tick: 0,
        failed: false,
        })
    }

    pub fn ticks(&self) -> u64 {
        self.tick
    }

    fn noise(&mut self) -> Result<f64, BackendError> {
        if self.params.noise_sigma == 0.0 {
            return Ok(0.0);
        }
        let g = match self.spare_gauss.take() {
            Some(g) => g,
            None => {
                let (g0, g1) = gaussian_pair(self.backend)?;
                self.spare_gauss = Some(g1);
                g0
            }
        };
        Ok(self.params.noise_sigma * g)
    }
}

impl<B: EntropySource + ?Sized> Iterator for RecoveredEventStream<'_, B> {
    type Item = Result<TransitionEvent, BackendError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        loop {
            let u = match self.backend.next_uniform() {
                Ok(u) => u,
                Err(e) => {
                    self.failed = true;
                    return Some(Err(e));
                }
            };
            self.state = step(self.state, u, self.probs);
            let noise = match self.noise() {
                Ok(n) => n,
                Err(e) => {
                    self.failed = true;
                    return Some(Err(e));
                }
            };
            let sample = self.params.level(self.state) + noise;
            self.ring.push_back(sample);
            self.ring_sum += sample;
            if self.ring.len() > self.params.lp_window {
                self.ring_sum -= self.ring.pop_front().unwrap();
            }
            let vref = self.ring_sum / self.ring.len() as f64;
            let out = match self.out_prev {
                None => u8::from(sample >= vref),
                Some(prev) => {
                    if sample > vref + self.params.hysteresis {
                        1
                    } else if sample < vref - self.params.hysteresis {
                        0
                    } else {
                        prev
                    }
                }
            };
            let tick = self.tick;
            self.tick += 1;
            let prev = self.out_prev.replace(out);
            if let Some(prev) = prev {
                if out != prev {
                    let direction = if out == 1 {
                        Direction::Rising
                    } else {
                        Direction::Falling
                    };
                    return Some(Ok(TransitionEvent { tick, direction }));
                }
            }
        }
    }
}
