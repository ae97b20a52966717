//! Block DSP: state-variable bandpass, gain ramps and mixing.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DspError {
    #[error("invalid render configuration: {0}")]
    InvalidConfig(String),
    #[error("filter state became non-finite and was reset")]
    UnstableState,
    #[error("block length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderConfig {
    pub sample_rate: u32,
    pub block_size: usize,
    pub resonance_fc: f64,
    pub filter_q: f64,
    /// Seconds.
    pub gain_ramp: f64,
    pub loop_audio: bool,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            sample_rate: 48_000,
            block_size: 960,
            resonance_fc: 250.0,
            filter_q: 1.0,
            gain_ramp: 0.010,
            loop_audio: true,
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<(), DspError> {
        let bad = |m: String| Err(DspError::InvalidConfig(m));
        if self.sample_rate < 8000 {
            return bad(format!("sample rate {} is below 8000 Hz", self.sample_rate));
        }
        if !(self.resonance_fc > 0.0 && self.resonance_fc < self.sample_rate as f64 / 2.0) {
            return bad(format!("resonance {} Hz must lie in (0, {})", self.resonance_fc, self.sample_rate / 2));
        }
        if self.block_size == 0 {
            return bad("block size must be positive".into());
        }
        if !(self.filter_q > 0.0 && self.filter_q.is_finite()) {
            return bad(format!("filter Q must be positive, got {}", self.filter_q));
        }
        if !(self.gain_ramp >= 0.0 && self.gain_ramp.is_finite()) {
            return bad(format!("gain ramp must be non-negative, got {}", self.gain_ramp));
        }
        Ok(())
    }

    pub fn block_duration(&self) -> f64 {
        self.block_size as f64 / self.sample_rate as f64
    }

    pub fn ramp_samples(&self) -> usize {
        (self.gain_ramp * self.sample_rate as f64).round() as usize
    }
}

/// Chamberlin state-variable filter state, bandpass output scaled to unity
/// gain at the resonance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterState {
    pub low: f64,
    pub band: f64,
    pub f1: f64,
    pub damping: f64,
}

impl FilterState {
    pub fn new(config: &RenderConfig) -> Self {
        FilterState {
            low: 0.0,
            band: 0.0,
            f1: 2.0 * (PI * config.resonance_fc / config.sample_rate as f64).sin(),
            damping: 1.0 / config.filter_q,
        }
    }

    pub fn reset(&mut self) {
        self.low = 0.0;
        self.band = 0.0;
    }

    #[inline]
    pub fn tick(&mut self, x: f64) -> f64 {
        self.low += self.f1 * self.band;
        let high = x - self.low - self.damping * self.band;
        self.band += self.f1 * high;
        self.band * self.damping
    }
}

pub fn svf_bandpass(block: &[f64], state: &mut FilterState) -> Result<Vec<f64>, DspError> {
    let out: Vec<f64> = block.iter().map(|&x| state.tick(x)).collect();
    if !(state.low.is_finite() && state.band.is_finite()) {
        state.reset();
        return Err(DspError::UnstableState);
    }
    Ok(out)
}

/// `|H(f)|` of an ideal second-order bandpass with unity peak at `f0`.
pub fn analytic_bandpass_gain(f: f64, f0: f64, q: f64) -> f64 {
    let x = f / f0 - f0 / f;
    1.0 / (1.0 + q * q * x * x).sqrt()
}

/// Steady-state gain of the filter for a unit sine at `freq`, measured by
/// projecting the output onto the input frequency over whole periods.
pub fn measured_bandpass_gain(freq: f64, config: &RenderConfig) -> f64 {
    let fs = config.sample_rate as f64;
    let mut state = FilterState::new(config);
    let w = 2.0 * PI * freq / fs;
    let settle = (0.25 * fs) as usize;
    for n in 0..settle {
        state.tick((w * n as f64).sin());
    }
    let periods = (freq * 0.5).ceil().max(4.0);
    let len = (periods * fs / freq).round() as usize;
    let (mut s, mut c) = (0.0, 0.0);
    for n in settle..settle + len {
        let y = state.tick((w * n as f64).sin());
        s += y * (w * n as f64).sin();
        c += y * (w * n as f64).cos();
    }
    2.0 * (s * s + c * c).sqrt() / len as f64
}

/// Linear ramp from `prev` to `next` over `min(ramp, block)` samples; the
/// remaining samples carry `next`. Gains are clamped to [0, 1].
pub fn apply_gain_ramp(block: &mut [f64], prev: f64, next: f64, config: &RenderConfig) {
    let prev = prev.clamp(0.0, 1.0);
    let next = next.clamp(0.0, 1.0);
    let r = config.ramp_samples().min(block.len());
    for (i, x) in block.iter_mut().enumerate() {
        let g = if i < r { prev + (next - prev) * (i + 1) as f64 / r as f64 } else { next };
        *x *= g;
    }
}

/// Samplewise `Σ gᵢ·blockᵢ` clamped to [−1, 1]. Returns whether any sample
/// was clamped.
pub fn mix_into(out: &mut [f64], blocks: &[&[f64]], gains: &[f64]) -> Result<bool, DspError> {
    if gains.len() != blocks.len() {
        return Err(DspError::LengthMismatch { expected: blocks.len(), got: gains.len() });
    }
    for b in blocks {
        if b.len() != out.len() {
            return Err(DspError::LengthMismatch { expected: out.len(), got: b.len() });
        }
    }
    let mut clipped = false;
    for (i, y) in out.iter_mut().enumerate() {
        let sum: f64 = blocks.iter().zip(gains).map(|(b, g)| g * b[i]).sum();
        clipped |= sum.abs() > 1.0;
        *y = sum.clamp(-1.0, 1.0);
    }
    Ok(clipped)
}

pub fn mix_sources(blocks: &[&[f64]], gains: &[f64]) -> Result<Vec<f64>, DspError> {
    let len = blocks.first().map_or(0, |b| b.len());
    let mut out = vec![0.0; len];
    mix_into(&mut out, blocks, gains)?;
    Ok(out)
}

pub fn rms(block: &[f64]) -> f64 {
    if block.is_empty() {
        return 0.0;
    }
    (block.iter().map(|x| x * x).sum::<f64>() / block.len() as f64).sqrt()
}

/// Single-value lock-free hand-off of a gain target.
#[derive(Debug, Default)]
pub struct GainCell(AtomicU64);

impl GainCell {
    pub fn new(value: f64) -> Self {
        GainCell(AtomicU64::new(value.to_bits()))
    }

    pub fn store(&self, value: f64) {
        self.0.store(value.to_bits(), Ordering::Release);
    }

    pub fn load(&self) -> f64 {
        f64::from_bits(self.0.load(Ordering::Acquire))
    }

    pub fn swap(&self, value: f64) -> f64 {
        f64::from_bits(self.0.swap(value.to_bits(), Ordering::AcqRel))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn db(x: f64) -> f64 {
        20.0 * x.log10()
    }

    #[test]
    fn default_config_valid() {
        RenderConfig::default().validate().unwrap();
        let mut c = RenderConfig::default();
        c.resonance_fc = 24_000.0;
        assert!(c.validate().is_err());
        c = RenderConfig { sample_rate: 4000, ..RenderConfig::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn resonance_is_unity() {
        let g = measured_bandpass_gain(250.0, &RenderConfig::default());
        assert!(db(g).abs() < 0.5, "{g}");
    }

    #[test]
    fn five_khz_rejection() {
        let g = measured_bandpass_gain(5000.0, &RenderConfig::default());
        let expected = analytic_bandpass_gain(5000.0, 250.0, 1.0);
        assert!((expected - 0.050).abs() < 0.001);
        assert!((db(g) - db(expected)).abs() < 0.5, "{g} vs {expected}");
    }

    #[test]
    fn zero_in_zero_out() {
        let mut s = FilterState::new(&RenderConfig::default());
        let before = s;
        let out = svf_bandpass(&[0.0; 960], &mut s).unwrap();
        assert!(out.iter().all(|&x| x == 0.0));
        assert_eq!(s, before);
    }

    #[test]
    fn nan_resets() {
        let mut s = FilterState::new(&RenderConfig::default());
        assert_eq!(svf_bandpass(&[f64::NAN, 1.0], &mut s), Err(DspError::UnstableState));
        assert_eq!((s.low, s.band), (0.0, 0.0));
    }

    #[test]
    fn ramp_shape() {
        let cfg = RenderConfig::default();
        let mut b = vec![1.0; 960];
        apply_gain_ramp(&mut b, 0.0, 1.0, &cfg);
        assert_eq!(b[479], 1.0);
        assert!(b[..479].windows(2).all(|w| w[0] < w[1]));
        assert!(b[480..].iter().all(|&x| x == 1.0));
        let mut c = vec![0.5; 960];
        apply_gain_ramp(&mut c, 0.3, 0.3, &cfg);
        assert!(c.iter().all(|&x| x == 0.5 * 0.3));
    }

    #[test]
    fn mixing() {
        let a = vec![0.25, -0.5, 1.0];
        assert_eq!(mix_sources(&[&a], &[1.0]).unwrap(), a);
        let dc = vec![1.0; 3];
        let mut out = vec![0.0; 3];
        assert!(mix_into(&mut out, &[&dc, &dc], &[1.0, 1.0]).unwrap());
        assert_eq!(out, dc);
        assert!(matches!(mix_sources(&[&a, &dc[..2]], &[1.0, 1.0]), Err(DspError::LengthMismatch { .. })));
    }

    #[test]
    fn gain_cell() {
        let c = GainCell::new(0.25);
        assert_eq!(c.swap(0.5), 0.25);
        assert_eq!(c.load(), 0.5);
    }
}
