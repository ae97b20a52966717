use std::f64::consts::PI;

use proptest::prelude::*;
use vibroscene_core::dsp::{
    apply_gain_ramp, measured_bandpass_gain, mix_sources, rms, svf_bandpass, DspError, FilterState, GainCell,
    RenderConfig,
};
use vibroscene_oracles::bandpass::{magnitude, to_db};

const PROBES: [f64; 6] = [50.0, 125.0, 250.0, 500.0, 1000.0, 5000.0];

/// Amplitude of the filter's steady-state response to a unit sine, by
/// projection over 0.2 s (a whole number of periods at every probe).
fn sine_response(freq: f64, config: &RenderConfig) -> f64 {
    let fs = config.sample_rate as f64;
    let settle = (0.5 * fs) as usize;
    let window = (0.2 * fs) as usize;
    let input: Vec<f64> = (0..settle + window).map(|n| (2.0 * PI * freq * n as f64 / fs).sin()).collect();
    let mut state = FilterState::new(config);
    let out = svf_bandpass(&input, &mut state).unwrap();
    let (mut re, mut im) = (0.0, 0.0);
    for (n, y) in out.iter().enumerate().skip(settle) {
        let phase = 2.0 * PI * freq * n as f64 / fs;
        re += y * phase.cos();
        im += y * phase.sin();
    }
    2.0 * re.hypot(im) / window as f64
}

#[test]
fn bandpass_matches_analytic_response() {
    let config = RenderConfig::default();
    for f in PROBES {
        let measured = sine_response(f, &config);
        let expected = magnitude(f, 250.0, 1.0);
        let diff = (to_db(measured) - to_db(expected)).abs();
        assert!(diff <= 0.5, "{f} Hz: measured {measured}, analytic {expected}, {diff} dB apart");
        let engine = measured_bandpass_gain(f, &config);
        assert!((engine - measured).abs() < 1e-3 * measured.max(1e-3), "{f} Hz: {engine} vs {measured}");
    }
    assert!(to_db(sine_response(250.0, &config)).abs() <= 0.5);
}

#[test]
fn bandpass_peaks_at_resonance() {
    let config = RenderConfig::default();
    let grid: Vec<f64> = (0..=30).map(|i| 25.0 * 1.25f64.powi(i)).filter(|f| *f < 20_000.0).collect();
    let gains: Vec<f64> = grid.iter().map(|&f| measured_bandpass_gain(f, &config)).collect();
    for (w, g) in grid.windows(2).zip(gains.windows(2)) {
        if w[1] <= 250.0 {
            assert!(g[1] > g[0], "not rising between {} and {} Hz", w[0], w[1]);
        } else if w[0] >= 250.0 {
            assert!(g[1] < g[0], "not falling between {} and {} Hz", w[0], w[1]);
        }
    }
}

#[test]
fn unstable_state_is_reset() {
    let config = RenderConfig::default();
    let mut state = FilterState::new(&config);
    assert_eq!(svf_bandpass(&[1.0, f64::NAN, 1.0], &mut state), Err(DspError::UnstableState));
    assert_eq!((state.low, state.band), (0.0, 0.0));
    assert!(svf_bandpass(&[1.0; 16], &mut state).is_ok());
}

#[test]
fn invalid_configs_are_rejected() {
    let base = RenderConfig::default();
    for bad in [
        RenderConfig { sample_rate: 4000, ..base },
        RenderConfig { resonance_fc: 30_000.0, ..base },
        RenderConfig { block_size: 0, ..base },
        RenderConfig { filter_q: 0.0, ..base },
        RenderConfig { gain_ramp: -0.1, ..base },
    ] {
        assert!(matches!(bad.validate(), Err(DspError::InvalidConfig(_))), "{bad:?}");
    }
    assert_eq!(base.block_duration(), 0.02);
    assert_eq!(base.ramp_samples(), 480);
}

#[test]
fn ramp_from_silence_integrates_to_closed_form() {
    let config = RenderConfig::default();
    let mut block = vec![1.0; 960];
    apply_gain_ramp(&mut block, 0.0, 1.0, &config);
    let r = 480.0;
    let expected = (r + 1.0) / 2.0 + 960.0 - r;
    assert!((block.iter().sum::<f64>() - expected).abs() < 1e-9);
    assert_eq!(block[479], 1.0);
    assert_eq!(block[959], 1.0);
}

#[test]
fn mixing_examples() {
    let a = [0.5, -0.5, 0.25];
    let b = [0.5, -0.25, 0.0];
    assert_eq!(mix_sources(&[&a, &b], &[1.0, 1.0]).unwrap(), vec![1.0, -0.75, 0.25]);
    assert_eq!(mix_sources(&[&a, &b], &[0.0, 0.0]).unwrap(), vec![0.0, 0.0, 0.0]);
    let loud = [0.8, 0.1];
    let mut out = vec![0.0; 2];
    let clipped = vibroscene_core::dsp::mix_into(&mut out, &[&loud, &loud], &[1.0, 1.0]).unwrap();
    assert!(clipped);
    assert_eq!(out, vec![1.0, 0.2]);
    assert!(matches!(mix_sources(&[&a], &[1.0, 1.0]), Err(DspError::LengthMismatch { .. })));
    assert!(matches!(mix_sources(&[&a, &loud], &[1.0, 1.0]), Err(DspError::LengthMismatch { .. })));
}

#[test]
fn rms_of_known_signals() {
    assert_eq!(rms(&[]), 0.0);
    assert_eq!(rms(&[3.0, -3.0]), 3.0);
    let sine: Vec<f64> = (0..4800).map(|n| (2.0 * PI * n as f64 / 48.0).sin()).collect();
    assert!((rms(&sine) - 0.5f64.sqrt()).abs() < 1e-12);
}

#[test]
fn gain_cell_hand_off() {
    let cell = GainCell::new(0.25);
    assert_eq!(cell.load(), 0.25);
    assert_eq!(cell.swap(0.5), 0.25);
    cell.store(0.75);
    assert_eq!(cell.load(), 0.75);
}

proptest! {
    #[test]
    fn filter_is_linear(
        x in prop::collection::vec(-1.0..1.0f64, 256),
        y in prop::collection::vec(-1.0..1.0f64, 256),
        a in -2.0..2.0f64,
        b in -2.0..2.0f64,
    ) {
        let config = RenderConfig::default();
        let run = |input: &[f64]| svf_bandpass(input, &mut FilterState::new(&config)).unwrap();
        let combined: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let (fx, fy, fc) = (run(&x), run(&y), run(&combined));
        for i in 0..256 {
            let expected = a * fx[i] + b * fy[i];
            prop_assert!((fc[i] - expected).abs() <= 1e-12 * (1.0 + expected.abs()));
        }
    }

    #[test]
    fn ramp_matches_closed_form(prev in 0.0..1.0f64, next in 0.0..1.0f64, n in 1usize..2000, ramp_ms in 0.0..30.0f64) {
        let config = RenderConfig { gain_ramp: ramp_ms / 1000.0, ..RenderConfig::default() };
        let mut block = vec![1.0; n];
        apply_gain_ramp(&mut block, prev, next, &config);
        let r = config.ramp_samples().min(n) as f64;
        let expected = if r == 0.0 {
            n as f64 * next
        } else {
            r * prev + (next - prev) * (r + 1.0) / 2.0 + (n as f64 - r) * next
        };
        prop_assert!((block.iter().sum::<f64>() - expected).abs() < 1e-9 * n as f64);
        prop_assert!((block[n - 1] - next).abs() < 1e-12);
        let (lo, hi) = (prev.min(next), prev.max(next));
        prop_assert!(block.iter().all(|g| *g >= lo - 1e-12 && *g <= hi + 1e-12));
    }

    #[test]
    fn mixing_is_clamped(samples in prop::collection::vec(-2.0..2.0f64, 1..64), g in 0.0..1.0f64) {
        let out = mix_sources(&[&samples, &samples], &[g, g]).unwrap();
        prop_assert!(out.iter().all(|v| v.abs() <= 1.0));
    }
}
