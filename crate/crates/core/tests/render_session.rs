mod common;

use vibroscene_core::dsp::RenderConfig;
use vibroscene_core::propagation::{PropagationMode, Touch};
use vibroscene_core::render::{RenderError, SessionScript};
use vibroscene_core::scene::Vec3;
use vibroscene_core::session::SessionError;

fn script() -> SessionScript {
    let text = std::fs::read_to_string(common::root().join("fixtures/smartphone.script.json")).unwrap();
    SessionScript::from_json(&text).unwrap()
}

#[test]
fn attenuated_to_full_ratio_equals_scalar_gain() {
    let p = common::prepared("study2_smartphone", "smartphone");
    let assets = p.source_audio(&common::bundled_resolver(), 48_000).unwrap();
    let config = RenderConfig::default();
    let attenuated = p.render(&assets, &script(), PropagationMode::Attenuated, &config).unwrap();
    let full = p.render(&assets, &script(), PropagationMode::FullPropagation, &config).unwrap();
    assert!(!attenuated.stats.clipped && !full.stats.clipped);
    assert_eq!(attenuated.stats.segments.len(), full.stats.segments.len());
    let mut touched = 0;
    for (a, f) in attenuated.stats.segments.iter().zip(&full.stats.segments) {
        let Some(object) = a.touches.values().next() else { continue };
        let point = script()
            .events
            .iter()
            .find_map(|e| match e {
                vibroscene_core::render::ScriptEvent::Touch { t, point, .. } if (*t - a.start).abs() < 0.02 => {
                    Some(*point)
                }
                _ => None,
            })
            .unwrap();
        let scalar = p.touch_gain(&Touch { object: object.clone(), point }, PropagationMode::Attenuated).unwrap()[0].gain;
        let ratio = a.rms / f.rms;
        assert!((ratio - scalar).abs() <= 1e-3, "{object} at {}: ratio {ratio}, gain {scalar}", a.start);
        touched += 1;
    }
    assert_eq!(touched, 4);
}

#[test]
fn no_propagation_is_silent_away_from_the_source() {
    let p = common::prepared("study2_smartphone", "smartphone");
    let assets = p.source_audio(&common::bundled_resolver(), 48_000).unwrap();
    let config = RenderConfig::default();
    let out = p.render(&assets, &script(), PropagationMode::NoPropagation, &config).unwrap();
    assert_eq!(out.samples.len(), (6.5 * 48_000.0) as usize);
    let block = config.block_size;
    let on = (0.5 * 48_000.0) as usize / block * block;
    let off = (1.5 * 48_000.0) as usize / block * block + block;
    assert!(out.samples[..on].iter().all(|&x| x == 0.0));
    assert!(out.samples[off..].iter().all(|&x| x == 0.0));
    assert!(out.samples[on..off].iter().any(|&x| x != 0.0));
}

#[test]
fn renders_are_deterministic() {
    let p = common::prepared("study2_smartphone", "smartphone");
    let resolver = common::bundled_resolver();
    let config = RenderConfig::default();
    let a = p.render(&p.source_audio(&resolver, 48_000).unwrap(), &script(), PropagationMode::Attenuated, &config).unwrap();
    let b = p.render(&p.source_audio(&resolver, 48_000).unwrap(), &script(), PropagationMode::Attenuated, &config).unwrap();
    assert_eq!(a.wav, b.wav);
    assert_eq!(&a.wav[..4], b"RIFF");
    assert_eq!(a.wav.len(), 44 + 4 * a.samples.len());
}

#[test]
fn empty_script_is_silent() {
    let p = common::prepared("study2_speaker", "speaker");
    let assets = p.source_audio(&common::bundled_resolver(), 48_000).unwrap();
    let script = SessionScript { duration: 1.0, events: vec![] };
    let out = p.render(&assets, &script, PropagationMode::FullPropagation, &RenderConfig::default()).unwrap();
    assert_eq!(out.samples.len(), 48_000);
    assert!(out.samples.iter().all(|&x| x == 0.0));
    assert_eq!(out.stats.peak, 0.0);
}

#[test]
fn mode_events_switch_mid_script() {
    let p = common::prepared("study2_smartphone", "smartphone");
    let assets = p.source_audio(&common::bundled_resolver(), 48_000).unwrap();
    let script = SessionScript::from_json(
        r#"{"duration":2.0,"events":[
            {"t":0.0,"type":"touch","object":"table","point":[0.4,0.75,0.0]},
            {"t":1.0,"type":"mode","mode":"full"}]}"#,
    )
    .unwrap();
    let out = p.render(&assets, &script, PropagationMode::Attenuated, &RenderConfig::default()).unwrap();
    let modes: Vec<PropagationMode> = out.stats.segments.iter().map(|s| s.mode).collect();
    assert_eq!(modes, [PropagationMode::Attenuated, PropagationMode::FullPropagation]);
    assert!(out.stats.segments[1].rms > out.stats.segments[0].rms);
    assert_eq!(out.stats.segments[1].gains["phone"], 1.0);
}

#[test]
fn simultaneous_touches_take_the_strongest_gain() {
    let p = common::prepared("study2_smartphone", "smartphone");
    let assets = p.source_audio(&common::bundled_resolver(), 48_000).unwrap();
    let script = SessionScript::from_json(
        r#"{"duration":1.0,"events":[
            {"t":0.0,"type":"touch","object":"table","point":[0.4,0.75,0.0],"client":"left"},
            {"t":0.0,"type":"touch","object":"table","point":[-0.4,0.75,0.0],"client":"right"}]}"#,
    )
    .unwrap();
    let out = p.render(&assets, &script, PropagationMode::Attenuated, &RenderConfig::default()).unwrap();
    let near = p
        .touch_gain(&Touch { object: "table".into(), point: Vec3::new(-0.4, 0.75, 0.0) }, PropagationMode::Attenuated)
        .unwrap()[0]
        .gain;
    assert_eq!(out.stats.segments[0].gains["phone"], near);
    assert_eq!(out.stats.segments[0].touches.len(), 2);
}

#[test]
fn invalid_scripts_and_missing_audio_are_reported() {
    assert!(matches!(
        SessionScript::from_json(r#"{"duration":1.0,"events":[{"t":0.5,"type":"release"},{"t":0.2,"type":"release"}]}"#),
        Err(RenderError::Script(_))
    ));
    assert!(matches!(
        SessionScript::from_json(r#"{"duration":1.0,"events":[{"t":2.0,"type":"release"}]}"#),
        Err(RenderError::Script(_))
    ));
    assert!(matches!(SessionScript::from_json(r#"{"events":[]}"#), Err(RenderError::Script(_))));

    let p = common::prepared("study2_smartphone", "smartphone");
    let err = p.render(&Default::default(), &script(), PropagationMode::Attenuated, &RenderConfig::default()).unwrap_err();
    assert!(matches!(err, SessionError::Render(RenderError::MissingAudio(ref id)) if id == "phone"));

    let assets = p.source_audio(&common::bundled_resolver(), 48_000).unwrap();
    let ghost = SessionScript::from_json(r#"{"duration":1.0,"events":[{"t":0.5,"type":"touch","object":"ghost","point":[0,0,0]}]}"#).unwrap();
    assert!(matches!(
        p.render(&assets, &ghost, PropagationMode::Attenuated, &RenderConfig::default()),
        Err(SessionError::Render(RenderError::Propagation { .. }))
    ));
}
