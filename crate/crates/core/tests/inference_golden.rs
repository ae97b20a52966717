mod common;

use std::time::Instant;

use vibroscene_core::audio::AudioResolver;
use vibroscene_core::inference::{
    infer_scene, lookup_reference_material, parse_agent_json, reference_material_names, run_material_estimator,
    AgentKind, AgentOutput, InferenceError, InferredScene, LoggingBackend, MockBackend, ReplayBackend, Schema,
};
use vibroscene_core::scene::{load_scene, DerivedGeometry};
use vibroscene_core::session::infer_and_resolve;

#[test]
fn mock_inference_reproduces_goldens_byte_for_byte() {
    for (scene_stem, golden_stem) in common::STUDY_SCENES {
        let scene = common::scene(scene_stem);
        let inferred = infer_and_resolve(&scene, &MockBackend::bundled(), &common::bundled_resolver()).unwrap();
        assert_eq!(inferred.to_json(), common::golden_text(golden_stem), "{scene_stem}");
    }
}

#[test]
fn agents_run_in_chained_order() {
    for (scene_stem, _) in common::STUDY_SCENES.iter().copied().chain([("kitchen_presentation", "")]) {
        let scene = common::scene(scene_stem);
        let backend = LoggingBackend::new(MockBackend::bundled());
        let inferred = infer_scene(&scene, &DerivedGeometry::derive(&scene), &backend).unwrap();
        let calls = backend.calls();
        assert_eq!(calls[0].agent, AgentKind::SceneAnalyzer);
        assert_eq!(calls.iter().filter(|c| c.agent == AgentKind::SceneAnalyzer).count(), 1);
        for object in &inferred.objects {
            let subject = Some(object.id.clone());
            let position = |kind| calls.iter().position(|c| c.agent == kind && c.subject == subject);
            let analyzer = position(AgentKind::ObjectAnalyzer).expect("object analyzer ran");
            let estimator = position(AgentKind::MaterialEstimator).expect("material estimator ran");
            assert!(analyzer > 0 && analyzer < estimator, "{}", object.id);
            match position(AgentKind::VibrationDescriber) {
                Some(describer) => {
                    assert!(object.analysis.should_vibrate, "{} was described but should not vibrate", object.id);
                    assert!(analyzer < describer);
                }
                None => assert!(!object.analysis.should_vibrate, "{} was not described", object.id),
            }
        }
    }
}

#[test]
fn inference_is_deterministic_and_round_trips() {
    for (scene_stem, golden_stem) in common::STUDY_SCENES {
        let scene = common::scene(scene_stem);
        let derived = DerivedGeometry::derive(&scene);
        let a = infer_scene(&scene, &derived, &MockBackend::bundled()).unwrap();
        let b = infer_scene(&scene, &derived, &MockBackend::bundled()).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(InferredScene::from_json(&a.to_json()).unwrap(), a);
        let golden = common::golden(golden_stem);
        assert_eq!(InferredScene::from_json(&golden.to_json()).unwrap(), golden);
        golden.check_against(&scene).unwrap();
    }
}

#[test]
fn passive_scene_has_no_vibration() {
    let scene = load_scene(
        br#"{"scene_name":"Empty living room","objects":[
            {"id":"floor","name":"Floor","position":[0,-0.0005,0],"size":[4,0.001,4]},
            {"id":"table","name":"Wooden table","position":[0,0.73,0],"size":[2,0.04,0.9],"explicit_contacts":["floor"]}]}"#,
    )
    .unwrap();
    let backend = LoggingBackend::new(MockBackend::bundled());
    let resolver = AudioResolver::new(Some(common::corpus()));
    let inferred = infer_and_resolve(&scene, &backend, &resolver).unwrap();
    assert!(inferred.objects.iter().all(|o| o.vibration.is_none() && o.audio.is_none()));
    assert!(backend.calls().iter().all(|c| c.agent != AgentKind::VibrationDescriber));
    assert!(resolver.stage_log().is_empty());
}

#[test]
fn kitchen_replay_completes_quickly() {
    let scene = common::scene("kitchen_presentation");
    assert_eq!(scene.objects.len(), 44);
    let backend = ReplayBackend::from_file(&common::root().join("fixtures/kitchen.replay.json")).unwrap();
    let derived = DerivedGeometry::derive(&scene);
    let started = Instant::now();
    let inferred = infer_scene(&scene, &derived, &backend).unwrap();
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "engine overhead {elapsed:?}");
    assert_eq!(inferred.scene_category, "Kitchen");
    assert_eq!(inferred.objects.len(), 44);

    let on_heater = &inferred.object("pan_heater").unwrap().analysis;
    assert!(on_heater.should_vibrate);
    assert!(on_heater.should_vibrate_reason.to_lowercase().contains("heat"));
    let on_table = &inferred.object("pan_table").unwrap().analysis;
    assert!(!on_table.should_vibrate);
    assert!(on_table.should_vibrate_reason.to_lowercase().contains("heat"));

    let again = infer_scene(&scene, &derived, &backend).unwrap();
    assert_eq!(inferred.to_json(), again.to_json());
}

#[test]
fn laundry_replay_describes_the_washer() {
    let scene = common::scene("study2_laundry");
    let backend = ReplayBackend::from_file(&common::root().join("fixtures/laundry.replay.json")).unwrap();
    let inferred = infer_and_resolve(&scene, &backend, &common::bundled_resolver()).unwrap();
    let washer = inferred.object("washer").unwrap();
    assert_eq!(washer.vibration.as_ref().unwrap().keywords, "washing machine rumble");
    assert_eq!(washer.audio.as_ref().unwrap().path.as_deref(), Some("audio/washer.wav"));
}

#[test]
fn replay_misses_are_backend_errors() {
    let scene = common::scene("study2_speaker");
    let backend = ReplayBackend::from_file(&common::root().join("fixtures/laundry.replay.json")).unwrap();
    let err = infer_scene(&scene, &DerivedGeometry::derive(&scene), &backend).unwrap_err();
    assert!(matches!(err.root(), InferenceError::Backend(_)), "{err}");
}

#[test]
fn estimator_and_reference_table_agree_in_pascals() {
    let backend = MockBackend::bundled();
    for name in reference_material_names() {
        let estimated = run_material_estimator(name, None, &backend).unwrap();
        let reference = lookup_reference_material(name).unwrap();
        assert_eq!(estimated.density, reference.density, "{name}");
        assert_eq!(estimated.elastic_modulus, reference.elastic_modulus, "{name}");
        assert_eq!(estimated.poissons_ratio, reference.poissons_ratio, "{name}");
    }
}

#[test]
fn agent_output_parsing_examples() {
    let steel = r#"{"density":7850,"youngs_modulus":200,"poissons_ratio":0.30,"damping_ratio":0.001}"#;
    let parsed = parse_agent_json(steel, Schema::MaterialProperties).unwrap();
    let AgentOutput::MaterialProperties(m) = &parsed else { panic!("wrong variant") };
    assert_eq!((m.density, m.elastic_modulus, m.poissons_ratio), (7850.0, 200e9, 0.30));
    let fenced = format!("```json\n{steel}\n```");
    assert_eq!(parse_agent_json(&fenced, Schema::MaterialProperties).unwrap(), parsed);
    let quoted = r#"{"density":"7850","youngs_modulus":"200","poissons_ratio":"0.3","damping_ratio":"0.001"}"#;
    assert_eq!(parse_agent_json(quoted, Schema::MaterialProperties).unwrap(), parsed);

    let missing_usage = r#"{"object_category":"phone","object_category_reason":"r","material_category":"glass",
        "estimated_size":"0.07,0.01,0.15","estimated_size_reason":"r","should_vibrate":true,"should_vibrate_reason":"r"}"#;
    match parse_agent_json(missing_usage, Schema::ObjectAnalysis) {
        Err(InferenceError::Malformed { field, .. }) => assert_eq!(field.as_deref(), Some("usage")),
        other => panic!("unexpected {other:?}"),
    }
}
