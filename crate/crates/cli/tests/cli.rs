use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use vibroscene_core::inference::InferredScene;
use vibroscene_core::propagation::{PropagationMode, Touch};
use vibroscene_core::scene::load_scene;
use vibroscene_core::session::PreparedScene;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn vibro(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vibro"))
        .args(args)
        .current_dir(root())
        .env_remove("VIBRO_LLM_ENDPOINT")
        .env_remove("VIBRO_LLM_API_KEY")
        .output()
        .unwrap()
}

fn code(output: &Output) -> i32 {
    output.status.code().unwrap()
}

fn prepared(scene: &str, golden: &str) -> PreparedScene {
    let scene = load_scene(&std::fs::read(root().join(scene)).unwrap()).unwrap();
    let golden = InferredScene::from_json(&std::fs::read_to_string(root().join(golden)).unwrap()).unwrap();
    PreparedScene::new(scene, golden).unwrap()
}

#[test]
fn infer_writes_the_golden_document() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.json");
    let run = vibro(&["infer", "scenes/study2_smartphone.json", "--backend", "mock", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(root().join("fixtures/smartphone.inferred.json")).unwrap());
    let table = String::from_utf8(run.stdout).unwrap();
    assert!(table.contains("scene category"));
    assert!(table.lines().any(|l| l.starts_with("phone") && l.contains("yes")));

    let piped = vibro(&["infer", "scenes/study2_speaker.json"]);
    assert_eq!(code(&piped), 0);
    assert_eq!(piped.stdout, std::fs::read(root().join("fixtures/speaker.inferred.json")).unwrap());
}

#[test]
fn exit_codes_follow_the_failure_class() {
    assert_eq!(code(&vibro(&["infer", "scenes/nope.json"])), 4);
    assert_eq!(code(&vibro(&["frobnicate"])), 1);
    assert_eq!(code(&vibro(&["infer", "scenes/study2_smartphone.json", "--bogus"])), 1);
    assert_eq!(code(&vibro(&[])), 1);
    for sub in ["infer", "map", "render", "graph", "serve"] {
        let help = vibro(&[sub, "--help"]);
        assert_eq!(code(&help), 0, "{sub}");
        assert!(!help.stdout.is_empty());
    }
    assert_eq!(code(&vibro(&["--version"])), 0);

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"scene_name":"x","objects":[{"id":"a","name":"A","position":[0,0,0],"size":[1,-1,1]}]}"#)
        .unwrap();
    let run = vibro(&["infer", bad.to_str().unwrap()]);
    assert_eq!(code(&run), 2);
    assert!(run.stdout.is_empty(), "diagnostics stay on stderr");
    assert!(!run.stderr.is_empty());

    let run = vibro(&["infer", "scenes/study2_smartphone.json", "--backend", "http"]);
    assert_eq!(code(&run), 3);
    assert!(String::from_utf8_lossy(&run.stderr).contains("VIBRO_LLM"));
    assert_eq!(code(&vibro(&["infer", "scenes/study2_smartphone.json", "--backend", "replay"])), 3);
}

#[test]
fn mismatched_documents_are_validation_errors() {
    let run = vibro(&["map", "scenes/study2_speaker.json", "fixtures/smartphone.inferred.json", "--object", "table"]);
    assert_eq!(code(&run), 2);
    let run = vibro(&["map", "scenes/study2_speaker.json", "fixtures/speaker.inferred.json", "--object", "ghost"]);
    assert_eq!(code(&run), 2);
    let run = vibro(&[
        "map",
        "scenes/study2_speaker.json",
        "fixtures/speaker.inferred.json",
        "--object",
        "table",
        "--resolution",
        "0",
    ]);
    assert_eq!(code(&run), 2);
}

#[test]
fn map_prints_a_row_major_grid() {
    let run = vibro(&[
        "map",
        "scenes/study2_speaker.json",
        "fixtures/speaker.inferred.json",
        "--object",
        "table",
        "--resolution",
        "8",
    ]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let text = String::from_utf8(run.stdout).unwrap();
    let rows: Vec<Vec<f64>> =
        text.lines().map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r.len() == 8));

    let p = prepared("scenes/study2_speaker.json", "fixtures/speaker.inferred.json");
    let map = p.attenuation_map("table", 8).unwrap();
    for (i, value) in rows.iter().flatten().enumerate() {
        assert!((0.0..=1.0).contains(value));
        let point = map.cell_point(i / 8, i % 8);
        let scalar = p.touch_gain(&Touch { object: "table".into(), point }, PropagationMode::Attenuated).unwrap();
        let best = scalar.iter().map(|r| r.gain).fold(0.0, f64::max);
        assert_eq!(format!("{best:.9}").parse::<f64>().unwrap(), *value, "cell {i}");
    }

    let single = vibro(&[
        "map",
        "scenes/study2_speaker.json",
        "fixtures/speaker.inferred.json",
        "--object",
        "table",
        "--resolution",
        "1",
        "--source",
        "speaker",
    ]);
    assert_eq!(code(&single), 0);
    let value: f64 = String::from_utf8(single.stdout).unwrap().trim().parse().unwrap();
    let centre = p.attenuation_map("table", 1).unwrap().cell_point(0, 0);
    let scalar = p.touch_gain(&Touch { object: "table".into(), point: centre }, PropagationMode::Attenuated).unwrap();
    assert_eq!(value, format!("{:.9}", scalar[0].gain).parse::<f64>().unwrap());
}

#[test]
fn render_writes_a_deterministic_wav_and_reports_segments() {
    let dir = tempfile::tempdir().unwrap();
    let render = |name: &str, mode: &str| {
        let out = dir.path().join(name);
        let run = vibro(&[
            "render",
            "scenes/study2_smartphone.json",
            "fixtures/smartphone.inferred.json",
            "--script",
            "fixtures/smartphone.script.json",
            "--mode",
            mode,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
        (std::fs::read(out).unwrap(), String::from_utf8(run.stdout).unwrap())
    };
    let (a, report) = render("a.wav", "attenuated");
    let (b, _) = render("b.wav", "attenuated");
    assert_eq!(a, b);
    assert_eq!(&a[..4], b"RIFF");
    assert!(report.lines().last().unwrap().starts_with("clipped: "));
    assert!(report.contains("attenuated"));
    assert_eq!(report.lines().filter(|l| l.contains("table")).count(), 3);

    let (none, report) = render("none.wav", "no");
    assert_ne!(none, a);
    for line in report.lines().filter(|l| l.contains("table")) {
        let rms: f64 = line.split_whitespace().last().unwrap().parse().unwrap();
        assert_eq!(rms, 0.0, "{line}");
    }

    let out = dir.path().join("x.wav");
    let missing = vibro(&[
        "render",
        "scenes/study2_smartphone.json",
        "fixtures/smartphone.inferred.json",
        "--script",
        "fixtures/missing.json",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&missing), 4);
    let bad_script = dir.path().join("bad.json");
    std::fs::write(&bad_script, r#"{"duration":-1,"events":[]}"#).unwrap();
    let invalid = vibro(&[
        "render",
        "scenes/study2_smartphone.json",
        "fixtures/smartphone.inferred.json",
        "--script",
        bad_script.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&invalid), 2);
}

#[test]
fn graph_exports_dot_and_json() {
    let dot = vibro(&["graph", "scenes/study2_smartphone.json", "fixtures/smartphone.inferred.json"]);
    assert_eq!(code(&dot), 0);
    let dot = String::from_utf8(dot.stdout).unwrap();
    assert!(dot.starts_with("graph"));
    assert!(dot.contains("phone") && dot.contains("table") && dot.contains("floor"));

    let json = vibro(&["graph", "scenes/study2_smartphone.json", "fixtures/smartphone.inferred.json", "--format", "json"]);
    assert_eq!(code(&json), 0);
    let value: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(value["sources"], serde_json::json!(["phone"]));
    assert_eq!(value["edges"], serde_json::json!([["floor", "table"], ["phone", "table"]]));
}
