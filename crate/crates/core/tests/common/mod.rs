#![allow(dead_code)]

use std::path::{Path, PathBuf};

use vibroscene_core::audio::{AudioResolver, Corpus};
use vibroscene_core::inference::InferredScene;
use vibroscene_core::scene::{load_scene, SceneModel};
use vibroscene_core::session::PreparedScene;

/// Scene file stem and golden fixture stem for each bundled study scene.
pub const STUDY_SCENES: [(&str, &str); 3] = [
    ("study2_smartphone", "smartphone"),
    ("study2_speaker", "speaker"),
    ("study2_laundry", "laundry"),
];

pub fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn scene(stem: &str) -> SceneModel {
    let bytes = std::fs::read(root().join("scenes").join(format!("{stem}.json"))).unwrap();
    load_scene(&bytes).unwrap()
}

pub fn golden_text(stem: &str) -> String {
    std::fs::read_to_string(root().join("fixtures").join(format!("{stem}.inferred.json"))).unwrap()
}

pub fn golden(stem: &str) -> InferredScene {
    InferredScene::from_json(&golden_text(stem)).unwrap()
}

pub fn prepared(scene_stem: &str, golden_stem: &str) -> PreparedScene {
    PreparedScene::new(scene(scene_stem), golden(golden_stem)).unwrap()
}

pub fn corpus() -> Corpus {
    Corpus::load(&root().join("corpus/corpus.json")).unwrap()
}

pub fn bundled_resolver() -> AudioResolver {
    AudioResolver::new(Some(corpus()))
}
