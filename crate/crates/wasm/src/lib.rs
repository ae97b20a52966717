//! Browser bindings for the demo page: a plate decay calculator, the
//! bandpass response curve, and touch queries on the bundled study scenes.
//!
//! Everything is implemented as plain Rust functions returning `String`
//! errors so it can be tested natively; `bindings` wraps them for JS.

use serde::Serialize;
use vibroscene_core::dsp::{measured_bandpass_gain, RenderConfig};
use vibroscene_core::inference::{lookup_reference_material, reference_material_names, InferredScene};
use vibroscene_core::propagation::{attenuation_ratio, PlateParams, PropagationMode, Touch};
use vibroscene_core::scene::{load_scene, Vec3};
use vibroscene_core::session::PreparedScene;

const SCENES: [(&str, &str, &str); 3] = [
    (
        "smartphone",
        include_str!("../../../scenes/study2_smartphone.json"),
        include_str!("../../../fixtures/smartphone.inferred.json"),
    ),
    (
        "speaker",
        include_str!("../../../scenes/study2_speaker.json"),
        include_str!("../../../fixtures/speaker.inferred.json"),
    ),
    (
        "laundry",
        include_str!("../../../scenes/study2_laundry.json"),
        include_str!("../../../fixtures/laundry.inferred.json"),
    ),
];

pub fn scene_names() -> Vec<String> {
    SCENES.iter().map(|s| s.0.to_string()).collect()
}

pub fn material_names() -> Vec<String> {
    reference_material_names().map(str::to_string).collect()
}

/// Γ at `steps + 1` evenly spaced distances from 0 to `max_distance`.
pub fn decay_profile(
    material: &str,
    thickness: f64,
    frequency_hz: f64,
    max_distance: f64,
    steps: usize,
) -> Result<Vec<f64>, String> {
    let m = lookup_reference_material(material).map_err(|e| e.to_string())?;
    if !(max_distance > 0.0 && max_distance.is_finite()) || steps == 0 {
        return Err("need a positive distance range and at least one step".into());
    }
    let plate = PlateParams {
        density: m.density,
        elastic_modulus: m.elastic_modulus,
        poissons_ratio: m.poissons_ratio,
        thickness,
        angular_frequency: 2.0 * std::f64::consts::PI * frequency_hz,
    };
    let k = plate.wavenumber().map_err(|e| e.to_string())?;
    (0..=steps)
        .map(|i| attenuation_ratio(k, max_distance * i as f64 / steps as f64).map_err(|e| e.to_string()))
        .collect()
}

/// Measured filter gain in dB at each frequency.
pub fn bandpass_response_db(frequencies: &[f64], center_hz: f64, q: f64) -> Result<Vec<f64>, String> {
    let config = RenderConfig { resonance_fc: center_hz, filter_q: q, ..RenderConfig::default() };
    config.validate().map_err(|e| e.to_string())?;
    if let Some(f) = frequencies.iter().find(|f| !(**f > 0.0 && **f < config.sample_rate as f64 / 2.0)) {
        return Err(format!("frequency {f} Hz is outside (0, Nyquist)"));
    }
    Ok(frequencies.iter().map(|&f| 20.0 * measured_bandpass_gain(f, &config).log10()).collect())
}

fn parse_mode(mode: &str) -> Result<PropagationMode, String> {
    match mode {
        "no" => Ok(PropagationMode::NoPropagation),
        "full" => Ok(PropagationMode::FullPropagation),
        "attenuated" => Ok(PropagationMode::Attenuated),
        other => Err(format!("unknown mode `{other}` (no, full, attenuated)")),
    }
}

#[derive(Serialize)]
struct LayoutObject<'a> {
    id: &'a str,
    name: &'a str,
    min: [f64; 3],
    max: [f64; 3],
    material: &'a str,
    source: bool,
}

#[derive(Serialize)]
struct TouchGain<'a> {
    source: &'a str,
    gain: f64,
    path: &'a [String],
}

pub struct Scene {
    prepared: PreparedScene,
}

impl Scene {
    pub fn bundled(name: &str) -> Result<Scene, String> {
        let (_, manifest, inferred) =
            SCENES.iter().find(|s| s.0 == name).ok_or_else(|| format!("no bundled scene `{name}`"))?;
        let scene = load_scene(manifest.as_bytes()).map_err(|e| e.to_string())?;
        let inferred = InferredScene::from_json(inferred).map_err(|e| e.to_string())?;
        let prepared = PreparedScene::new(scene, inferred).map_err(|e| e.to_string())?;
        Ok(Scene { prepared })
    }

    /// Objects as JSON, for drawing.
    pub fn layout(&self) -> String {
        let objects: Vec<LayoutObject> = self
            .prepared
            .scene
            .objects
            .iter()
            .map(|o| {
                let b = o.aabb();
                LayoutObject {
                    id: &o.id,
                    name: &o.name,
                    min: b.min.to_array(),
                    max: b.max.to_array(),
                    material: self.prepared.inferred.object(&o.id).map_or("", |i| &i.analysis.material_category),
                    source: self.prepared.graph.is_source(&o.id),
                }
            })
            .collect();
        serde_json::to_string(&objects).expect("layout serializes")
    }

    /// Gains at a touch point as JSON `[{source, gain, path}]`.
    pub fn touch(&self, object: &str, x: f64, y: f64, z: f64, mode: &str) -> Result<String, String> {
        let touch = Touch { object: object.to_string(), point: Vec3::new(x, y, z) };
        let results = self.prepared.touch_gain(&touch, parse_mode(mode)?).map_err(|e| e.to_string())?;
        let gains: Vec<TouchGain> =
            results.iter().map(|r| TouchGain { source: &r.source, gain: r.gain, path: &r.path.nodes }).collect();
        Ok(serde_json::to_string(&gains).expect("gains serialize"))
    }

    /// Strongest Γ per cell over the object's dominant face, row-major.
    pub fn heatmap(&self, object: &str, resolution: usize) -> Result<Vec<f64>, String> {
        if resolution > 128 {
            return Err("resolution is capped at 128".into());
        }
        Ok(self.prepared.attenuation_map(object, resolution).map_err(|e| e.to_string())?.combined())
    }

    /// Face bounds of the heatmap as `[axis_u, axis_v, min_u, min_v, max_u, max_v, plane]`.
    pub fn heatmap_frame(&self, object: &str) -> Result<Vec<f64>, String> {
        let map = self.prepared.attenuation_map(object, 1).map_err(|e| e.to_string())?;
        Ok(vec![map.axes[0] as f64, map.axes[1] as f64, map.min[0], map.min[1], map.max[0], map.max[1], map.plane])
    }

    pub fn set_contact(&mut self, a: &str, b: &str, present: bool) -> Result<(), String> {
        self.prepared = self.prepared.with_contact(a, b, present).map_err(|e| e.to_string())?;
        Ok(())
    }
}

mod bindings {
    use wasm_bindgen::prelude::*;

    fn js(e: String) -> JsError {
        JsError::new(&e)
    }

    #[wasm_bindgen(js_name = sceneNames)]
    pub fn scene_names() -> Vec<String> {
        super::scene_names()
    }

    #[wasm_bindgen(js_name = materialNames)]
    pub fn material_names() -> Vec<String> {
        super::material_names()
    }

    #[wasm_bindgen(js_name = decayProfile)]
    pub fn decay_profile(
        material: &str,
        thickness: f64,
        frequency_hz: f64,
        max_distance: f64,
        steps: usize,
    ) -> Result<Vec<f64>, JsError> {
        super::decay_profile(material, thickness, frequency_hz, max_distance, steps).map_err(js)
    }

    #[wasm_bindgen(js_name = bandpassResponseDb)]
    pub fn bandpass_response_db(frequencies: &[f64], center_hz: f64, q: f64) -> Result<Vec<f64>, JsError> {
        super::bandpass_response_db(frequencies, center_hz, q).map_err(js)
    }

    #[wasm_bindgen]
    pub struct DemoScene(super::Scene);

    #[wasm_bindgen]
    impl DemoScene {
        #[wasm_bindgen(constructor)]
        pub fn new(name: &str) -> Result<DemoScene, JsError> {
            super::Scene::bundled(name).map(DemoScene).map_err(js)
        }

        pub fn layout(&self) -> String {
            self.0.layout()
        }

        pub fn touch(&self, object: &str, x: f64, y: f64, z: f64, mode: &str) -> Result<String, JsError> {
            self.0.touch(object, x, y, z, mode).map_err(js)
        }

        pub fn heatmap(&self, object: &str, resolution: usize) -> Result<Vec<f64>, JsError> {
            self.0.heatmap(object, resolution).map_err(js)
        }

        #[wasm_bindgen(js_name = heatmapFrame)]
        pub fn heatmap_frame(&self, object: &str) -> Result<Vec<f64>, JsError> {
            self.0.heatmap_frame(object).map_err(js)
        }

        #[wasm_bindgen(js_name = setContact)]
        pub fn set_contact(&mut self, a: &str, b: &str, present: bool) -> Result<(), JsError> {
            self.0.set_contact(a, b, present).map_err(js)
        }
    }
}
