//! Chained agent inference.
//!
//! The scene analyzer runs once; then, per object, the object analyzer feeds
//! the material estimator and, for objects flagged as vibrating, the
//! vibration describer. Malformed responses are re-queried up to
//! [`MAX_RETRIES`] times before the error is surfaced.

pub mod backend;
#[cfg(feature = "http")]
pub mod http;
pub mod materials;
pub mod parse;
pub mod prompts;

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::AudioRef;
use crate::scene::{dominant_surface_thickness, DerivedGeometry, SceneError, SceneModel, SceneObject, Vec3};

pub use backend::{
    AgentBackend, AgentRequest, BackendConfig, BackendKind, CallRecord, LoggingBackend, MockBackend, RecordingBackend,
    ReplayBackend,
};
pub use materials::{lookup_reference_material, reference_material_names};
pub use parse::{parse_agent_json, AgentOutput, Schema};
pub use prompts::render_prompt;

pub const MAX_RETRIES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    SceneAnalyzer,
    ObjectAnalyzer,
    MaterialEstimator,
    VibrationDescriber,
}

impl AgentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AgentKind::SceneAnalyzer => "scene_analyzer",
            AgentKind::ObjectAnalyzer => "object_analyzer",
            AgentKind::MaterialEstimator => "material_estimator",
            AgentKind::VibrationDescriber => "vibration_describer",
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error("prompt binding `{0}` is missing")]
    MissingBinding(String),
    #[error("backend error: {0}")]
    Backend(String),
    #[error("backend configuration: {0}")]
    Config(String),
    #[error("malformed {agent} response{}: {detail}", .field.as_ref().map(|f| format!(" (field `{f}`)")).unwrap_or_default())]
    Malformed { agent: AgentKind, field: Option<String>, detail: String },
    #[error("material properties could not be estimated")]
    EstimationUnavailable,
    #[error("vibration description violates its format: {0}")]
    InvariantViolation(String),
    #[error("unknown reference material `{0}`")]
    UnknownMaterial(String),
    #[error("object `{id}`: {source}")]
    Object {
        id: String,
        #[source]
        source: Box<InferenceError>,
    },
    #[error("inferred document does not match scene: {0}")]
    Mismatch(String),
}

impl InferenceError {
    /// The innermost error, skipping object annotations.
    pub fn root(&self) -> &InferenceError {
        match self {
            InferenceError::Object { source, .. } => source.root(),
            other => other,
        }
    }

    fn retryable(&self) -> bool {
        matches!(self, InferenceError::Malformed { .. } | InferenceError::InvariantViolation(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectAnalysis {
    pub object_category: String,
    pub object_category_reason: String,
    pub material_category: String,
    pub usage: String,
    pub estimated_size: Vec3,
    pub estimated_size_reason: String,
    pub should_vibrate: bool,
    pub should_vibrate_reason: String,
}

/// Material constants in SI units. `damping_ratio` is carried but unused.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialProperties {
    /// kg/m³
    pub density: f64,
    /// N/m²
    pub elastic_modulus: f64,
    pub poissons_ratio: f64,
    pub damping_ratio: f64,
}

impl MaterialProperties {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.density > 0.0 && self.density.is_finite()) {
            return Err(format!("density must be positive, got {}", self.density));
        }
        if !(self.elastic_modulus > 0.0 && self.elastic_modulus.is_finite()) {
            return Err(format!("elastic modulus must be positive, got {}", self.elastic_modulus));
        }
        if !(0.0..0.5).contains(&self.poissons_ratio) {
            return Err(format!("Poisson's ratio must lie in [0, 0.5), got {}", self.poissons_ratio));
        }
        if !(self.damping_ratio >= 0.0 && self.damping_ratio.is_finite()) {
            return Err(format!("damping ratio must be non-negative, got {}", self.damping_ratio));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VibrationDescription {
    pub free_form: String,
    pub keywords: String,
}

impl VibrationDescription {
    pub const MAX_SENTENCE_WORDS: usize = 15;

    pub fn validate(&self) -> Result<(), String> {
        let words = self.free_form.split_whitespace().count();
        if words == 0 {
            return Err("free-form sentence is empty".into());
        }
        if words >= Self::MAX_SENTENCE_WORDS {
            return Err(format!("free-form sentence has {words} words, expected fewer than 15"));
        }
        let tokens: Vec<&str> = self.keywords.split_whitespace().collect();
        if tokens.len() < 2 {
            return Err(format!("keywords `{}` need an object category and a verb", self.keywords));
        }
        if tokens.iter().any(|t| t.eq_ignore_ascii_case("vibrate")) {
            return Err(format!("keywords `{}` use the forbidden verb `vibrate`", self.keywords));
        }
        Ok(())
    }

    pub fn verb(&self) -> &str {
        self.keywords.split_whitespace().last().unwrap_or("")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaterialOrigin {
    Estimator,
    Reference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferredObject {
    pub id: String,
    pub name: String,
    pub analysis: ObjectAnalysis,
    pub material: MaterialProperties,
    pub material_origin: MaterialOrigin,
    pub vibration: Option<VibrationDescription>,
    pub audio: Option<AudioRef>,
}

impl InferredObject {
    /// Plate thickness for propagation, from the agent-corrected size.
    pub fn thickness(&self) -> Result<f64, SceneError> {
        dominant_surface_thickness(self.analysis.estimated_size)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferredScene {
    pub scene_name: String,
    pub scene_category: String,
    pub objects: Vec<InferredObject>,
}

impl InferredScene {
    pub fn object(&self, id: &str) -> Option<&InferredObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn object_mut(&mut self, id: &str) -> Option<&mut InferredObject> {
        self.objects.iter_mut().find(|o| o.id == id)
    }

    /// Pretty JSON with a trailing newline; key order follows field order.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("inferred scene serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, InferenceError> {
        serde_json::from_str(text).map_err(|e| InferenceError::Mismatch(format!("unreadable inferred document: {e}")))
    }

    /// Checks that every scene object appears exactly once and that the
    /// vibration description is present exactly for vibrating objects.
    pub fn check_against(&self, scene: &SceneModel) -> Result<(), InferenceError> {
        if self.objects.len() != scene.objects.len() {
            return Err(InferenceError::Mismatch(format!(
                "{} inferred objects for {} scene objects",
                self.objects.len(),
                scene.objects.len()
            )));
        }
        for obj in &scene.objects {
            let count = self.objects.iter().filter(|o| o.id == obj.id).count();
            if count != 1 {
                return Err(InferenceError::Mismatch(format!("object `{}` appears {count} times", obj.id)));
            }
        }
        for obj in &self.objects {
            if obj.vibration.is_some() != obj.analysis.should_vibrate {
                return Err(InferenceError::Mismatch(format!(
                    "object `{}`: vibration description present={} but should_vibrate={}",
                    obj.id,
                    obj.vibration.is_some(),
                    obj.analysis.should_vibrate
                )));
            }
            obj.material.validate().map_err(|e| InferenceError::Mismatch(format!("object `{}`: {e}", obj.id)))?;
        }
        Ok(())
    }
}

fn call_with_retries<T>(
    backend: &dyn AgentBackend,
    request: &AgentRequest,
    parse: impl Fn(&str) -> Result<T, InferenceError>,
) -> Result<T, InferenceError> {
    let mut attempt = 0;
    loop {
        let raw = backend.complete(request)?;
        match parse(&raw) {
            Err(e) if e.retryable() && attempt < MAX_RETRIES => attempt += 1,
            other => return other,
        }
    }
}

fn bindings(pairs: &[(&str, String)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn request(
    agent: AgentKind,
    subject: Option<&str>,
    bindings: BTreeMap<String, String>,
    images: Vec<PathBuf>,
) -> Result<AgentRequest, InferenceError> {
    Ok(AgentRequest {
        agent,
        subject: subject.map(str::to_string),
        prompt: render_prompt(agent, &bindings)?,
        bindings,
        images,
    })
}

/// `x,y,z` in shortest round-trip notation, always with a decimal point.
pub fn format_size(size: Vec3) -> String {
    format!("{:?},{:?},{:?}", size.x, size.y, size.z)
}

pub fn run_scene_analyzer(scene: &SceneModel, backend: &dyn AgentBackend) -> Result<String, InferenceError> {
    let req = request(
        AgentKind::SceneAnalyzer,
        None,
        bindings(&[("scene_name", scene.scene_name.clone())]),
        scene.scene_images.iter().map(PathBuf::from).collect(),
    )?;
    call_with_retries(backend, &req, parse::parse_scene_category)
}

pub fn run_object_analyzer(
    object: &SceneObject,
    scene_category: &str,
    derived: &DerivedGeometry,
    backend: &dyn AgentBackend,
) -> Result<ObjectAnalysis, InferenceError> {
    let height = derived.relative_height.get(&object.id).copied().unwrap_or(0.0);
    let req = request(
        AgentKind::ObjectAnalyzer,
        Some(&object.id),
        bindings(&[
            ("user_prompt", object.user_prompt.clone().unwrap_or_default()),
            ("scene_category", scene_category.to_string()),
            ("object_name", object.name.clone()),
            ("size", format_size(object.size)),
            ("position_y", format!("{height:.3}")),
            ("len_isolated", object.isolated_images.len().to_string()),
            ("len_scene", object.context_images.len().to_string()),
        ]),
        object.isolated_images.iter().chain(&object.context_images).map(PathBuf::from).collect(),
    )?;
    call_with_retries(backend, &req, parse::parse_object_analysis)
}

pub fn run_material_estimator(
    material_category: &str,
    subject: Option<&str>,
    backend: &dyn AgentBackend,
) -> Result<MaterialProperties, InferenceError> {
    if material_category.trim().is_empty() {
        return Err(InferenceError::MissingBinding("material_category".into()));
    }
    let req = request(
        AgentKind::MaterialEstimator,
        subject,
        bindings(&[("material_category", material_category.to_string())]),
        vec![],
    )?;
    call_with_retries(backend, &req, parse::parse_material_properties)
}

pub fn run_vibration_describer(
    object_category: &str,
    usage: &str,
    subject: Option<&str>,
    backend: &dyn AgentBackend,
) -> Result<VibrationDescription, InferenceError> {
    // The prompt already ends the usage clause with a period.
    let usage = usage.trim().trim_end_matches('.');
    let req = request(
        AgentKind::VibrationDescriber,
        subject,
        bindings(&[("object_category", object_category.to_string()), ("usage", usage.to_string())]),
        vec![],
    )?;
    call_with_retries(backend, &req, parse::parse_vibration_description)
}

fn infer_object(
    object: &SceneObject,
    scene_category: &str,
    derived: &DerivedGeometry,
    backend: &dyn AgentBackend,
) -> Result<InferredObject, InferenceError> {
    let analysis = run_object_analyzer(object, scene_category, derived, backend)?;
    let (material, material_origin) = match &object.material_override {
        Some(name) => (lookup_reference_material(name)?, MaterialOrigin::Reference),
        None => (
            run_material_estimator(&analysis.material_category, Some(&object.id), backend)?,
            MaterialOrigin::Estimator,
        ),
    };
    let vibration = if analysis.should_vibrate {
        Some(run_vibration_describer(&analysis.object_category, &analysis.usage, Some(&object.id), backend)?)
    } else {
        None
    };
    Ok(InferredObject {
        id: object.id.clone(),
        name: object.name.clone(),
        analysis,
        material,
        material_origin,
        vibration,
        audio: None,
    })
}

/// Runs the full agent chain over a scene. Objects are processed in manifest
/// order; an object that fails aborts the run with its id attached.
pub fn infer_scene(
    scene: &SceneModel,
    derived: &DerivedGeometry,
    backend: &dyn AgentBackend,
) -> Result<InferredScene, InferenceError> {
    let scene_category = run_scene_analyzer(scene, backend)?;
    let objects = scene
        .objects
        .iter()
        .map(|object| {
            infer_object(object, &scene_category, derived, backend)
                .map_err(|e| InferenceError::Object { id: object.id.clone(), source: Box::new(e) })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(InferredScene { scene_name: scene.scene_name.clone(), scene_category, objects })
}
