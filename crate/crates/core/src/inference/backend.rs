//! Agent backends: a rule-table mock, a prompt-hash replay store, a recorder,
//! a call logger, and (with the `http` feature) a chat-completions client.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use super::{AgentKind, InferenceError};
use crate::scene::{parse_size_triple, thin_axis};

pub const DEFAULT_TEMPERATURE: f64 = 0.2;

#[derive(Debug, Clone)]
pub struct AgentRequest {
    pub agent: AgentKind,
    /// Object id the request is about; `None` for the scene analyzer.
    pub subject: Option<String>,
    pub prompt: String,
    pub bindings: BTreeMap<String, String>,
    pub images: Vec<PathBuf>,
}

pub trait AgentBackend: Send + Sync {
    fn complete(&self, request: &AgentRequest) -> Result<String, InferenceError>;
}

impl<B: AgentBackend + ?Sized> AgentBackend for Box<B> {
    fn complete(&self, request: &AgentRequest) -> Result<String, InferenceError> {
        (**self).complete(request)
    }
}

impl<B: AgentBackend + ?Sized> AgentBackend for &B {
    fn complete(&self, request: &AgentRequest) -> Result<String, InferenceError> {
        (**self).complete(request)
    }
}

/// Hex SHA-256 of a rendered prompt; the key of replay recordings.
pub fn prompt_hash(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Mock,
    Replay,
    Http,
}

impl FromStr for BackendKind {
    type Err = InferenceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mock" => Ok(BackendKind::Mock),
            "replay" => Ok(BackendKind::Replay),
            "http" => Ok(BackendKind::Http),
            other => Err(InferenceError::Config(format!("unknown backend `{other}` (expected mock, replay or http)"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BackendConfig {
    pub kind: BackendKind,
    /// Sampling temperature for the HTTP backend; `VIBRO_LLM_TEMPERATURE` or 0.2 when unset.
    pub temperature: Option<f64>,
    pub replay_path: Option<PathBuf>,
    pub mock_rules: Option<PathBuf>,
}

impl BackendConfig {
    pub fn new(kind: BackendKind) -> Self {
        BackendConfig { kind, temperature: None, replay_path: None, mock_rules: None }
    }

    pub fn build(&self) -> Result<Box<dyn AgentBackend>, InferenceError> {
        if let Some(t) = self.temperature {
            check_temperature(t)?;
        }
        match self.kind {
            BackendKind::Mock => Ok(Box::new(match &self.mock_rules {
                Some(path) => MockBackend::from_file(path)?,
                None => MockBackend::bundled(),
            })),
            BackendKind::Replay => {
                let path = self
                    .replay_path
                    .as_ref()
                    .ok_or_else(|| InferenceError::Config("replay backend requires a recording path".into()))?;
                Ok(Box::new(ReplayBackend::from_file(path)?))
            }
            #[cfg(feature = "http")]
            BackendKind::Http => Ok(Box::new(super::http::HttpBackend::from_env(self.temperature)?)),
            #[cfg(not(feature = "http"))]
            BackendKind::Http => Err(InferenceError::Config("built without the `http` feature".into())),
        }
    }
}

pub(crate) fn check_temperature(t: f64) -> Result<(), InferenceError> {
    if (0.0..=2.0).contains(&t) {
        Ok(())
    } else {
        Err(InferenceError::Config(format!("temperature {t} outside [0, 2]")))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneRule {
    #[serde(rename = "match")]
    pub pattern: String,
    pub category: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectRule {
    #[serde(rename = "match")]
    pub pattern: String,
    pub object_category: String,
    pub material_category: String,
    pub usage: String,
    pub should_vibrate: bool,
    pub should_vibrate_reason: String,
    /// Replaces the thinnest axis of the reported size (boundary surfaces).
    #[serde(default)]
    pub thickness: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialRule {
    pub density: f64,
    pub youngs_modulus_gpa: f64,
    pub poissons_ratio: f64,
    pub damping_ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VibrationRule {
    #[serde(rename = "match")]
    pub pattern: String,
    pub free_form: String,
    pub keywords: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockRules {
    #[serde(default)]
    pub scenes: Vec<SceneRule>,
    #[serde(default)]
    pub objects: Vec<ObjectRule>,
    #[serde(default)]
    pub materials: BTreeMap<String, MaterialRule>,
    #[serde(default)]
    pub vibrations: Vec<VibrationRule>,
}

const BUNDLED_RULES: &str = include_str!("../../data/mock_rules.json");

/// Deterministic backend answering from a case-insensitive substring rule
/// table. It reads the prompt bindings rather than the prompt text and
/// returns the same raw JSON shapes a model would, so parsing is exercised.
#[derive(Debug, Clone)]
pub struct MockBackend {
    rules: MockRules,
}

fn contains_ci(haystack: &str, needle: &str) -> bool {
    haystack.to_lowercase().contains(&needle.to_lowercase())
}

fn capitalize(text: &str) -> String {
    let mut chars = text.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

impl MockBackend {
    pub fn new(rules: MockRules) -> Self {
        MockBackend { rules }
    }

    pub fn bundled() -> Self {
        MockBackend::new(serde_json::from_str(BUNDLED_RULES).expect("bundled mock rules are valid"))
    }

    pub fn from_file(path: &Path) -> Result<Self, InferenceError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| InferenceError::Config(format!("cannot read mock rules {}: {e}", path.display())))?;
        let rules = serde_json::from_str(&text)
            .map_err(|e| InferenceError::Config(format!("invalid mock rules {}: {e}", path.display())))?;
        Ok(MockBackend::new(rules))
    }

    pub fn rules(&self) -> &MockRules {
        &self.rules
    }

    fn binding<'a>(request: &'a AgentRequest, name: &str) -> Result<&'a str, InferenceError> {
        request
            .bindings
            .get(name)
            .map(String::as_str)
            .ok_or_else(|| InferenceError::Backend(format!("mock backend: request lacks binding `{name}`")))
    }

    fn scene_category(&self, request: &AgentRequest) -> Result<String, InferenceError> {
        let name = Self::binding(request, "scene_name")?;
        Ok(self
            .rules
            .scenes
            .iter()
            .find(|r| contains_ci(name, &r.pattern))
            .map(|r| r.category.clone())
            .unwrap_or_else(|| "undefined".to_string()))
    }

    fn object_analysis(&self, request: &AgentRequest) -> Result<String, InferenceError> {
        let name = Self::binding(request, "object_name")?;
        let size_text = Self::binding(request, "size")?;
        let scene_category = Self::binding(request, "scene_category")?;
        let size = parse_size_triple(size_text).map_err(|e| InferenceError::Backend(e.to_string()))?;

        let response = match self.rules.objects.iter().find(|r| contains_ci(name, &r.pattern)) {
            Some(rule) => {
                let (estimated, size_reason) = match rule.thickness {
                    Some(t) => {
                        let mut s = size;
                        s.set_axis(thin_axis(size), t);
                        (
                            format!("{:?},{:?},{:?}", s.x, s.y, s.z),
                            format!("The thin axis was replaced with a typical {} thickness of {t} m.", rule.object_category),
                        )
                    }
                    None => (size_text.to_string(), "The reported size is plausible for this object.".to_string()),
                };
                json!({
                    "object_category": rule.object_category,
                    "object_category_reason": format!(
                        "The name `{name}` and its size match a {} in a {scene_category}.",
                        rule.object_category
                    ),
                    "material_category": rule.material_category,
                    "usage": rule.usage,
                    "estimated_size": estimated,
                    "estimated_size_reason": size_reason,
                    "should_vibrate": rule.should_vibrate,
                    "should_vibrate_reason": rule.should_vibrate_reason,
                })
            }
            None => json!({
                "object_category": name.to_lowercase(),
                "object_category_reason": format!("No closer category than the name `{name}` is evident."),
                "material_category": "plywood",
                "usage": format!("The {} is part of the {scene_category} furnishing.", name.to_lowercase()),
                "estimated_size": size_text,
                "estimated_size_reason": "The reported size is plausible for this object.",
                "should_vibrate": false,
                "should_vibrate_reason": "It has no internal mechanism or heat source.",
            }),
        };
        Ok(response.to_string())
    }

    fn material(&self, request: &AgentRequest) -> Result<String, InferenceError> {
        let category = Self::binding(request, "material_category")?.to_lowercase();
        let response = match self.rules.materials.get(category.trim()) {
            Some(m) => json!({
                "density": m.density,
                "youngs_modulus": m.youngs_modulus_gpa,
                "poissons_ratio": m.poissons_ratio,
                "damping_ratio": m.damping_ratio,
            }),
            None => json!({"density": 0, "youngs_modulus": 0, "poissons_ratio": 0, "damping_ratio": 0}),
        };
        Ok(response.to_string())
    }

    fn vibration(&self, request: &AgentRequest) -> Result<String, InferenceError> {
        let category = Self::binding(request, "object_category")?;
        let response = match self.rules.vibrations.iter().find(|r| contains_ci(category, &r.pattern)) {
            Some(rule) => json!({"free_form": rule.free_form, "keywords": rule.keywords}),
            None => json!({
                "free_form": format!("{} hums steadily with a low even tremor.", capitalize(category)),
                "keywords": format!("{} hum", category.to_lowercase()),
            }),
        };
        Ok(response.to_string())
    }
}

impl AgentBackend for MockBackend {
    fn complete(&self, request: &AgentRequest) -> Result<String, InferenceError> {
        match request.agent {
            AgentKind::SceneAnalyzer => self.scene_category(request),
            AgentKind::ObjectAnalyzer => self.object_analysis(request),
            AgentKind::MaterialEstimator => self.material(request),
            AgentKind::VibrationDescriber => self.vibration(request),
        }
    }
}

/// Replays raw responses keyed by [`prompt_hash`].
#[derive(Debug, Clone, Default)]
pub struct ReplayBackend {
    responses: BTreeMap<String, String>,
}

impl ReplayBackend {
    pub fn new(responses: BTreeMap<String, String>) -> Self {
        ReplayBackend { responses }
    }

    pub fn from_file(path: &Path) -> Result<Self, InferenceError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| InferenceError::Config(format!("cannot read recording {}: {e}", path.display())))?;
        let responses = serde_json::from_str(&text)
            .map_err(|e| InferenceError::Config(format!("invalid recording {}: {e}", path.display())))?;
        Ok(ReplayBackend { responses })
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }
}

impl AgentBackend for ReplayBackend {
    fn complete(&self, request: &AgentRequest) -> Result<String, InferenceError> {
        let key = prompt_hash(&request.prompt);
        self.responses.get(&key).cloned().ok_or_else(|| {
            InferenceError::Backend(format!(
                "no recorded {} response for prompt hash {key}",
                request.agent.as_str()
            ))
        })
    }
}

/// Passes requests through and keeps every response for later replay.
pub struct RecordingBackend<B> {
    inner: B,
    recorded: Mutex<BTreeMap<String, String>>,
}

impl<B: AgentBackend> RecordingBackend<B> {
    pub fn new(inner: B) -> Self {
        RecordingBackend { inner, recorded: Mutex::new(BTreeMap::new()) }
    }

    pub fn recording(&self) -> BTreeMap<String, String> {
        self.recorded.lock().unwrap().clone()
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(&self.recording()).expect("string map serializes");
        std::fs::write(path, text + "\n")
    }
}

impl<B: AgentBackend> AgentBackend for RecordingBackend<B> {
    fn complete(&self, request: &AgentRequest) -> Result<String, InferenceError> {
        let raw = self.inner.complete(request)?;
        self.recorded.lock().unwrap().insert(prompt_hash(&request.prompt), raw.clone());
        Ok(raw)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallRecord {
    pub agent: AgentKind,
    pub subject: Option<String>,
}

/// Records the order in which agents were called.
pub struct LoggingBackend<B> {
    inner: B,
    calls: Mutex<Vec<CallRecord>>,
}

impl<B: AgentBackend> LoggingBackend<B> {
    pub fn new(inner: B) -> Self {
        LoggingBackend { inner, calls: Mutex::new(Vec::new()) }
    }

    pub fn calls(&self) -> Vec<CallRecord> {
        self.calls.lock().unwrap().clone()
    }
}

impl<B: AgentBackend> AgentBackend for LoggingBackend<B> {
    fn complete(&self, request: &AgentRequest) -> Result<String, InferenceError> {
        self.calls.lock().unwrap().push(CallRecord { agent: request.agent, subject: request.subject.clone() });
        self.inner.complete(request)
    }
}
