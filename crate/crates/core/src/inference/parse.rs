//! Parsing of raw agent responses.
//!
//! Models are asked for bare JSON but routinely wrap it in code fences or
//! pick their own key spelling (`"Young's modulus"`, `"youngs_modulus_gpa"`).
//! Keys are normalized to snake case and matched against a short alias list
//! per field; numbers and booleans given as strings are coerced.

use serde_json::{Map, Value};

use super::materials::gpa_to_pa;
use super::{AgentKind, InferenceError, MaterialProperties, ObjectAnalysis, VibrationDescription};
use crate::scene::parse_size_triple;

/// Which structured output a response is expected to carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schema {
    SceneCategory,
    ObjectAnalysis,
    MaterialProperties,
    VibrationDescription,
}

impl Schema {
    pub fn agent(self) -> AgentKind {
        match self {
            Schema::SceneCategory => AgentKind::SceneAnalyzer,
            Schema::ObjectAnalysis => AgentKind::ObjectAnalyzer,
            Schema::MaterialProperties => AgentKind::MaterialEstimator,
            Schema::VibrationDescription => AgentKind::VibrationDescriber,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AgentOutput {
    SceneCategory(String),
    ObjectAnalysis(ObjectAnalysis),
    MaterialProperties(MaterialProperties),
    VibrationDescription(VibrationDescription),
}

pub fn parse_agent_json(raw: &str, schema: Schema) -> Result<AgentOutput, InferenceError> {
    Ok(match schema {
        Schema::SceneCategory => AgentOutput::SceneCategory(parse_scene_category(raw)?),
        Schema::ObjectAnalysis => AgentOutput::ObjectAnalysis(parse_object_analysis(raw)?),
        Schema::MaterialProperties => AgentOutput::MaterialProperties(parse_material_properties(raw)?),
        Schema::VibrationDescription => AgentOutput::VibrationDescription(parse_vibration_description(raw)?),
    })
}

/// Removes Markdown code fences (with or without a language tag).
pub fn strip_affixes(raw: &str) -> &str {
    let mut text = raw.trim();
    if let Some(rest) = text.strip_prefix("```") {
        let rest = match rest.find('\n') {
            Some(nl) if rest[..nl].chars().all(|c| c.is_ascii_alphanumeric()) => &rest[nl + 1..],
            _ => rest,
        };
        text = rest.trim_end();
        text = text.strip_suffix("```").unwrap_or(text).trim();
    }
    text
}

pub fn parse_scene_category(raw: &str) -> Result<String, InferenceError> {
    let text = strip_affixes(raw);
    let text = match serde_json::from_str::<Value>(text) {
        Ok(Value::Object(map)) => {
            let fields = Fields::new(AgentKind::SceneAnalyzer, map);
            return fields.text("scene_category", &["scene_category", "category"]);
        }
        Ok(Value::String(s)) => s,
        _ => text.to_string(),
    };
    let category = text
        .trim()
        .trim_end_matches('.')
        .trim_matches(|c| c == '"' || c == '\'' || c == '`')
        .trim_end_matches('.')
        .trim()
        .to_string();
    if category.is_empty() {
        return Err(malformed(AgentKind::SceneAnalyzer, Some("scene_category"), "empty response"));
    }
    Ok(category)
}

pub fn parse_object_analysis(raw: &str) -> Result<ObjectAnalysis, InferenceError> {
    let fields = Fields::parse(AgentKind::ObjectAnalyzer, raw)?;
    let size_field = "estimated_size";
    let estimated_size = match fields.get(&["estimated_size", "size"]) {
        Some(Value::String(s)) => parse_size_triple(s)
            .map_err(|e| malformed(AgentKind::ObjectAnalyzer, Some(size_field), &e.to_string()))?,
        Some(Value::Array(items)) if items.len() == 3 => {
            let mut v = [0.0; 3];
            for (slot, item) in v.iter_mut().zip(items) {
                *slot = coerce_f64(item).ok_or_else(|| {
                    malformed(AgentKind::ObjectAnalyzer, Some(size_field), "non-numeric component")
                })?;
            }
            v.into()
        }
        Some(_) => return Err(malformed(AgentKind::ObjectAnalyzer, Some(size_field), "expected 'x,y,z' string")),
        None => return Err(malformed(AgentKind::ObjectAnalyzer, Some(size_field), "missing")),
    };
    if !(estimated_size.x > 0.0 && estimated_size.y > 0.0 && estimated_size.z > 0.0) {
        return Err(malformed(AgentKind::ObjectAnalyzer, Some(size_field), "components must be positive"));
    }
    Ok(ObjectAnalysis {
        object_category: fields.text("object_category", &["object_category", "category"])?,
        object_category_reason: fields.text(
            "object_category_reason",
            &["object_category_reason", "reason_for_object_category", "object_category_reasoning", "category_reason"],
        )?,
        material_category: fields.text("material_category", &["material_category", "material"])?,
        usage: fields.text("usage", &["usage", "estimated_usage"])?,
        estimated_size,
        estimated_size_reason: fields.text(
            "estimated_size_reason",
            &["estimated_size_reason", "reason_for_estimated_size", "size_reason", "estimated_size_reasoning"],
        )?,
        should_vibrate: fields.boolean(
            "should_vibrate",
            &["should_vibrate", "vibrate_or_not", "vibrate", "whether_the_object_should_vibrate"],
        )?,
        should_vibrate_reason: fields.text(
            "should_vibrate_reason",
            &["should_vibrate_reason", "reason_for_should_vibrate", "vibrate_reason", "vibrate_or_not_reason"],
        )?,
    })
}

/// Parses estimator output. The modulus arrives in GPa and is stored in Pa.
pub fn parse_material_properties(raw: &str) -> Result<MaterialProperties, InferenceError> {
    let agent = AgentKind::MaterialEstimator;
    let fields = Fields::parse(agent, raw)?;
    let density = fields.number("density", &["density", "density_kg_m3", "density_kg_m_3", "density_kg_m"])?;
    let modulus_gpa = fields.number(
        "youngs_modulus",
        &[
            "youngs_modulus",
            "young_s_modulus",
            "young_modulus",
            "youngs_modulus_gpa",
            "young_s_modulus_gpa",
            "elastic_modulus",
            "elastic_modulus_gpa",
        ],
    )?;
    let poisson = fields.number("poissons_ratio", &["poissons_ratio", "poisson_s_ratio", "poisson_ratio"])?;
    let damping = fields.number("damping_ratio", &["damping_ratio", "damping"])?;

    if density == 0.0 && modulus_gpa == 0.0 && poisson == 0.0 && damping == 0.0 {
        return Err(InferenceError::EstimationUnavailable);
    }
    let props = MaterialProperties {
        density,
        elastic_modulus: gpa_to_pa(modulus_gpa),
        poissons_ratio: poisson,
        damping_ratio: damping,
    };
    props
        .validate()
        .map_err(|detail| malformed(agent, None, &detail))?;
    Ok(props)
}

pub fn parse_vibration_description(raw: &str) -> Result<VibrationDescription, InferenceError> {
    let fields = Fields::parse(AgentKind::VibrationDescriber, raw)?;
    let desc = VibrationDescription {
        free_form: fields.text(
            "free_form",
            &["free_form", "free_form_sentence", "sentence", "description", "vibration_description"],
        )?,
        keywords: fields.text("keywords", &["keywords", "combined_keywords", "keyword"])?,
    };
    desc.validate().map_err(InferenceError::InvariantViolation)?;
    Ok(desc)
}

fn malformed(agent: AgentKind, field: Option<&str>, detail: &str) -> InferenceError {
    InferenceError::Malformed {
        agent,
        field: field.map(str::to_string),
        detail: detail.to_string(),
    }
}

fn normalize_key(key: &str) -> String {
    let mut out = String::with_capacity(key.len());
    for c in key.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    out.trim_matches('_').to_string()
}

fn coerce_f64(value: &Value) -> Option<f64> {
    let v = match value {
        Value::Number(n) => n.as_f64()?,
        Value::String(s) => s.trim().parse().ok()?,
        _ => return None,
    };
    v.is_finite().then_some(v)
}

struct Fields {
    agent: AgentKind,
    map: Map<String, Value>,
}

impl Fields {
    fn new(agent: AgentKind, raw: Map<String, Value>) -> Self {
        let map = raw.into_iter().map(|(k, v)| (normalize_key(&k), v)).collect();
        Fields { agent, map }
    }

    fn parse(agent: AgentKind, raw: &str) -> Result<Self, InferenceError> {
        match serde_json::from_str::<Value>(strip_affixes(raw)) {
            Ok(Value::Object(map)) => Ok(Fields::new(agent, map)),
            Ok(_) => Err(malformed(agent, None, "expected a JSON object")),
            Err(e) => Err(malformed(agent, None, &e.to_string())),
        }
    }

    fn get(&self, aliases: &[&str]) -> Option<&Value> {
        aliases.iter().find_map(|a| self.map.get(*a))
    }

    fn require(&self, field: &str, aliases: &[&str]) -> Result<&Value, InferenceError> {
        self.get(aliases).ok_or_else(|| malformed(self.agent, Some(field), "missing"))
    }

    fn text(&self, field: &str, aliases: &[&str]) -> Result<String, InferenceError> {
        let text = match self.require(field, aliases)? {
            Value::String(s) => s.trim().to_string(),
            Value::Number(n) => n.to_string(),
            Value::Bool(b) => b.to_string(),
            _ => return Err(malformed(self.agent, Some(field), "expected text")),
        };
        if text.is_empty() {
            return Err(malformed(self.agent, Some(field), "empty"));
        }
        Ok(text)
    }

    fn number(&self, field: &str, aliases: &[&str]) -> Result<f64, InferenceError> {
        coerce_f64(self.require(field, aliases)?).ok_or_else(|| malformed(self.agent, Some(field), "expected a number"))
    }

    fn boolean(&self, field: &str, aliases: &[&str]) -> Result<bool, InferenceError> {
        match self.require(field, aliases)? {
            Value::Bool(b) => Ok(*b),
            Value::String(s) => match s.trim().to_ascii_lowercase().as_str() {
                "true" | "yes" => Ok(true),
                "false" | "no" => Ok(false),
                _ => Err(malformed(self.agent, Some(field), "expected a boolean")),
            },
            _ => Err(malformed(self.agent, Some(field), "expected a boolean")),
        }
    }
}
