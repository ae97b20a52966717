//! Chat-completions client.
//!
//! Request: `POST {endpoint}` with bearer auth and
//! `{"model", "temperature", "messages": [{"role": "user", "content": [text, image_url...]}]}`,
//! images attached as base64 data URLs. Response text is read from
//! `choices[0].message.content`.
//!
//! Configured from `VIBRO_LLM_ENDPOINT`, `VIBRO_LLM_API_KEY`,
//! `VIBRO_LLM_MODEL` (default `gpt-4o`) and `VIBRO_LLM_TEMPERATURE` (default 0.2).

use std::path::Path;
use std::time::Duration;

use base64::Engine;
use serde_json::{json, Value};

use super::backend::{check_temperature, AgentBackend, AgentRequest, DEFAULT_TEMPERATURE};
use super::InferenceError;

pub const ENV_ENDPOINT: &str = "VIBRO_LLM_ENDPOINT";
pub const ENV_API_KEY: &str = "VIBRO_LLM_API_KEY";
pub const ENV_MODEL: &str = "VIBRO_LLM_MODEL";
pub const ENV_TEMPERATURE: &str = "VIBRO_LLM_TEMPERATURE";

pub struct HttpBackend {
    endpoint: String,
    api_key: String,
    model: String,
    temperature: f64,
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    pub fn new(endpoint: String, api_key: String, model: String, temperature: f64) -> Result<Self, InferenceError> {
        check_temperature(temperature)?;
        if endpoint.trim().is_empty() {
            return Err(InferenceError::Config(format!("http backend requires an endpoint (set {ENV_ENDPOINT})")));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| InferenceError::Backend(e.to_string()))?;
        Ok(HttpBackend { endpoint, api_key, model, temperature, client })
    }

    pub fn from_env(temperature: Option<f64>) -> Result<Self, InferenceError> {
        let endpoint = std::env::var(ENV_ENDPOINT).map_err(|_| {
            InferenceError::Config(format!("http backend requires an endpoint: set {ENV_ENDPOINT} and {ENV_API_KEY}"))
        })?;
        let api_key = std::env::var(ENV_API_KEY)
            .map_err(|_| InferenceError::Config(format!("http backend requires credentials: set {ENV_API_KEY}")))?;
        let model = std::env::var(ENV_MODEL).unwrap_or_else(|_| "gpt-4o".to_string());
        let temperature = match temperature {
            Some(t) => t,
            None => match std::env::var(ENV_TEMPERATURE) {
                Ok(t) => t
                    .parse()
                    .map_err(|_| InferenceError::Config(format!("{ENV_TEMPERATURE}=`{t}` is not a number")))?,
                Err(_) => DEFAULT_TEMPERATURE,
            },
        };
        HttpBackend::new(endpoint, api_key, model, temperature)
    }

    pub fn request_body(&self, request: &AgentRequest) -> Result<Value, InferenceError> {
        let mut content = vec![json!({"type": "text", "text": request.prompt})];
        for path in &request.images {
            content.push(json!({"type": "image_url", "image_url": {"url": data_url(path)?}}));
        }
        Ok(json!({
            "model": self.model,
            "temperature": self.temperature,
            "messages": [{"role": "user", "content": content}],
        }))
    }
}

fn data_url(path: &Path) -> Result<String, InferenceError> {
    let bytes = std::fs::read(path)
        .map_err(|e| InferenceError::Backend(format!("cannot read image {}: {e}", path.display())))?;
    let mime = match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("jpg") | Some("jpeg") => "image/jpeg",
        Some("webp") => "image/webp",
        _ => "image/png",
    };
    Ok(format!("data:{mime};base64,{}", base64::engine::general_purpose::STANDARD.encode(bytes)))
}

impl AgentBackend for HttpBackend {
    fn complete(&self, request: &AgentRequest) -> Result<String, InferenceError> {
        let body = self.request_body(request)?;
        let response = self
            .client
            .post(&self.endpoint)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| InferenceError::Backend(e.to_string()))?;
        let status = response.status();
        let value: Value = response.json().map_err(|e| InferenceError::Backend(e.to_string()))?;
        if !status.is_success() {
            return Err(InferenceError::Backend(format!("endpoint returned {status}: {value}")));
        }
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| InferenceError::Backend("response lacks choices[0].message.content".into()))
    }
}
