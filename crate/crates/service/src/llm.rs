//! HTTP text-generation client for external-model reports. Speaks the
//! common chat-completions JSON shape.

use std::time::Duration;

use netplan_core::report::{ExternalSetup, GenerationRequest, ReportError, TextGenerator};
use serde_json::{json, Value};

pub const ENV_ENDPOINT: &str = "NETPLAN_LLM_ENDPOINT";
pub const ENV_KEY: &str = "NETPLAN_LLM_KEY";
pub const ENV_GENERATOR: &str = "NETPLAN_LLM_GENERATOR_MODEL";
pub const ENV_VERIFIER: &str = "NETPLAN_LLM_VERIFIER_MODEL";
pub const ENV_TIMEOUT: &str = "NETPLAN_LLM_TIMEOUT_SECS";

pub struct HttpGenerator {
    endpoint: String,
    key: Option<String>,
    agent: ureq::Agent,
}

impl HttpGenerator {
    pub fn new(endpoint: impl Into<String>, key: Option<String>, timeout: Duration) -> Self {
        HttpGenerator { endpoint: endpoint.into(), key, agent: ureq::AgentBuilder::new().timeout(timeout).build() }
    }
}

impl TextGenerator for HttpGenerator {
    fn generate(&self, model: &str, request: &GenerationRequest) -> Result<String, String> {
        let body = json!({
            "model": model,
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": format!("{}\n\n# Data\n{}", request.context, request.data)},
            ],
        });
        let mut req = self.agent.post(&self.endpoint).set("content-type", "application/json");
        if let Some(k) = &self.key {
            req = req.set("authorization", &format!("Bearer {k}"));
        }
        let resp: Value = req.send_json(body).map_err(|e| e.to_string())?.into_json().map_err(|e| e.to_string())?;
        resp["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| "response has no choices[0].message.content".to_string())
    }
}

/// External client from the environment; `Ok(None)` when no endpoint is set.
pub fn external_from_env() -> Result<Option<crate::service::External>, ReportError> {
    let Ok(endpoint) = std::env::var(ENV_ENDPOINT) else {
        return Ok(None);
    };
    if endpoint.trim().is_empty() {
        return Ok(None);
    }
    let var = |k: &str| std::env::var(k).unwrap_or_default();
    let timeout = std::env::var(ENV_TIMEOUT).ok().and_then(|v| v.parse::<u64>().ok()).unwrap_or(60);
    let setup = ExternalSetup::new(var(ENV_GENERATOR), var(ENV_VERIFIER), Duration::from_secs(timeout))?;
    let key = std::env::var(ENV_KEY).ok().filter(|k| !k.is_empty());
    let client = HttpGenerator::new(endpoint, key, setup.timeout);
    Ok(Some((setup, Box::new(client))))
}
