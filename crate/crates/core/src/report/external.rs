use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::context::EngineeredContext;
use super::data::ReportData;
use super::render::{parse_sections, render_report, validate_sections, GenerationMode, NarrativeReport};
use super::ReportError;

pub const GENERATOR_SYSTEM: &str = "Write the report described by the context. Use exactly three sections with `## ` headings in this order: Transfer Rationale, Cost & Performance Analysis, Weeks of Supply (WOS) Impact. Use only the supplied data. Wrap every data field name in double asterisks.";

pub const VERIFIER_SYSTEM: &str = "Check the report against the context and data. Answer PASS if every figure is supported by the data and every formatting rule holds; otherwise answer FAIL followed by the problems found.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub system: String,
    pub context: String,
    pub data: String,
}

/// A text-generation backend. Implementations own transport and timeouts.
pub trait TextGenerator {
    fn generate(&self, model: &str, request: &GenerationRequest) -> Result<String, String>;
}

/// Generator and verifier model names. The two must differ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalSetup {
    pub generator_model: String,
    pub verifier_model: String,
    pub timeout: Duration,
}

impl ExternalSetup {
    pub fn new(
        generator_model: impl Into<String>,
        verifier_model: impl Into<String>,
        timeout: Duration,
    ) -> Result<Self, ReportError> {
        let generator_model = generator_model.into();
        let verifier_model = verifier_model.into();
        if generator_model.trim().is_empty() || verifier_model.trim().is_empty() {
            return Err(ReportError::Setup("generator and verifier model names are required".into()));
        }
        if generator_model == verifier_model {
            return Err(ReportError::Setup(format!(
                "verifier model must differ from generator model `{generator_model}`"
            )));
        }
        Ok(ExternalSetup { generator_model, verifier_model, timeout })
    }
}

fn fallback(data: &ReportData, warning: String) -> NarrativeReport {
    let mut r = render_report(data);
    r.warnings.push(warning);
    r
}

/// Generates with the generator model, checks structure, then asks the
/// verifier model. Any failure yields the deterministic report with a warning.
pub fn external_generate(
    ctx: &EngineeredContext,
    data: &ReportData,
    setup: &ExternalSetup,
    client: &dyn TextGenerator,
) -> NarrativeReport {
    let payload = match serde_json::to_string(data) {
        Ok(p) => p,
        Err(e) => return fallback(data, format!("external generation skipped: {e}")),
    };
    let request =
        GenerationRequest { system: GENERATOR_SYSTEM.to_string(), context: ctx.text.clone(), data: payload.clone() };
    let text = match client.generate(&setup.generator_model, &request) {
        Ok(t) => t,
        Err(e) => return fallback(data, format!("external generation failed: {e}")),
    };
    let sections = parse_sections(&text);
    if let Err(e) = validate_sections(&sections) {
        return fallback(data, format!("external response rejected: {e}"));
    }
    let review = GenerationRequest {
        system: VERIFIER_SYSTEM.to_string(),
        context: format!("{}\n\n# Data\n{payload}", ctx.text),
        data: text,
    };
    match client.generate(&setup.verifier_model, &review) {
        Ok(v) if v.trim_start().starts_with("PASS") => NarrativeReport {
            run_id: data.run_id.clone(),
            role: data.role,
            mode: GenerationMode::ExternalModel,
            sections,
            warnings: Vec::new(),
        },
        Ok(v) => {
            fallback(data, format!("external response failed verification: {}", v.trim().lines().next().unwrap_or("")))
        }
        Err(e) => fallback(data, format!("external verification failed: {e}")),
    }
}
