use super::context::{reflect, specialize_run, ReportRequest, Role, MAX_REVISIONS};
use super::data::{gather_data, RunStore};
use super::external::{external_generate, ExternalSetup, TextGenerator};
use super::render::{render_report, NarrativeReport};
use super::template::{build_static_template, CeTemplate};
use super::ReportError;
use crate::config::NetworkConfig;

/// Template, specialization, reflection, data gathering and generation.
pub struct ReportPipeline<'a> {
    store: &'a dyn RunStore,
    external: Option<(&'a ExternalSetup, &'a dyn TextGenerator)>,
    template: fn(&NetworkConfig) -> CeTemplate,
}

impl<'a> ReportPipeline<'a> {
    pub fn new(store: &'a dyn RunStore) -> Self {
        ReportPipeline { store, external: None, template: build_static_template }
    }

    pub fn with_external(mut self, setup: &'a ExternalSetup, client: &'a dyn TextGenerator) -> Self {
        self.external = Some((setup, client));
        self
    }

    pub fn with_template(mut self, template: fn(&NetworkConfig) -> CeTemplate) -> Self {
        self.template = template;
        self
    }

    pub fn run(&self, role: &str, request: &ReportRequest) -> Result<NarrativeReport, ReportError> {
        let role: Role = role.parse()?;
        let run = self.store.load(&request.run_id).ok_or_else(|| ReportError::RunNotFound(request.run_id.clone()))?;
        let mut revisions = 0;
        let ctx = loop {
            let template = (self.template)(&run.config);
            let ctx = specialize_run(&template, role, request, &run)?;
            let mut verdict = reflect(&ctx);
            if verdict.pass {
                break ctx;
            }
            if revisions == MAX_REVISIONS {
                verdict.revisions = revisions;
                return Err(ReportError::Reflection(verdict));
            }
            revisions += 1;
        };
        let data = gather_data(&ctx, self.store)?;
        Ok(match self.external {
            Some((setup, client)) => external_generate(&ctx, &data, setup, client),
            None => render_report(&data),
        })
    }
}

/// Deterministic report for `role` on the stored run.
pub fn generate_report(
    store: &dyn RunStore,
    role: &str,
    request: &ReportRequest,
) -> Result<NarrativeReport, ReportError> {
    ReportPipeline::new(store).run(role, request)
}
