//! Role-aware narrative reports over a stored planning run.

mod context;
mod data;
mod external;
mod pipeline;
mod render;
mod template;

pub use crate::error::ReportError;
pub use context::{
    reflect, specialize, specialize_run, EngineeredContext, Level, ManifestEntry, Metric, ReflectionVerdict,
    ReportRequest, Role, WeekRange, MAX_REVISIONS,
};
pub use data::{
    aggregate_series, gather_data, group_label, kpis_by_level, GroupSeries, GroupStockout, GroupTransfer, ReportData,
    RunArtifacts, RunStore,
};
pub use external::{
    external_generate, ExternalSetup, GenerationRequest, TextGenerator, GENERATOR_SYSTEM, VERIFIER_SYSTEM,
};
pub use pipeline::{generate_report, ReportPipeline};
pub use render::{
    fmt_num, fmt_wos, parse_sections, render_report, table_rows, unmarked_fields, validate_sections, GenerationMode,
    NarrativeReport, ReportSection, SECTION_TITLES,
};
pub use template::{build_static_template, hl, CeTemplate, FormattingRule, FIELD_NAMES, REQUIRED_RULES};
