use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::data::{group_label, RunArtifacts, RunStore};
use super::template::{CeTemplate, REQUIRED_RULES};
use super::ReportError;

/// Maximum number of re-specializations after a failed reflection.
pub const MAX_REVISIONS: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Analyst,
    Manager,
    Executive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Item,
    Family,
    Region,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::Analyst, Role::Manager, Role::Executive];

    pub fn level(self) -> Level {
        match self {
            Role::Analyst => Level::Item,
            Role::Manager => Level::Family,
            Role::Executive => Level::Region,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Analyst => "analyst",
            Role::Manager => "manager",
            Role::Executive => "executive",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "analyst" => Ok(Role::Analyst),
            "manager" => Ok(Role::Manager),
            "executive" => Ok(Role::Executive),
            _ => Err(ReportError::UnknownRole(s.to_string())),
        }
    }
}

impl Level {
    pub fn as_str(self) -> &'static str {
        match self {
            Level::Item => "item",
            Level::Family => "family",
            Level::Region => "region",
        }
    }
}

impl FromStr for Level {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "item" => Ok(Level::Item),
            "family" => Ok(Level::Family),
            "region" => Ok(Level::Region),
            _ => Err(ReportError::BadRequest(format!("unknown level {s}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Transfers,
    Stockouts,
    Costs,
    Wos,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Transfers, Metric::Stockouts, Metric::Costs, Metric::Wos];

    pub fn series_name(self) -> &'static str {
        match self {
            Metric::Transfers => "transfers",
            Metric::Stockouts => "stockout_events",
            Metric::Costs => "costs",
            Metric::Wos => "wos",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeekRange {
    pub from: u32,
    pub to: u32,
}

impl WeekRange {
    pub fn contains(&self, week: u32) -> bool {
        self.from <= week && week <= self.to
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportRequest {
    pub run_id: String,
    /// Empty means every metric.
    #[serde(default)]
    pub metrics: Vec<Metric>,
    /// Empty means every site.
    #[serde(default)]
    pub sites: Vec<String>,
    /// `None` means the full horizon.
    #[serde(default)]
    pub weeks: Option<WeekRange>,
}

impl ReportRequest {
    pub fn new(run_id: impl Into<String>) -> Self {
        ReportRequest { run_id: run_id.into(), metrics: Vec::new(), sites: Vec::new(), weeks: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub series: String,
    pub level: Level,
    /// Group labels at `level`, e.g. sites for analysts or regions for executives.
    pub groups: Vec<String>,
    pub weeks: WeekRange,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineeredContext {
    pub role: Option<Role>,
    pub level: Level,
    /// Request with defaults filled in.
    pub request: ReportRequest,
    pub template: CeTemplate,
    pub text: String,
    pub manifest: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReflectionVerdict {
    pub pass: bool,
    pub missing: Vec<String>,
    pub revisions: u32,
}

/// Resolves `request` against the stored run and specializes `template` for `role`.
pub fn specialize(
    template: &CeTemplate,
    role: Role,
    request: &ReportRequest,
    store: &dyn RunStore,
) -> Result<EngineeredContext, ReportError> {
    let run = store.load(&request.run_id).ok_or_else(|| ReportError::RunNotFound(request.run_id.clone()))?;
    specialize_run(template, role, request, &run)
}

pub fn specialize_run(
    template: &CeTemplate,
    role: Role,
    request: &ReportRequest,
    run: &RunArtifacts,
) -> Result<EngineeredContext, ReportError> {
    let cfg = &run.config;
    let horizon = &cfg.horizon;
    let (first, last) = match (horizon.first(), horizon.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => return Err(ReportError::BadRequest("run has an empty horizon".into())),
    };

    let mut req = request.clone();
    if req.metrics.is_empty() {
        req.metrics = Metric::ALL.to_vec();
    }
    req.metrics.sort();
    req.metrics.dedup();
    let site_ids = cfg.site_ids();
    if req.sites.is_empty() {
        req.sites = site_ids.clone();
    } else {
        for s in &req.sites {
            if !site_ids.contains(s) {
                return Err(ReportError::BadRequest(format!("unknown site {s}")));
            }
        }
        req.sites = site_ids.iter().filter(|s| req.sites.contains(s)).cloned().collect();
    }
    let range = req.weeks.unwrap_or(WeekRange { from: first, to: last });
    if range.from > range.to || !horizon.contains(&range.from) || !horizon.contains(&range.to) {
        return Err(ReportError::BadRequest(format!(
            "week range {}..{} outside horizon {first}..{last}",
            range.from, range.to
        )));
    }
    req.weeks = Some(range);

    let level = role.level();
    let mut groups: Vec<String> = Vec::new();
    for item in cfg.item_ids() {
        for site in &req.sites {
            let g = group_label(cfg, level, &item, site);
            if !groups.contains(&g) {
                groups.push(g);
            }
        }
    }
    let manifest: Vec<ManifestEntry> = req
        .metrics
        .iter()
        .map(|m| ManifestEntry { series: m.series_name().to_string(), level, groups: groups.clone(), weeks: range })
        .collect();

    let mut text = format!("# Audience\nRole: {role}. Aggregation level: {}. Run: {}.\n", level.as_str(), req.run_id);
    text.push_str(match role {
        Role::Analyst => "Report per site and week with exact quantities.\n",
        Role::Manager => "Report per product family and site with lane totals.\n",
        Role::Executive => "Report per region with totals only.\n",
    });
    text.push_str(&format!("Weeks {}..{}.\n\n# Data manifest\n", range.from, range.to));
    for e in &manifest {
        text.push_str(&format!("- {} by {}: {}\n", e.series, e.level.as_str(), e.groups.join(", ")));
    }
    text.push('\n');
    text.push_str(&template.to_text());

    Ok(EngineeredContext { role: Some(role), level, request: req, template: template.clone(), text, manifest })
}

/// Deterministic completeness checklist.
pub fn reflect(ctx: &EngineeredContext) -> ReflectionVerdict {
    let mut missing = Vec::new();
    if ctx.role.is_none() {
        missing.push("role".to_string());
    }
    let resolvable =
        !ctx.manifest.is_empty() && ctx.manifest.iter().all(|e| !e.groups.is_empty() && e.weeks.from <= e.weeks.to);
    if !resolvable {
        missing.push("manifest".to_string());
    }
    for (name, ok) in ctx.template.ingredients() {
        if !ok {
            missing.push(name.to_string());
        }
    }
    if !REQUIRED_RULES.iter().all(|r| ctx.template.formatting_rules.contains(r)) {
        missing.push("formatting_rules".to_string());
    }
    ReflectionVerdict { pass: missing.is_empty(), missing, revisions: 0 }
}
