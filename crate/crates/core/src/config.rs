//! Scenario configuration: the JSON document planners edit, its validation,
//! and the dense per-item [`Scenario`] the model and simulator consume.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub sites: Vec<SiteDecl>,
    pub items: Vec<ItemDecl>,
    pub horizon: Vec<u32>,
    #[serde(default = "default_frozen")]
    pub frozen_weeks: usize,
    pub parameters: Parameters,
    /// Per-item overrides of `parameters`; absent fields fall back to the
    /// top-level table.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub item_parameters: BTreeMap<String, Parameters>,
    #[serde(default)]
    pub kpi: KpiSettings,
    #[serde(default)]
    pub roles: RoleMaps,
}

fn default_frozen() -> usize {
    3
}

/// A site given either as a bare id or as `{ "id": .., "region": .. }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SiteDecl {
    Id(String),
    Labeled {
        id: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        region: Option<String>,
    },
}

impl SiteDecl {
    pub fn id(&self) -> &str {
        match self {
            SiteDecl::Id(id) | SiteDecl::Labeled { id, .. } => id,
        }
    }
    fn label(&self) -> Option<&str> {
        match self {
            SiteDecl::Id(_) => None,
            SiteDecl::Labeled { region, .. } => region.as_deref(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ItemDecl {
    Id(String),
    Labeled {
        id: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        family: Option<String>,
    },
}

impl ItemDecl {
    pub fn id(&self) -> &str {
        match self {
            ItemDecl::Id(id) | ItemDecl::Labeled { id, .. } => id,
        }
    }
    fn label(&self) -> Option<&str> {
        match self {
            ItemDecl::Id(_) => None,
            ItemDecl::Labeled { family, .. } => family.as_deref(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demand: Option<ParamTable>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub receipts: Option<ParamTable>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_inventory: Option<ParamTable>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub safety_stock: Option<ParamTable>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ss_benefit: Option<ParamTable>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shortage_penalty: Option<ParamTable>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_ship_cost: Option<ParamTable>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_ship_qty: Option<f64>,
}

/// Parameter table: one number for every (site, week), or a map from site
/// to a number, a per-week list aligned with the horizon, or a week map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamTable {
    Uniform(f64),
    PerSite(BTreeMap<String, SiteValues>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SiteValues {
    Scalar(f64),
    Series(Vec<f64>),
    ByWeek(BTreeMap<String, f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpiSettings {
    #[serde(default = "default_c_hold")]
    pub c_hold: ParamTable,
    #[serde(default = "default_wos_window")]
    pub wos_window: usize,
}

fn default_c_hold() -> ParamTable {
    ParamTable::Uniform(1.0)
}

fn default_wos_window() -> usize {
    4
}

impl Default for KpiSettings {
    fn default() -> Self {
        Self { c_hold: default_c_hold(), wos_window: default_wos_window() }
    }
}

/// Aggregation maps. Sites without a region and items without a family
/// form a group of their own.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RoleMaps {
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub regions: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub families: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { path: path.into(), message: message.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub pass: bool,
    pub violations: Vec<Violation>,
    pub advisories: Vec<String>,
}

/// Parses and validates a raw JSON document. Parse failures are reported as
/// a single violation at path `$`.
pub fn validate_json(text: &str) -> (Option<NetworkConfig>, ValidationReport) {
    match serde_json::from_str::<NetworkConfig>(text) {
        Ok(cfg) => {
            let report = validate_config(&cfg);
            (Some(cfg), report)
        }
        Err(e) => (
            None,
            ValidationReport {
                pass: false,
                violations: vec![Violation::new("$", e.to_string())],
                advisories: Vec::new(),
            },
        ),
    }
}

pub fn validate_config(cfg: &NetworkConfig) -> ValidationReport {
    let mut v = Vec::new();
    let mut advisories = Vec::new();

    let mut seen = HashSet::new();
    for (k, s) in cfg.sites.iter().enumerate() {
        if s.id().is_empty() {
            v.push(Violation::new(format!("sites[{k}]"), "empty site id"));
        } else if !seen.insert(s.id()) {
            v.push(Violation::new(format!("sites[{k}]"), format!("duplicate site {}", s.id())));
        }
    }
    if cfg.sites.is_empty() {
        v.push(Violation::new("sites", "at least one site is required"));
    }
    let mut seen_items = HashSet::new();
    for (k, it) in cfg.items.iter().enumerate() {
        if it.id().is_empty() {
            v.push(Violation::new(format!("items[{k}]"), "empty item id"));
        } else if !seen_items.insert(it.id()) {
            v.push(Violation::new(format!("items[{k}]"), format!("duplicate item {}", it.id())));
        }
    }
    if cfg.items.is_empty() {
        v.push(Violation::new("items", "at least one item is required"));
    }
    let mut seen_weeks = HashSet::new();
    for (k, w) in cfg.horizon.iter().enumerate() {
        if !seen_weeks.insert(*w) {
            v.push(Violation::new(format!("horizon[{k}]"), format!("duplicate week {w}")));
        }
    }
    if cfg.horizon.is_empty() {
        v.push(Violation::new("horizon", "at least one week is required"));
    }
    if cfg.frozen_weeks > cfg.horizon.len() {
        v.push(Violation::new(
            "frozen_weeks",
            format!("{} exceeds horizon length {}", cfg.frozen_weeks, cfg.horizon.len()),
        ));
    } else if !cfg.horizon.is_empty() && cfg.frozen_weeks == cfg.horizon.len() {
        advisories.push("all weeks frozen; model reduces to simulation".to_string());
    }

    let sites: HashSet<&str> = cfg.sites.iter().map(SiteDecl::id).collect();
    let weeks: HashSet<u32> = cfg.horizon.iter().copied().collect();
    let ctx = TableCtx { sites: &sites, weeks: &weeks, horizon_len: cfg.horizon.len() };

    check_parameters(&cfg.parameters, "parameters", &ctx, &mut v);
    for (item, p) in &cfg.item_parameters {
        let path = format!("item_parameters.{item}");
        if !seen_items.contains(item.as_str()) {
            v.push(Violation::new(path.clone(), format!("unknown item {item}")));
        }
        check_parameters(p, &path, &ctx, &mut v);
    }
    if cfg.parameters.demand.is_none() {
        v.push(Violation::new("parameters.demand", "missing"));
    }
    if cfg.parameters.initial_inventory.is_none() {
        v.push(Violation::new("parameters.initial_inventory", "missing"));
    }

    ctx.check(&cfg.kpi.c_hold, "kpi.c_hold", Shape::PerSite, true, &mut v);
    if cfg.kpi.wos_window < 1 {
        v.push(Violation::new("kpi.wos_window", "must be >= 1"));
    }

    for (k, s) in cfg.sites.iter().enumerate() {
        if let (Some(label), Some(mapped)) = (s.label(), cfg.roles.regions.get(s.id())) {
            if label != mapped {
                v.push(Violation::new(
                    format!("sites[{k}].region"),
                    format!("conflicts with roles.regions.{} = {mapped}", s.id()),
                ));
            }
        }
    }
    for site in cfg.roles.regions.keys() {
        if !sites.contains(site.as_str()) {
            v.push(Violation::new(format!("roles.regions.{site}"), format!("unknown site {site}")));
        }
    }
    for (k, it) in cfg.items.iter().enumerate() {
        if let (Some(label), Some(mapped)) = (it.label(), cfg.roles.families.get(it.id())) {
            if label != mapped {
                v.push(Violation::new(
                    format!("items[{k}].family"),
                    format!("conflicts with roles.families.{} = {mapped}", it.id()),
                ));
            }
        }
    }
    for item in cfg.roles.families.keys() {
        if !seen_items.contains(item.as_str()) {
            v.push(Violation::new(format!("roles.families.{item}"), format!("unknown item {item}")));
        }
    }

    ValidationReport { pass: v.is_empty(), violations: v, advisories }
}

#[derive(Clone, Copy, PartialEq)]
enum Shape {
    PerSite,
    PerSiteWeek,
}

struct TableCtx<'a> {
    sites: &'a HashSet<&'a str>,
    weeks: &'a HashSet<u32>,
    horizon_len: usize,
}

fn check_parameters(p: &Parameters, prefix: &str, ctx: &TableCtx, v: &mut Vec<Violation>) {
    let tables = [
        ("demand", &p.demand, Shape::PerSiteWeek, true),
        ("receipts", &p.receipts, Shape::PerSiteWeek, true),
        ("initial_inventory", &p.initial_inventory, Shape::PerSite, false),
        ("safety_stock", &p.safety_stock, Shape::PerSiteWeek, true),
        ("ss_benefit", &p.ss_benefit, Shape::PerSiteWeek, true),
        ("shortage_penalty", &p.shortage_penalty, Shape::PerSiteWeek, true),
        ("fixed_ship_cost", &p.fixed_ship_cost, Shape::PerSiteWeek, true),
    ];
    for (name, table, shape, nonneg) in tables {
        if let Some(t) = table {
            ctx.check(t, &format!("{prefix}.{name}"), shape, nonneg, v);
        }
    }
    if let Some(q) = p.min_ship_qty {
        if !q.is_finite() || q < 0.0 {
            v.push(Violation::new(format!("{prefix}.min_ship_qty"), "must be a finite number >= 0"));
        }
    }
}

impl TableCtx<'_> {
    fn check(&self, t: &ParamTable, path: &str, shape: Shape, nonneg: bool, v: &mut Vec<Violation>) {
        let bad = |x: f64| !x.is_finite() || (nonneg && x < 0.0);
        let msg = if nonneg { "must be a finite number >= 0" } else { "must be finite" };
        match t {
            ParamTable::Uniform(x) => {
                if bad(*x) {
                    v.push(Violation::new(path, msg));
                }
            }
            ParamTable::PerSite(map) => {
                for (site, vals) in map {
                    let p = format!("{path}.{site}");
                    if !self.sites.contains(site.as_str()) {
                        v.push(Violation::new(p.clone(), format!("unknown site {site}")));
                    }
                    match vals {
                        SiteValues::Scalar(x) => {
                            if bad(*x) {
                                v.push(Violation::new(p, msg));
                            }
                        }
                        SiteValues::Series(xs) => {
                            if shape == Shape::PerSite {
                                v.push(Violation::new(p, "expected a single number per site"));
                                continue;
                            }
                            if xs.len() != self.horizon_len {
                                v.push(Violation::new(
                                    p.clone(),
                                    format!("expected {} weekly values, found {}", self.horizon_len, xs.len()),
                                ));
                            }
                            for (k, x) in xs.iter().enumerate() {
                                if bad(*x) {
                                    v.push(Violation::new(format!("{p}[{k}]"), msg));
                                }
                            }
                        }
                        SiteValues::ByWeek(m) => {
                            if shape == Shape::PerSite {
                                v.push(Violation::new(p, "expected a single number per site"));
                                continue;
                            }
                            for (wk, x) in m {
                                let wp = format!("{p}.{wk}");
                                match wk.parse::<u32>() {
                                    Ok(w) if self.weeks.contains(&w) => {}
                                    _ => v.push(Violation::new(wp.clone(), format!("unknown week {wk}"))),
                                }
                                if bad(*x) {
                                    v.push(Violation::new(wp, msg));
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Dense, validated single-item view of a configuration. Tables are indexed
/// `[site][week]` in declaration and horizon order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub item: String,
    pub sites: Vec<String>,
    pub weeks: Vec<u32>,
    pub frozen_weeks: usize,
    pub demand: Vec<Vec<f64>>,
    pub receipts: Vec<Vec<f64>>,
    pub initial_inventory: Vec<f64>,
    pub safety_stock: Vec<Vec<f64>>,
    pub ss_benefit: Vec<Vec<f64>>,
    pub shortage_penalty: Vec<Vec<f64>>,
    pub fixed_ship_cost: Vec<Vec<f64>>,
    pub min_ship_qty: f64,
    pub c_hold: Vec<f64>,
    pub wos_window: usize,
}

impl Scenario {
    pub fn num_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn num_weeks(&self) -> usize {
        self.weeks.len()
    }

    pub fn site_index(&self, id: &str) -> Option<usize> {
        self.sites.iter().position(|s| s == id)
    }

    pub fn week_index(&self, week: u32) -> Option<usize> {
        self.weeks.iter().position(|w| *w == week)
    }

    pub fn is_frozen(&self, t: usize) -> bool {
        t < self.frozen_weeks
    }

    /// Shape and sign checks for scenarios built directly rather than
    /// through [`NetworkConfig::scenario`].
    pub fn validate(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        let (n, w) = (self.num_sites(), self.num_weeks());
        if n == 0 {
            v.push(Violation::new("sites", "at least one site is required"));
        }
        if w == 0 {
            v.push(Violation::new("weeks", "at least one week is required"));
        }
        if self.sites.iter().collect::<HashSet<_>>().len() != n {
            v.push(Violation::new("sites", "duplicate site"));
        }
        if self.frozen_weeks > w {
            v.push(Violation::new("frozen_weeks", "exceeds horizon length"));
        }
        let grids = [
            ("demand", &self.demand),
            ("receipts", &self.receipts),
            ("safety_stock", &self.safety_stock),
            ("ss_benefit", &self.ss_benefit),
            ("shortage_penalty", &self.shortage_penalty),
            ("fixed_ship_cost", &self.fixed_ship_cost),
        ];
        for (name, g) in grids {
            if g.len() != n || g.iter().any(|row| row.len() != w) {
                v.push(Violation::new(name, format!("expected {n} x {w} values")));
            } else if g.iter().flatten().any(|x| !x.is_finite() || *x < 0.0) {
                v.push(Violation::new(name, "must be finite and >= 0"));
            }
        }
        if self.initial_inventory.len() != n || self.initial_inventory.iter().any(|x| !x.is_finite()) {
            v.push(Violation::new("initial_inventory", format!("expected {n} finite values")));
        }
        if self.c_hold.len() != n || self.c_hold.iter().any(|x| !x.is_finite() || *x < 0.0) {
            v.push(Violation::new("c_hold", format!("expected {n} values >= 0")));
        }
        if !self.min_ship_qty.is_finite() || self.min_ship_qty < 0.0 {
            v.push(Violation::new("min_ship_qty", "must be finite and >= 0"));
        }
        if self.wos_window < 1 {
            v.push(Violation::new("wos_window", "must be >= 1"));
        }
        v
    }
}

impl NetworkConfig {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn site_ids(&self) -> Vec<String> {
        self.sites.iter().map(|s| s.id().to_string()).collect()
    }

    pub fn item_ids(&self) -> Vec<String> {
        self.items.iter().map(|i| i.id().to_string()).collect()
    }

    pub fn region_of(&self, site: &str) -> String {
        if let Some(r) = self.roles.regions.get(site) {
            return r.clone();
        }
        self.sites.iter().find(|s| s.id() == site).and_then(|s| s.label()).unwrap_or(site).to_string()
    }

    pub fn family_of(&self, item: &str) -> String {
        if let Some(f) = self.roles.families.get(item) {
            return f.clone();
        }
        self.items.iter().find(|i| i.id() == item).and_then(|i| i.label()).unwrap_or(item).to_string()
    }

    /// Dense scenario for `item`, merging item overrides over the top-level
    /// parameters. Fails with the validation violations on invalid configs.
    pub fn scenario(&self, item: &str) -> Result<Scenario, ModelError> {
        let report = validate_config(self);
        if !report.pass {
            return Err(ModelError::InvalidConfig(report.violations));
        }
        if !self.items.iter().any(|i| i.id() == item) {
            return Err(ModelError::UnknownItem(item.to_string()));
        }
        let over = self.item_parameters.get(item);
        let pick = |f: fn(&Parameters) -> &Option<ParamTable>| -> Option<&ParamTable> {
            over.and_then(|o| f(o).as_ref()).or_else(|| f(&self.parameters).as_ref())
        };
        let sites = self.site_ids();
        let weeks = self.horizon.clone();
        let week_pos: HashMap<u32, usize> = weeks.iter().enumerate().map(|(k, w)| (*w, k)).collect();
        let grid = |t: Option<&ParamTable>| dense_grid(t, &sites, &week_pos, weeks.len());
        let per_site = |t: Option<&ParamTable>| -> Vec<f64> {
            grid(t).into_iter().map(|row| row.first().copied().unwrap_or(0.0)).collect()
        };
        Ok(Scenario {
            item: item.to_string(),
            demand: grid(pick(|p| &p.demand)),
            receipts: grid(pick(|p| &p.receipts)),
            initial_inventory: per_site(pick(|p| &p.initial_inventory)),
            safety_stock: grid(pick(|p| &p.safety_stock)),
            ss_benefit: grid(pick(|p| &p.ss_benefit)),
            shortage_penalty: grid(pick(|p| &p.shortage_penalty)),
            fixed_ship_cost: grid(pick(|p| &p.fixed_ship_cost)),
            min_ship_qty: over.and_then(|o| o.min_ship_qty).or(self.parameters.min_ship_qty).unwrap_or(0.0),
            c_hold: per_site(Some(&self.kpi.c_hold)),
            wos_window: self.kpi.wos_window,
            frozen_weeks: self.frozen_weeks,
            sites,
            weeks,
        })
    }

    pub fn scenarios(&self) -> Result<Vec<Scenario>, ModelError> {
        self.item_ids().iter().map(|i| self.scenario(i)).collect()
    }
}

fn dense_grid(
    table: Option<&ParamTable>,
    sites: &[String],
    week_pos: &HashMap<u32, usize>,
    n_weeks: usize,
) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; n_weeks]; sites.len()];
    match table {
        None => {}
        Some(ParamTable::Uniform(x)) => {
            for row in &mut out {
                row.fill(*x);
            }
        }
        Some(ParamTable::PerSite(map)) => {
            for (i, site) in sites.iter().enumerate() {
                match map.get(site) {
                    None => {}
                    Some(SiteValues::Scalar(x)) => out[i].fill(*x),
                    Some(SiteValues::Series(xs)) => out[i].copy_from_slice(xs),
                    Some(SiteValues::ByWeek(m)) => {
                        for (wk, x) in m {
                            if let Some(&t) = wk.parse::<u32>().ok().and_then(|w| week_pos.get(&w)) {
                                out[i][t] = *x;
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> NetworkConfig {
        serde_json::from_str(
            r#"{
              "sites": ["A", {"id": "B", "region": "East"}],
              "items": ["X"],
              "horizon": [1, 2],
              "frozen_weeks": 0,
              "parameters": {
                "demand": {"A": [0, 10], "B": {"2": 3}},
                "initial_inventory": {"A": 0, "B": 12},
                "shortage_penalty": 10,
                "fixed_ship_cost": 1,
                "min_ship_qty": 5
              }
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn dense_scenario() {
        let cfg = small();
        assert!(validate_config(&cfg).pass);
        let s = cfg.scenario("X").unwrap();
        assert_eq!(s.demand, vec![vec![0.0, 10.0], vec![0.0, 3.0]]);
        assert_eq!(s.initial_inventory, vec![0.0, 12.0]);
        assert_eq!(s.shortage_penalty[1], vec![10.0, 10.0]);
        assert_eq!(s.receipts, vec![vec![0.0; 2]; 2]);
        assert_eq!(s.c_hold, vec![1.0, 1.0]);
        assert_eq!(s.wos_window, 4);
        assert_eq!(cfg.region_of("B"), "East");
        assert_eq!(cfg.region_of("A"), "A");
    }

    #[test]
    fn unknown_site_is_reported() {
        let mut cfg = small();
        if let Some(ParamTable::PerSite(m)) = &mut cfg.parameters.demand {
            m.insert("DC9".into(), SiteValues::Scalar(1.0));
        }
        let r = validate_config(&cfg);
        assert!(!r.pass);
        assert_eq!(r.violations[0].path, "parameters.demand.DC9");
        assert_eq!(r.violations[0].message, "unknown site DC9");
    }

    #[test]
    fn all_frozen_is_advisory() {
        let mut cfg = small();
        cfg.frozen_weeks = 2;
        let r = validate_config(&cfg);
        assert!(r.pass);
        assert_eq!(r.advisories, vec!["all weeks frozen; model reduces to simulation"]);
        cfg.frozen_weeks = 3;
        assert!(!validate_config(&cfg).pass);
    }

    #[test]
    fn negative_values() {
        let mut cfg = small();
        cfg.parameters.min_ship_qty = Some(-1.0);
        let r = validate_config(&cfg);
        assert_eq!(r.violations[0].path, "parameters.min_ship_qty");

        // Negative initial inventory is an inherited backlog, not an error.
        let mut cfg = small();
        cfg.parameters.initial_inventory = Some(ParamTable::Uniform(-4.0));
        assert!(validate_config(&cfg).pass);
    }

    #[test]
    fn wrong_series_length_and_unknown_week() {
        let mut cfg = small();
        cfg.parameters.receipts = Some(ParamTable::PerSite(BTreeMap::from([
            ("A".to_string(), SiteValues::Series(vec![1.0])),
            ("B".to_string(), SiteValues::ByWeek(BTreeMap::from([("7".to_string(), 1.0)]))),
        ])));
        let r = validate_config(&cfg);
        let paths: Vec<_> = r.violations.iter().map(|v| v.path.as_str()).collect();
        assert_eq!(paths, vec!["parameters.receipts.A", "parameters.receipts.B.7"]);
    }

    #[test]
    fn item_overrides() {
        let mut cfg = small();
        cfg.items.push(ItemDecl::Id("Y".into()));
        cfg.item_parameters.insert(
            "Y".into(),
            Parameters {
                min_ship_qty: Some(2.0),
                shortage_penalty: Some(ParamTable::Uniform(3.0)),
                ..Default::default()
            },
        );
        let y = cfg.scenario("Y").unwrap();
        assert_eq!(y.min_ship_qty, 2.0);
        assert_eq!(y.shortage_penalty[0][0], 3.0);
        assert_eq!(y.demand, cfg.scenario("X").unwrap().demand);
        assert!(matches!(cfg.scenario("Z"), Err(ModelError::UnknownItem(_))));
    }

    #[test]
    fn parse_error_is_a_violation() {
        let (cfg, r) = validate_json("{\"sites\": 3}");
        assert!(cfg.is_none());
        assert_eq!(r.violations[0].path, "$");
    }
}
