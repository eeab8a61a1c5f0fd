use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::config::NetworkConfig;
use crate::model::{build_model, VarKind};

/// Field names that are always highlight-marked in report text.
pub const FIELD_NAMES: [&str; 12] = [
    "sim_InvCost",
    "sim_Inv",
    "Sim_WOS",
    "InvCost",
    "Inventory",
    "Transfer_In",
    "Transfer_Out",
    "WOS",
    "Demand",
    "Forecast",
    "Source_Site",
    "Destination_Site",
];

/// Wraps a field name in highlight markers.
pub fn hl(name: &str) -> String {
    format!("**{name}**")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormattingRule {
    /// Tables only list weeks that move stock.
    NonZeroTransferWeeks,
    /// Savings rows only where baseline cost exceeds planned cost.
    PositiveSavingsOnly,
    HighlightFieldNames,
}

pub const REQUIRED_RULES: [FormattingRule; 3] =
    [FormattingRule::NonZeroTransferWeeks, FormattingRule::PositiveSavingsOnly, FormattingRule::HighlightFieldNames];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CeTemplate {
    pub few_shot_examples: Vec<String>,
    pub model_summary: String,
    pub kpi_definitions: String,
    pub transfer_rationale: String,
    pub io_metadata: String,
    pub formatting_rules: Vec<FormattingRule>,
}

fn row_group(tag: &str) -> &'static str {
    match tag {
        "balance" | "open" => "inventory balance",
        "recv" => "receiver activation",
        "one_way" => "no transshipment",
        "net_split" => "net inventory split",
        "ss_split" => "safety stock split",
        "ship_flag" => "origin shipment flag",
        "lane_on" => "lane activation",
        "lane_min" => "minimum lane quantity",
        "lane_flag" => "lane to origin flag",
        _ => "other",
    }
}

fn plural(n: usize, word: &str) -> String {
    if n == 1 {
        format!("1 {word}")
    } else {
        format!("{n} {word}s")
    }
}

/// Static template for `cfg`. The model summary is derived from the
/// constraint rows of the first item's instance.
pub fn build_static_template(cfg: &NetworkConfig) -> CeTemplate {
    let sites = cfg.sites.len();
    let lanes = sites * sites.saturating_sub(1);
    let weeks = cfg.horizon.len();
    let mut summary = String::new();
    let _ = writeln!(
        summary,
        "Network of {} and {} over {} ({} frozen). {lanes} transfer lanes.",
        plural(sites, "site"),
        plural(cfg.items.len(), "item"),
        plural(weeks, "week"),
        cfg.frozen_weeks.min(weeks)
    );
    let first = cfg.items.first().map(|i| i.id().to_string());
    if let Some(Ok((inst, map))) = first.map(|i| cfg.scenario(&i).and_then(|s| build_model(&s))) {
        let mut groups: BTreeMap<&str, usize> = BTreeMap::new();
        for row in &inst.rows {
            let tag = row.label.split(':').next().unwrap_or("");
            *groups.entry(row_group(tag)).or_default() += 1;
        }
        let count = |k| map.entries().iter().filter(|e| e.kind == k).count();
        let _ = writeln!(
            summary,
            "Variables: {} lane quantities, {} lane flags, {} receiver flags, {} origin flags, {} inventory positions with their split into on-hand, backlog, safety and excess parts.",
            count(VarKind::X),
            count(VarKind::W),
            count(VarKind::Y),
            count(VarKind::Z),
            count(VarKind::I),
        );
        let rows: Vec<String> = groups.iter().map(|(g, n)| format!("{n} {g}")).collect();
        let _ = writeln!(summary, "Constraints: {}.", rows.join(", "));
    }
    summary.push_str(
        "Objective: reward stock held up to safety level, penalize backlog, charge a fixed cost per shipping origin and week.",
    );

    let window = cfg.kpi.wos_window;
    let kpi_definitions = format!(
        "{wos}: positive {inv} divided by the mean {dem} of the next {window} weeks, truncated at the horizon; 0 when {inv} is not positive, 999 when no {dem} follows.\n\
         {swos}: the same ratio on {sim}.\n\
         {ic}: holding rate times positive {inv} plus shortage penalty times backlog.\n\
         {sic}: the same cost on {sim}, the projection without transfers.\n\
         Savings: per week with transfers, the sum over sites of {sic} minus {ic} where positive.",
        wos = hl("WOS"),
        swos = hl("Sim_WOS"),
        inv = hl("Inventory"),
        dem = hl("Demand"),
        sim = hl("sim_Inv"),
        ic = hl("InvCost"),
        sic = hl("sim_InvCost"),
    );

    let transfer_rationale = format!(
        "Name every destination whose {sim} turns negative, the first week affected and the lowest value reached. \
         Tie the deficit to the {dem} (or {fc}) values of those weeks. \
         List the {src} entries that cover it with their units, and confirm each source keeps positive {inv} after {out}.",
        sim = hl("sim_Inv"),
        dem = hl("Demand"),
        fc = hl("Forecast"),
        src = hl("Source_Site"),
        inv = hl("Inventory"),
        out = hl("Transfer_Out"),
    );

    let io_metadata = format!(
        "Input per site and week: {dem}, receipts, {tin}, {tout}, {inv}, {sim}, {wos}, {swos}, {ic}, {sic}.\n\
         Transfers: {src}, {dst}, week, units.\n\
         Output: three sections in order: Transfer Rationale, Cost & Performance Analysis, Weeks of Supply (WOS) Impact.",
        dem = hl("Demand"),
        tin = hl("Transfer_In"),
        tout = hl("Transfer_Out"),
        inv = hl("Inventory"),
        sim = hl("sim_Inv"),
        wos = hl("WOS"),
        swos = hl("Sim_WOS"),
        ic = hl("InvCost"),
        sic = hl("sim_InvCost"),
        src = hl("Source_Site"),
        dst = hl("Destination_Site"),
    );

    let few_shot_examples = vec![
        format!(
            "Site B projects a stockout from week 12: {} falls to -40 while {} climbs to 60 per week. Site A sends 45 units in week 12 and keeps {} above zero.",
            hl("sim_Inv"),
            hl("Demand"),
            hl("Inventory"),
        ),
        format!(
            "Week 12 moves 45 units; {} 4,000 against {} 90 saves 3,910.",
            hl("sim_InvCost"),
            hl("InvCost"),
        ),
    ];

    CeTemplate {
        few_shot_examples,
        model_summary: summary,
        kpi_definitions,
        transfer_rationale,
        io_metadata,
        formatting_rules: REQUIRED_RULES.to_vec(),
    }
}

impl CeTemplate {
    /// Ingredient groups by name, in a fixed order.
    pub fn ingredients(&self) -> [(&'static str, bool); 5] {
        [
            (
                "few_shot_examples",
                !self.few_shot_examples.is_empty() && self.few_shot_examples.iter().all(|e| !e.trim().is_empty()),
            ),
            ("model_summary", !self.model_summary.trim().is_empty()),
            ("kpi_definitions", !self.kpi_definitions.trim().is_empty()),
            ("transfer_rationale", !self.transfer_rationale.trim().is_empty()),
            ("io_metadata", !self.io_metadata.trim().is_empty()),
        ]
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str("# Model\n");
        s.push_str(&self.model_summary);
        s.push_str("\n\n# KPI definitions\n");
        s.push_str(&self.kpi_definitions);
        s.push_str("\n\n# Transfer rationale\n");
        s.push_str(&self.transfer_rationale);
        s.push_str("\n\n# Input and output\n");
        s.push_str(&self.io_metadata);
        s.push_str("\n\n# Formatting\n");
        for r in &self.formatting_rules {
            let line = match r {
                FormattingRule::NonZeroTransferWeeks => "- Only weeks with non-zero transfers appear in tables.",
                FormattingRule::PositiveSavingsOnly => {
                    "- Savings are reported only where baseline cost exceeds planned cost."
                }
                FormattingRule::HighlightFieldNames => "- Data field names are wrapped in double asterisks.",
            };
            s.push_str(line);
            s.push('\n');
        }
        s.push_str("\n# Examples\n");
        for e in &self.few_shot_examples {
            s.push_str("- ");
            s.push_str(e);
            s.push('\n');
        }
        s
    }
}
