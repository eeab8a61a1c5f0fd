use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::context::{Level, Metric, Role};
use super::data::{GroupSeries, GroupTransfer, ReportData};
use super::template::{hl, FIELD_NAMES};
use crate::sim::{InventoryPath, WOS_SENTINEL};

pub const SECTION_TITLES: [&str; 3] =
    ["Transfer Rationale", "Cost & Performance Analysis", "Weeks of Supply (WOS) Impact"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenerationMode {
    Deterministic,
    ExternalModel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportSection {
    pub title: String,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NarrativeReport {
    pub run_id: String,
    pub role: Role,
    pub mode: GenerationMode,
    pub sections: Vec<ReportSection>,
    pub warnings: Vec<String>,
}

/// Thousands-separated number with at most two decimals.
pub fn fmt_num(x: f64) -> String {
    let r = (x * 100.0).round() / 100.0;
    let r = if r == 0.0 { 0.0 } else { r };
    let neg = r < 0.0;
    let abs = r.abs();
    let whole = abs.trunc() as u64;
    let cents = ((abs - abs.trunc()) * 100.0).round() as u64;
    let digits = whole.to_string();
    let mut grouped = String::new();
    for (i, ch) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            grouped.push(',');
        }
        grouped.push(ch);
    }
    let mut s = if neg { format!("-{grouped}") } else { grouped };
    if cents > 0 {
        if cents.is_multiple_of(10) {
            let _ = write!(s, ".{}", cents / 10);
        } else {
            let _ = write!(s, ".{cents:02}");
        }
    }
    s
}

pub fn fmt_wos(x: f64) -> String {
    if x >= WOS_SENTINEL {
        "999".to_string()
    } else {
        format!("{x:.2}")
    }
}

fn table(out: &mut String, header: &[String], rows: &[Vec<String>]) {
    let _ = writeln!(out, "| {} |", header.join(" | "));
    let _ = writeln!(out, "|{}", "---|".repeat(header.len()));
    for r in rows {
        let _ = writeln!(out, "| {} |", r.join(" | "));
    }
}

fn join_names(names: &[String]) -> String {
    match names.len() {
        0 => String::new(),
        1 => names[0].clone(),
        n => format!("{} and {}", names[..n - 1].join(", "), names[n - 1]),
    }
}

fn series<'a>(data: &'a ReportData, group: &str) -> Option<&'a GroupSeries> {
    data.series.iter().find(|g| g.group == group)
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn lane_totals(transfers: &[GroupTransfer]) -> Vec<(String, String, Vec<u32>, f64)> {
    let mut out: Vec<(String, String, Vec<u32>, f64)> = Vec::new();
    for t in transfers {
        match out.iter_mut().find(|x| x.0 == t.src && x.1 == t.dst) {
            Some(x) => {
                if !x.2.contains(&t.week) {
                    x.2.push(t.week);
                }
                x.3 += t.qty;
            }
            None => out.push((t.src.clone(), t.dst.clone(), vec![t.week], t.qty)),
        }
    }
    out
}

fn week_span(weeks: &[u32]) -> String {
    match (weeks.iter().min(), weeks.iter().max()) {
        (Some(a), Some(b)) if a == b => a.to_string(),
        (Some(a), Some(b)) => format!("{a}-{b}"),
        _ => String::new(),
    }
}

fn rationale(data: &ReportData) -> String {
    let mut out = String::new();
    let mut dests: Vec<String> = Vec::new();
    let mut sources: Vec<String> = Vec::new();
    for t in &data.transfers {
        if !dests.contains(&t.dst) {
            dests.push(t.dst.clone());
        }
        if !sources.contains(&t.src) {
            sources.push(t.src.clone());
        }
    }
    let mut baseline_groups: Vec<String> = Vec::new();
    for e in data.stockouts.iter().filter(|e| e.path == InventoryPath::Baseline) {
        if !baseline_groups.contains(&e.group) {
            baseline_groups.push(e.group.clone());
        }
    }

    if data.transfers.is_empty() {
        out.push_str("No transfers are planned in the selected weeks.\n");
    }
    for g in &baseline_groups {
        let events: Vec<_> =
            data.stockouts.iter().filter(|e| &e.group == g && e.path == InventoryPath::Baseline).collect();
        let first = events.iter().map(|e| e.week).min().unwrap_or(0);
        let worst = events
            .iter()
            .fold(None::<(u32, f64)>, |acc, e| match acc {
                Some((_, m)) if m >= e.magnitude => acc,
                _ => Some((e.week, e.magnitude)),
            })
            .unwrap_or((first, 0.0));
        let _ = write!(
            out,
            "{} {g} projects a stockout from week {first}: {} falls to {} by week {}.",
            hl("Destination_Site"),
            hl("sim_Inv"),
            fmt_num(-worst.1),
            worst.0
        );
        if let Some(gs) = series(data, g) {
            let during: Vec<f64> =
                (0..gs.weeks.len()).filter(|&t| gs.weeks[t] >= first).map(|t| gs.demand[t]).collect();
            let before: Vec<f64> = (0..gs.weeks.len()).filter(|&t| gs.weeks[t] < first).map(|t| gs.demand[t]).collect();
            let (pk, pw) =
                (0..gs.weeks.len()).filter(|&t| gs.weeks[t] >= first).fold((f64::NEG_INFINITY, first), |acc, t| {
                    if gs.demand[t] > acc.0 {
                        (gs.demand[t], gs.weeks[t])
                    } else {
                        acc
                    }
                });
            let _ = write!(
                out,
                " {} ({}) averages {} per week from week {first}",
                hl("Demand"),
                hl("Forecast"),
                fmt_num(mean(&during))
            );
            if !before.is_empty() {
                let _ = write!(out, " against {} earlier", fmt_num(mean(&before)));
            }
            if pk.is_finite() {
                let _ = write!(out, ", peaking at {} in week {pw}", fmt_num(pk));
            }
            out.push('.');
        }
        let inbound: Vec<&GroupTransfer> = data.transfers.iter().filter(|t| &t.dst == g).collect();
        if inbound.is_empty() {
            out.push_str(" No transfers reach it in the selected weeks.\n");
            continue;
        }
        let lanes = lane_totals(&inbound.iter().map(|t| (*t).clone()).collect::<Vec<_>>());
        let parts: Vec<String> = lanes.iter().map(|l| format!("{} ({})", l.0, fmt_num(l.3))).collect();
        let total: f64 = lanes.iter().map(|l| l.3).sum();
        let _ = write!(
            out,
            " {} {} cover it with {} units in total.",
            hl("Source_Site"),
            join_names(&parts),
            fmt_num(total)
        );
        let planned = data.stockouts.iter().filter(|e| &e.group == g && e.path == InventoryPath::Planned).count();
        if planned == 0 {
            let _ = writeln!(out, " Planned {} at {g} stays non-negative.", hl("Inventory"));
        } else {
            let _ = writeln!(out, " Planned {} at {g} is still negative in {planned} week(s).", hl("Inventory"));
        }
    }
    for g in dests.iter().filter(|d| !baseline_groups.contains(d)) {
        let units: f64 = data.transfers.iter().filter(|t| &t.dst == g).map(|t| t.qty).sum();
        let _ = writeln!(
            out,
            "{} {g} receives {} units with no projected stockout; the transfers lift its {} toward safety level.",
            hl("Destination_Site"),
            fmt_num(units),
            hl("Inventory")
        );
    }
    if !sources.is_empty() {
        let mut parts = Vec::new();
        for s in &sources {
            let low = series(data, s)
                .map(|gs| gs.inventory.iter().copied().fold(f64::INFINITY, f64::min))
                .unwrap_or(f64::NAN);
            if low.is_finite() {
                parts.push(format!("{s} {}", fmt_num(low)));
            } else {
                parts.push(s.clone());
            }
        }
        let _ = writeln!(
            out,
            "Lowest planned {} at sources after {}: {}.",
            hl("Inventory"),
            hl("Transfer_Out"),
            join_names(&parts)
        );
    }

    if !data.transfers.is_empty() {
        out.push('\n');
        let header =
            |extra: &str| vec![hl("Source_Site"), hl("Destination_Site"), extra.to_string(), "Units".to_string()];
        match data.level {
            Level::Item => {
                let rows: Vec<Vec<String>> = data
                    .transfers
                    .iter()
                    .map(|t| vec![t.src.clone(), t.dst.clone(), t.week.to_string(), fmt_num(t.qty)])
                    .collect();
                table(&mut out, &header("Week"), &rows);
            }
            Level::Family | Level::Region => {
                let rows: Vec<Vec<String>> = lane_totals(&data.transfers)
                    .into_iter()
                    .map(|(s, d, w, q)| vec![s, d, week_span(&w), fmt_num(q)])
                    .collect();
                table(&mut out, &header("Weeks"), &rows);
            }
        }
    }

    let baseline: Vec<_> = data.stockouts.iter().filter(|e| e.path == InventoryPath::Baseline).collect();
    if !baseline.is_empty() {
        out.push('\n');
        match data.level {
            Level::Item => {
                let rows: Vec<Vec<String>> = baseline
                    .iter()
                    .map(|e| {
                        let planned = series(data, &e.group)
                            .and_then(|gs| gs.weeks.iter().position(|&w| w == e.week).map(|t| gs.inventory[t]))
                            .unwrap_or(0.0);
                        vec![e.group.clone(), e.week.to_string(), fmt_num(-e.magnitude), fmt_num(planned)]
                    })
                    .collect();
                table(&mut out, &["Site".to_string(), "Week".to_string(), hl("sim_Inv"), hl("Inventory")], &rows);
            }
            Level::Family | Level::Region => {
                let rows: Vec<Vec<String>> = baseline_groups
                    .iter()
                    .map(|g| {
                        let ev: Vec<_> = baseline.iter().filter(|e| &e.group == g).collect();
                        let weeks: Vec<u32> = ev.iter().map(|e| e.week).collect();
                        let low = ev.iter().map(|e| e.magnitude).fold(0.0, f64::max);
                        vec![g.clone(), week_span(&weeks), ev.len().to_string(), fmt_num(-low)]
                    })
                    .collect();
                table(
                    &mut out,
                    &[
                        "Group".to_string(),
                        "Weeks".to_string(),
                        "Stockout weeks".to_string(),
                        format!("Lowest {}", hl("sim_Inv")),
                    ],
                    &rows,
                );
            }
        }
    }
    out.trim_end().to_string()
}

fn costs(data: &ReportData) -> String {
    let mut out = String::new();
    let s = &data.savings;
    let _ = writeln!(
        out,
        "Total units transferred: {}. Total savings: {}.",
        fmt_num(s.total_units),
        fmt_num(s.total_savings)
    );
    let _ = writeln!(
        out,
        "Savings count only weeks with non-zero transfers and only sites where {} exceeds {}.",
        hl("sim_InvCost"),
        hl("InvCost")
    );
    let rows: Vec<Vec<String>> = s
        .weekly
        .iter()
        .filter(|w| w.units > 0.0 && w.sim_inv_cost > w.inv_cost)
        .map(|w| {
            vec![w.week.to_string(), fmt_num(w.units), fmt_num(w.sim_inv_cost), fmt_num(w.inv_cost), fmt_num(w.savings)]
        })
        .collect();
    if rows.is_empty() {
        out.push_str("\nNo week qualifies.\n");
    } else {
        out.push('\n');
        table(
            &mut out,
            &["Week".to_string(), "Units".to_string(), hl("sim_InvCost"), hl("InvCost"), "Savings".to_string()],
            &rows,
        );
    }
    out.trim_end().to_string()
}

fn role_of(gs: &GroupSeries) -> Option<&'static str> {
    let tin = gs.transfer_in.iter().any(|v| *v > 0.0);
    let tout = gs.transfer_out.iter().any(|v| *v > 0.0);
    match (tin, tout) {
        (true, true) => Some("source and destination"),
        (true, false) => Some("destination"),
        (false, true) => Some("source"),
        (false, false) => None,
    }
}

fn finite_mean(v: &[f64]) -> f64 {
    let kept: Vec<f64> = v.iter().copied().filter(|x| *x < WOS_SENTINEL).collect();
    if kept.is_empty() {
        WOS_SENTINEL
    } else {
        mean(&kept)
    }
}

fn wos(data: &ReportData) -> String {
    let mut out = String::new();
    let active: Vec<usize> = (0..data.weeks.len()).filter(|&t| data.transfer_weeks.contains(&data.weeks[t])).collect();
    let groups: Vec<(&GroupSeries, &str)> = data.series.iter().filter_map(|g| role_of(g).map(|r| (g, r))).collect();
    if groups.is_empty() || active.is_empty() {
        let _ = writeln!(out, "No transfers in the selected weeks; {} equals {} everywhere.", hl("WOS"), hl("Sim_WOS"));
        return out.trim_end().to_string();
    }
    let _ =
        writeln!(out, "{} before and {} after transfers, over the weeks that move stock.", hl("Sim_WOS"), hl("WOS"));
    for (g, r) in &groups {
        let sim = finite_mean(&active.iter().map(|&t| g.sim_wos[t]).collect::<Vec<_>>());
        let plan = finite_mean(&active.iter().map(|&t| g.wos[t]).collect::<Vec<_>>());
        let verb = if plan > sim + 1e-9 {
            "rises"
        } else if plan + 1e-9 < sim {
            "falls"
        } else {
            "holds"
        };
        let _ = writeln!(
            out,
            "- {} ({r}): average {} {verb} from {} to {}.",
            g.group,
            hl("WOS"),
            fmt_wos(sim),
            fmt_wos(plan)
        );
    }
    out.push('\n');
    match data.level {
        Level::Item => {
            let mut rows = Vec::new();
            for (g, r) in &groups {
                for &t in &active {
                    rows.push(vec![
                        g.group.clone(),
                        r.to_string(),
                        data.weeks[t].to_string(),
                        fmt_wos(g.sim_wos[t]),
                        fmt_wos(g.wos[t]),
                    ]);
                }
            }
            table(
                &mut out,
                &["Site".to_string(), "Role".to_string(), "Week".to_string(), hl("Sim_WOS"), hl("WOS")],
                &rows,
            );
        }
        Level::Family | Level::Region => {
            let rows: Vec<Vec<String>> = groups
                .iter()
                .map(|(g, r)| {
                    vec![
                        g.group.clone(),
                        r.to_string(),
                        fmt_wos(finite_mean(&active.iter().map(|&t| g.sim_wos[t]).collect::<Vec<_>>())),
                        fmt_wos(finite_mean(&active.iter().map(|&t| g.wos[t]).collect::<Vec<_>>())),
                    ]
                })
                .collect();
            table(&mut out, &["Group".to_string(), "Role".to_string(), hl("Sim_WOS"), hl("WOS")], &rows);
        }
    }
    out.trim_end().to_string()
}

/// Deterministic three-section report. A pure function of `data`.
pub fn render_report(data: &ReportData) -> NarrativeReport {
    let has = |m: Metric| data.metrics.contains(&m);
    let skipped = || "Not part of this request.".to_string();
    let bodies = [
        if has(Metric::Transfers) || has(Metric::Stockouts) { rationale(data) } else { skipped() },
        if has(Metric::Costs) { costs(data) } else { skipped() },
        if has(Metric::Wos) { wos(data) } else { skipped() },
    ];
    NarrativeReport {
        run_id: data.run_id.clone(),
        role: data.role,
        mode: GenerationMode::Deterministic,
        sections: SECTION_TITLES
            .iter()
            .zip(bodies)
            .map(|(t, b)| ReportSection { title: t.to_string(), body: b })
            .collect(),
        warnings: Vec::new(),
    }
}

impl NarrativeReport {
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# Transfer Plan Report\n\nRun: {}. Role: {}. Mode: {}.\n",
            self.run_id,
            self.role,
            match self.mode {
                GenerationMode::Deterministic => "deterministic",
                GenerationMode::ExternalModel => "external-model",
            }
        );
        for w in &self.warnings {
            let _ = writeln!(out, "Warning: {w}");
        }
        for (i, s) in self.sections.iter().enumerate() {
            let _ = write!(out, "\n## {}. {}\n\n{}\n", i + 1, s.title, s.body);
        }
        out
    }

    pub fn section(&self, title: &str) -> Option<&ReportSection> {
        self.sections.iter().find(|s| s.title == title)
    }

    /// Number of table data rows across all sections.
    pub fn data_rows(&self) -> usize {
        self.sections.iter().map(|s| table_rows(&s.body).len()).sum()
    }
}

/// Data rows of every markdown table in `body`, split into cells.
pub fn table_rows(body: &str) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    let mut header_seen = false;
    for line in body.lines() {
        let l = line.trim();
        if !l.starts_with('|') {
            header_seen = false;
            continue;
        }
        if !header_seen {
            header_seen = true;
            continue;
        }
        if l.trim_matches(|c| c == '|' || c == '-' || c == ':' || c == ' ').is_empty() {
            continue;
        }
        rows.push(l.trim_matches('|').split('|').map(|c| c.trim().to_string()).collect());
    }
    rows
}

/// Splits text on `## ` headings. Leading numbering such as `1. ` is dropped.
pub fn parse_sections(text: &str) -> Vec<ReportSection> {
    let mut out: Vec<ReportSection> = Vec::new();
    let mut body = String::new();
    for line in text.lines() {
        if let Some(h) = line.strip_prefix("## ") {
            if let Some(last) = out.last_mut() {
                last.body = body.trim().to_string();
            }
            body.clear();
            let title = h.trim().trim_start_matches(|c: char| c.is_ascii_digit()).trim_start_matches('.').trim();
            out.push(ReportSection { title: title.to_string(), body: String::new() });
        } else if !out.is_empty() {
            body.push_str(line);
            body.push('\n');
        }
    }
    if let Some(last) = out.last_mut() {
        last.body = body.trim().to_string();
    }
    out
}

/// Field names that appear without highlight markers, in order of appearance.
pub fn unmarked_fields(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let is_ident = |b: u8| b.is_ascii_alphanumeric() || b == b'_';
    let mut i = 0;
    while i < bytes.len() {
        if !is_ident(bytes[i]) {
            i += 1;
            continue;
        }
        let start = i;
        while i < bytes.len() && is_ident(bytes[i]) {
            i += 1;
        }
        let tok = &text[start..i];
        if FIELD_NAMES.contains(&tok) {
            let before = start >= 2 && &text[start - 2..start] == "**";
            let after = text[i..].starts_with("**");
            if !(before && after) {
                out.push(tok.to_string());
            }
        }
    }
    out
}

/// Checks section count, order, non-empty bodies and field highlighting.
pub fn validate_sections(sections: &[ReportSection]) -> Result<(), String> {
    if sections.len() != SECTION_TITLES.len() {
        return Err(format!("expected 3 sections, found {}", sections.len()));
    }
    for (s, want) in sections.iter().zip(SECTION_TITLES) {
        if !s.title.eq_ignore_ascii_case(want) {
            return Err(format!("expected section `{want}`, found `{}`", s.title));
        }
        if s.body.trim().is_empty() {
            return Err(format!("section `{want}` is empty"));
        }
        let bare = unmarked_fields(&s.body);
        if let Some(f) = bare.first() {
            return Err(format!("field {f} is not highlighted in `{want}`"));
        }
    }
    Ok(())
}
