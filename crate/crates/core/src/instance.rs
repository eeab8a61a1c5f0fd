//! Solver-neutral mixed-integer linear program.
//!
//! A [`MilpInstance`] knows nothing about inventories or sites: it is a list
//! of bounded columns, labelled linear rows and an objective. The model
//! builder produces one, the solver consumes one, and the plain-text form
//! lets third-party solvers cross-check results.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::InstanceError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Maximize,
    Minimize,
}

impl Sense {
    /// Multiplier turning this sense into minimization.
    pub(crate) fn min_sign(self) -> f64 {
        match self {
            Sense::Maximize => -1.0,
            Sense::Minimize => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "<=" => Some(Relation::Le),
            "=" => Some(Relation::Eq),
            ">=" => Some(Relation::Ge),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub integer: bool,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    /// Constraint tag plus indices, e.g. `balance:i=DC1,t=33`.
    pub label: String,
    pub coefs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Row {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.coefs.iter().map(|&(j, a)| a * values[j]).sum()
    }

    /// Amount by which `values` violate this row (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let lhs = self.activity(values);
        match self.relation {
            Relation::Le => (lhs - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - lhs).max(0.0),
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MilpInstance {
    pub sense: Sense,
    pub columns: Vec<Column>,
    pub rows: Vec<Row>,
}

impl MilpInstance {
    pub fn new(sense: Sense) -> Self {
        Self { sense, columns: Vec::new(), rows: Vec::new() }
    }

    pub fn num_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_column(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        integer: bool,
        objective: f64,
    ) -> usize {
        self.columns.push(Column { name: name.into(), lower, upper, integer, objective });
        self.columns.len() - 1
    }

    pub fn add_row(
        &mut self,
        label: impl Into<String>,
        coefs: Vec<(usize, f64)>,
        relation: Relation,
        rhs: f64,
    ) -> usize {
        self.rows.push(Row { label: label.into(), coefs, relation, rhs });
        self.rows.len() - 1
    }

    pub fn integer_columns(&self) -> impl Iterator<Item = usize> + '_ {
        self.columns.iter().enumerate().filter(|(_, c)| c.integer).map(|(j, _)| j)
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.columns.iter().zip(values).map(|(c, v)| c.objective * v).sum()
    }

    /// Largest row violation, with the offending row index.
    pub fn max_row_violation(&self, values: &[f64]) -> (f64, Option<usize>) {
        let mut worst = (0.0, None);
        for (r, row) in self.rows.iter().enumerate() {
            let v = row.violation(values);
            if v > worst.0 {
                worst = (v, Some(r));
            }
        }
        worst
    }

    /// Largest bound or integrality violation over all columns.
    pub fn max_column_violation(&self, values: &[f64]) -> f64 {
        self.columns
            .iter()
            .zip(values)
            .map(|(c, &v)| {
                let bound = (c.lower - v).max(v - c.upper).max(0.0);
                let frac = if c.integer { (v - v.round()).abs() } else { 0.0 };
                bound.max(frac)
            })
            .fold(0.0, f64::max)
    }

    /// Copy of this instance with every integrality flag cleared.
    pub fn relaxed(&self) -> Self {
        let mut out = self.clone();
        for c in &mut out.columns {
            c.integer = false;
        }
        out
    }

    /// Structural checks: valid column references, finite bounds and binary
    /// columns bounded within `[0, 1]`.
    pub fn check(&self) -> Result<(), InstanceError> {
        for (j, c) in self.columns.iter().enumerate() {
            if !c.lower.is_finite() || !c.upper.is_finite() {
                return Err(InstanceError::InfiniteBound { column: j, name: c.name.clone() });
            }
            if !c.objective.is_finite() {
                return Err(InstanceError::NonFinite(format!("objective of {}", c.name)));
            }
        }
        for row in &self.rows {
            if !row.rhs.is_finite() {
                return Err(InstanceError::NonFinite(format!("rhs of {}", row.label)));
            }
            for &(j, a) in &row.coefs {
                if j >= self.columns.len() {
                    return Err(InstanceError::UnknownColumn { row: row.label.clone(), column: j });
                }
                if !a.is_finite() {
                    return Err(InstanceError::NonFinite(format!("coefficient in {}", row.label)));
                }
            }
        }
        Ok(())
    }

    /// Plain-text dump: one column or constraint per line, floats written in
    /// shortest round-trip form so that [`MilpInstance::from_text`] is lossless.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let sense = match self.sense {
            Sense::Maximize => "max",
            Sense::Minimize => "min",
        };
        let _ = writeln!(out, "milp 1");
        let _ = writeln!(out, "sense {sense}");
        let _ = writeln!(out, "columns {}", self.columns.len());
        for (j, c) in self.columns.iter().enumerate() {
            let _ = writeln!(
                out,
                "c {j} {} {:?} {:?} {} {:?}",
                c.name,
                c.lower,
                c.upper,
                if c.integer { "I" } else { "C" },
                c.objective
            );
        }
        let _ = writeln!(out, "rows {}", self.rows.len());
        for row in &self.rows {
            let _ = write!(out, "r {} {} {:?} {}", row.label, row.relation.symbol(), row.rhs, row.coefs.len());
            for &(j, a) in &row.coefs {
                let _ = write!(out, " {j}:{a:?}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, InstanceError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
        let mut next = |what: &str| {
            lines.next().ok_or_else(|| InstanceError::Parse { line: 0, message: format!("missing {what}") })
        };

        let (ln, header) = next("header")?;
        if header.trim() != "milp 1" {
            return Err(parse_err(ln, "expected `milp 1` header"));
        }
        let (ln, sense_line) = next("sense")?;
        let sense = match sense_line.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["sense", "max"] => Sense::Maximize,
            ["sense", "min"] => Sense::Minimize,
            _ => return Err(parse_err(ln, "expected `sense max|min`")),
        };
        let (ln, cols_line) = next("columns")?;
        let ncols = count_line(ln, cols_line, "columns")?;
        let mut inst = MilpInstance::new(sense);
        for expected in 0..ncols {
            let (ln, line) = next("column")?;
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 7 || f[0] != "c" {
                return Err(parse_err(ln, "malformed column line"));
            }
            if f[1].parse::<usize>().ok() != Some(expected) {
                return Err(parse_err(ln, "column ids must be dense and ordered"));
            }
            let integer = match f[5] {
                "I" => true,
                "C" => false,
                _ => return Err(parse_err(ln, "column type must be I or C")),
            };
            inst.add_column(f[2], num(ln, f[3])?, num(ln, f[4])?, integer, num(ln, f[6])?);
        }
        let (ln, rows_line) = next("rows")?;
        let nrows = count_line(ln, rows_line, "rows")?;
        for _ in 0..nrows {
            let (ln, line) = next("row")?;
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() < 5 || f[0] != "r" {
                return Err(parse_err(ln, "malformed row line"));
            }
            let relation = Relation::parse(f[2]).ok_or_else(|| parse_err(ln, "bad relation"))?;
            let rhs = num(ln, f[3])?;
            let n: usize = f[4].parse().map_err(|_| parse_err(ln, "bad coefficient count"))?;
            if f.len() != 5 + n {
                return Err(parse_err(ln, "coefficient count mismatch"));
            }
            let mut coefs = Vec::with_capacity(n);
            for term in &f[5..] {
                let (j, a) = term.split_once(':').ok_or_else(|| parse_err(ln, "coefficient must be `col:value`"))?;
                let j: usize = j.parse().map_err(|_| parse_err(ln, "bad column id"))?;
                coefs.push((j, num(ln, a)?));
            }
            inst.add_row(f[1], coefs, relation, rhs);
        }
        inst.check()?;
        Ok(inst)
    }
}

fn parse_err(line: usize, message: &str) -> InstanceError {
    InstanceError::Parse { line: line + 1, message: message.to_string() }
}

fn num(line: usize, s: &str) -> Result<f64, InstanceError> {
    s.parse::<f64>().map_err(|_| parse_err(line, &format!("bad number `{s}`")))
}

fn count_line(line: usize, s: &str, key: &str) -> Result<usize, InstanceError> {
    match s.split_whitespace().collect::<Vec<_>>().as_slice() {
        [k, n] if *k == key => n.parse().map_err(|_| parse_err(line, "bad count")),
        _ => Err(parse_err(line, &format!("expected `{key} N`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> MilpInstance {
        let mut inst = MilpInstance::new(Sense::Maximize);
        let x = inst.add_column("x", 0.0, 2.0, false, 1.0);
        let y = inst.add_column("y", 0.0, 1.0, true, 0.1);
        inst.add_row("a:k=1", vec![(x, 1.0), (y, -1e-7)], Relation::Le, 1.5);
        inst.add_row("b:k=2", vec![(y, 3.0)], Relation::Eq, 0.3333333333333333);
        inst
    }

    #[test]
    fn text_round_trip_is_lossless() {
        let inst = small();
        let text = inst.to_text();
        let back = MilpInstance::from_text(&text).unwrap();
        assert_eq!(back, inst);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn rejects_unknown_column() {
        let mut inst = small();
        inst.add_row("bad", vec![(9, 1.0)], Relation::Le, 0.0);
        assert!(matches!(inst.check(), Err(InstanceError::UnknownColumn { .. })));
    }

    #[test]
    fn rejects_infinite_bounds() {
        let mut inst = small();
        inst.add_column("free", f64::NEG_INFINITY, 0.0, false, 0.0);
        assert!(matches!(inst.check(), Err(InstanceError::InfiniteBound { .. })));
    }

    #[test]
    fn violation_by_relation() {
        let inst = small();
        let v = [2.0, 0.0];
        assert!((inst.rows[0].violation(&v) - 0.5).abs() < 1e-12);
        assert!((inst.rows[1].violation(&v) - 0.3333333333333333).abs() < 1e-12);
    }
}
