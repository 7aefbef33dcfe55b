//! Fixed-format MPS reader and conversion to standard form.
//!
//! Fields are split on whitespace, so names must not contain blanks.
//! Supported: N/L/G/E rows, RHS, RANGES, bound types UP, LO, FX, FR.

use std::collections::HashMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lp::StandardLP;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RowKind {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
struct Row {
    name: String,
    kind: RowKind,
    rhs: f64,
    range: Option<f64>,
}

#[derive(Debug, Clone)]
struct Column {
    name: String,
    cost: f64,
    entries: Vec<(usize, f64)>,
    lower: f64,
    upper: f64,
}

/// The model as written in the file, before standardization.
#[derive(Debug, Clone)]
pub struct MpsModel {
    pub name: String,
    rows: Vec<Row>,
    columns: Vec<Column>,
    objective_constant: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    Rows,
    Columns,
    Rhs,
    Ranges,
    Bounds,
    End,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn number(tok: &str, line: usize) -> Result<f64> {
    tok.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| parse_err(line, format!("bad number `{tok}`")))
}

enum RowRef {
    Objective,
    Ignored,
    Constraint(usize),
}

pub fn parse_mps(text: &str) -> Result<MpsModel> {
    let mut section = Section::None;
    let mut name = String::new();
    let mut objective: Option<String> = None;
    let mut row_lookup: HashMap<String, RowRef> = HashMap::new();
    let mut rows: Vec<Row> = Vec::new();
    let mut columns: Vec<Column> = Vec::new();
    let mut col_lookup: HashMap<String, usize> = HashMap::new();
    let mut objective_constant = 0.0;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let toks: Vec<&str> = raw.split_whitespace().collect();
        if !raw.starts_with(' ') && !raw.starts_with('\t') {
            section = match toks[0] {
                "NAME" => {
                    name = toks.get(1).map(|s| s.to_string()).unwrap_or_default();
                    Section::None
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "RANGES" => Section::Ranges,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => Section::End,
                other => return Err(parse_err(line, format!("unknown section `{other}`"))),
            };
            if section == Section::End {
                break;
            }
            continue;
        }

        match section {
            Section::None | Section::End => {
                return Err(parse_err(line, "data line outside of a section"));
            }
            Section::Rows => {
                if toks.len() != 2 {
                    return Err(parse_err(line, "ROWS entry needs a type and a name"));
                }
                let row_name = toks[1].to_string();
                if row_lookup.contains_key(&row_name) {
                    return Err(parse_err(line, format!("duplicate row `{row_name}`")));
                }
                let kind = match toks[0] {
                    "N" => {
                        if objective.is_none() {
                            objective = Some(row_name.clone());
                            row_lookup.insert(row_name, RowRef::Objective);
                        } else {
                            row_lookup.insert(row_name, RowRef::Ignored);
                        }
                        continue;
                    }
                    "L" => RowKind::Le,
                    "G" => RowKind::Ge,
                    "E" => RowKind::Eq,
                    other => return Err(parse_err(line, format!("unknown row type `{other}`"))),
                };
                row_lookup.insert(row_name.clone(), RowRef::Constraint(rows.len()));
                rows.push(Row {
                    name: row_name,
                    kind,
                    rhs: 0.0,
                    range: None,
                });
            }
            Section::Columns => {
                if toks.contains(&"'MARKER'") {
                    continue;
                }
                if toks.len() != 3 && toks.len() != 5 {
                    return Err(parse_err(line, "COLUMNS entry needs 3 or 5 fields"));
                }
                let col_name = toks[0];
                let j = match col_lookup.get(col_name) {
                    Some(&j) => j,
                    None => {
                        col_lookup.insert(col_name.to_string(), columns.len());
                        columns.push(Column {
                            name: col_name.to_string(),
                            cost: 0.0,
                            entries: Vec::new(),
                            lower: 0.0,
                            upper: f64::INFINITY,
                        });
                        columns.len() - 1
                    }
                };
                for pair in toks[1..].chunks(2) {
                    let v = number(pair[1], line)?;
                    match row_lookup.get(pair[0]) {
                        Some(RowRef::Objective) => columns[j].cost += v,
                        Some(RowRef::Ignored) => {}
                        Some(RowRef::Constraint(i)) => {
                            if v != 0.0 {
                                columns[j].entries.push((*i, v));
                            }
                        }
                        None => return Err(parse_err(line, format!("unknown row `{}`", pair[0]))),
                    }
                }
            }
            Section::Rhs | Section::Ranges => {
                // odd field count means a leading set name
                let fields = if toks.len() % 2 == 1 { &toks[1..] } else { &toks[..] };
                if fields.is_empty() || fields.len() > 4 {
                    return Err(parse_err(line, "RHS/RANGES entry needs 1 or 2 (row, value) pairs"));
                }
                for pair in fields.chunks(2) {
                    let v = number(pair[1], line)?;
                    match row_lookup.get(pair[0]) {
                        Some(RowRef::Objective) => {
                            if section == Section::Rhs {
                                objective_constant = -v;
                            }
                        }
                        Some(RowRef::Ignored) => {}
                        Some(RowRef::Constraint(i)) => {
                            if section == Section::Rhs {
                                rows[*i].rhs = v;
                            } else {
                                rows[*i].range = Some(v);
                            }
                        }
                        None => return Err(parse_err(line, format!("unknown row `{}`", pair[0]))),
                    }
                }
            }
            Section::Bounds => {
                let kind = toks[0];
                let needs_value = matches!(kind, "UP" | "LO" | "FX");
                if !needs_value && kind != "FR" {
                    return Err(Error::UnsupportedBound {
                        line,
                        kind: kind.to_string(),
                    });
                }
                let expected = if needs_value { [3, 4] } else { [2, 3] };
                if !expected.contains(&toks.len()) {
                    return Err(parse_err(line, format!("malformed {kind} bound")));
                }
                let with_set = toks.len() == expected[1];
                let col_tok = if with_set { toks[2] } else { toks[1] };
                let j = *col_lookup
                    .get(col_tok)
                    .ok_or_else(|| parse_err(line, format!("unknown column `{col_tok}`")))?;
                let col = &mut columns[j];
                match kind {
                    "UP" => {
                        let v = number(toks[toks.len() - 1], line)?;
                        if v < 0.0 && col.lower == 0.0 {
                            return Err(Error::UnsupportedBound {
                                line,
                                kind: "UP with negative value".into(),
                            });
                        }
                        col.upper = v;
                    }
                    "LO" => col.lower = number(toks[toks.len() - 1], line)?,
                    "FX" => {
                        let v = number(toks[toks.len() - 1], line)?;
                        col.lower = v;
                        col.upper = v;
                    }
                    _ => {
                        col.lower = f64::NEG_INFINITY;
                        col.upper = f64::INFINITY;
                    }
                }
            }
        }
    }

    if objective.is_none() {
        return Err(parse_err(0, "no objective (N) row"));
    }
    for col in &columns {
        if col.lower.is_finite() && col.upper < col.lower {
            return Err(Error::Status(format!("infeasible: bounds of column `{}` cross", col.name)));
        }
        if col.lower == f64::NEG_INFINITY && col.upper.is_finite() {
            return Err(Error::UnsupportedBound {
                line: 0,
                kind: format!("upper bound on free column `{}`", col.name),
            });
        }
    }
    Ok(MpsModel {
        name,
        rows,
        columns,
        objective_constant,
    })
}

impl MpsModel {
    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_columns(&self) -> usize {
        self.columns.len()
    }

    /// Fixes a column at `value`, folding it into the right-hand sides.
    fn fix_column(&mut self, j: usize, value: f64) {
        let col = self.columns.remove(j);
        for &(i, a) in &col.entries {
            self.rows[i].rhs -= a * value;
        }
        self.objective_constant += col.cost * value;
    }

    fn remove_row(&mut self, i: usize) {
        self.rows.remove(i);
        for col in &mut self.columns {
            col.entries.retain(|&(r, _)| r != i);
            for e in &mut col.entries {
                if e.0 > i {
                    e.0 -= 1;
                }
            }
        }
    }

    /// Drops empty rows, fixed columns and singleton equality rows until none remain.
    fn reduce(&mut self) -> Result<()> {
        let tol = 1e-9;
        loop {
            if let Some(j) = self
                .columns
                .iter()
                .position(|c| c.lower.is_finite() && c.lower == c.upper)
            {
                let v = self.columns[j].lower;
                self.fix_column(j, v);
                continue;
            }

            let mut counts = vec![0usize; self.rows.len()];
            for col in &self.columns {
                for &(i, _) in &col.entries {
                    counts[i] += 1;
                }
            }

            if let Some(i) = counts.iter().position(|&c| c == 0) {
                let row = &self.rows[i];
                let (lo, hi) = row_interval(row);
                if lo > tol || hi < -tol {
                    return Err(Error::Infeasible { row: row.name.clone() });
                }
                self.remove_row(i);
                continue;
            }

            let singleton = (0..self.rows.len())
                .find(|&i| counts[i] == 1 && self.rows[i].kind == RowKind::Eq && self.rows[i].range.is_none());
            if let Some(i) = singleton {
                let (j, a) = self
                    .columns
                    .iter()
                    .enumerate()
                    .find_map(|(j, c)| c.entries.iter().find(|e| e.0 == i).map(|e| (j, e.1)))
                    .expect("counted entry");
                let value = self.rows[i].rhs / a;
                let col = &self.columns[j];
                let slack = tol * (1.0 + value.abs());
                if value < col.lower - slack || value > col.upper + slack {
                    return Err(Error::Infeasible {
                        row: self.rows[i].name.clone(),
                    });
                }
                self.fix_column(j, value);
                self.remove_row(i);
                continue;
            }
            return Ok(());
        }
    }

    /// Converts to `min cᵀx, Ax = b, x ≥ 0`.
    ///
    /// Column order: structural columns (shifted to a zero lower bound), the
    /// negative parts of free columns, row slacks, then upper-bound slacks.
    /// Row order: constraint rows, range rows, then upper-bound rows.
    pub fn to_standard(&self) -> Result<StandardLP> {
        let mut model = self.clone();
        model.reduce()?;
        let rows = &model.rows;
        let cols = &model.columns;

        let mut b: Vec<f64> = Vec::new();
        let mut row_names: Vec<String> = Vec::new();
        for row in rows {
            let (lo, hi) = row_interval(row);
            let base = match (row.kind, row.range) {
                (_, Some(_)) | (RowKind::Ge, None) => lo,
                (RowKind::Le, None) => hi,
                (RowKind::Eq, None) => row.rhs,
            };
            b.push(base);
            row_names.push(row.name.clone());
        }
        let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
        let mut c: Vec<f64> = Vec::new();
        let mut col_names: Vec<String> = Vec::new();
        let mut offset = model.objective_constant;

        for (j, col) in cols.iter().enumerate() {
            let shift = if col.lower.is_finite() { col.lower } else { 0.0 };
            for &(i, a) in &col.entries {
                triplets.push((i, j, a));
                b[i] -= a * shift;
            }
            offset += col.cost * shift;
            c.push(col.cost);
            col_names.push(col.name.clone());
        }
        for col in cols.iter().filter(|c| c.lower == f64::NEG_INFINITY) {
            let j = c.len();
            for &(i, a) in &col.entries {
                triplets.push((i, j, -a));
            }
            c.push(-col.cost);
            col_names.push(format!("{}-", col.name));
        }
        for (i, row) in rows.iter().enumerate() {
            let sign = match row.kind {
                RowKind::Le if row.range.is_none() => 1.0,
                RowKind::Eq if row.range.is_none() => continue,
                // ranged rows are written as a·x − w = lo with 0 ≤ w ≤ hi − lo
                _ => -1.0,
            };
            let j = c.len();
            triplets.push((i, j, sign));
            c.push(0.0);
            col_names.push(format!("slack_{}", row.name));
            if row.range.is_some() {
                let (lo, hi) = row_interval(row);
                let r = b.len();
                triplets.push((r, j, 1.0));
                triplets.push((r, j + 1, 1.0));
                b.push(hi - lo);
                row_names.push(format!("range_{}", row.name));
                c.push(0.0);
                col_names.push(format!("range_slack_{}", row.name));
            }
        }
        for (j, col) in cols.iter().enumerate() {
            if col.lower.is_finite() && col.upper.is_finite() {
                let r = b.len();
                let k = c.len();
                triplets.push((r, j, 1.0));
                triplets.push((r, k, 1.0));
                b.push(col.upper - col.lower);
                row_names.push(format!("ub_{}", col.name));
                c.push(0.0);
                col_names.push(format!("ub_slack_{}", col.name));
            }
        }

        let (m, n) = (b.len(), c.len());
        let mut a = DMatrix::zeros(m, n);
        for (i, j, v) in triplets {
            a[(i, j)] += v;
        }
        let mut lp = StandardLP::new(a, DVector::from_vec(b), DVector::from_vec(c))?;
        lp.row_names = Some(row_names);
        lp.col_names = Some(col_names);
        lp.objective_offset = offset;
        Ok(lp)
    }
}

/// Feasible interval of a·x for a row, ranges included.
fn row_interval(row: &Row) -> (f64, f64) {
    let b = row.rhs;
    match (row.kind, row.range) {
        (RowKind::Le, None) => (f64::NEG_INFINITY, b),
        (RowKind::Ge, None) => (b, f64::INFINITY),
        (RowKind::Eq, None) => (b, b),
        (RowKind::Le, Some(r)) => (b - r.abs(), b),
        (RowKind::Ge, Some(r)) => (b, b + r.abs()),
        (RowKind::Eq, Some(r)) if r >= 0.0 => (b, b + r),
        (RowKind::Eq, Some(r)) => (b + r, b),
    }
}

pub fn load_mps(path: impl AsRef<Path>) -> Result<StandardLP> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_mps(&text)?.to_standard()
}
