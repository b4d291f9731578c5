//! Free-format MPS export and import.
//!
//! The writer emits `NAME`, `ROWS`, `COLUMNS`, `RHS`, `BOUNDS` and `ENDATA` sections with
//! whitespace-separated fields, which external solvers read as free MPS. The objective row is
//! named `COST`. Bounds use `LO`, `UP`, `FX`, `FR` and `MI`; `RANGES` and integer markers are
//! never written and are rejected on input.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::{LinearProgram, RowId, RowSense, VarId};

const OBJECTIVE_ROW: &str = "COST";

#[derive(Debug, Error, PartialEq)]
#[error("line {line}: {message}")]
pub struct MpsError {
    pub line: usize,
    pub message: String,
}

fn format_number(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_whitespace() { '_' } else { c })
        .collect()
}

/// Unique, whitespace-free labels; falls back to positional names on any collision.
fn labels(names: impl Iterator<Item = String>, prefix: char, reserved: &str) -> Vec<String> {
    let names: Vec<String> = names.map(|n| sanitize(&n)).collect();
    let mut seen = std::collections::HashSet::new();
    let unique = names
        .iter()
        .all(|n| n != reserved && seen.insert(n.as_str()));
    if unique {
        names
    } else {
        (0..names.len()).map(|i| format!("{prefix}{i}")).collect()
    }
}

pub fn write_mps(lp: &LinearProgram, name: &str) -> String {
    let n = lp.num_vars();
    let m = lp.num_rows();
    let var_labels = labels((0..n).map(|j| lp.var_name(VarId(j))), 'x', OBJECTIVE_ROW);
    let row_labels = labels((0..m).map(|i| lp.row_name(RowId(i))), 'r', OBJECTIVE_ROW);

    let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (i, row) in lp.rows().iter().enumerate() {
        for &(v, a) in &row.coeffs {
            by_col[v.0].push((i, a));
        }
    }

    let mut out = String::new();
    let _ = writeln!(out, "NAME {}", sanitize(name));
    out.push_str("ROWS\n");
    let _ = writeln!(out, " N {OBJECTIVE_ROW}");
    for (i, row) in lp.rows().iter().enumerate() {
        let tag = match row.sense {
            RowSense::Le => 'L',
            RowSense::Eq => 'E',
            RowSense::Ge => 'G',
        };
        let _ = writeln!(out, " {tag} {}", row_labels[i]);
    }
    out.push_str("COLUMNS\n");
    for j in 0..n {
        let c = lp.objective[j];
        if c != 0.0 || by_col[j].is_empty() {
            let _ = writeln!(
                out,
                " {} {OBJECTIVE_ROW} {}",
                var_labels[j],
                format_number(c)
            );
        }
        for &(i, a) in &by_col[j] {
            let _ = writeln!(
                out,
                " {} {} {}",
                var_labels[j],
                row_labels[i],
                format_number(a)
            );
        }
    }
    out.push_str("RHS\n");
    for (i, row) in lp.rows().iter().enumerate() {
        if row.rhs != 0.0 {
            let _ = writeln!(out, " RHS {} {}", row_labels[i], format_number(row.rhs));
        }
    }
    out.push_str("BOUNDS\n");
    for j in 0..n {
        let (lo, hi) = (lp.lower[j], lp.upper[j]);
        let v = &var_labels[j];
        if lo == hi {
            let _ = writeln!(out, " FX BND {v} {}", format_number(lo));
            continue;
        }
        match (lo.is_finite(), hi.is_finite()) {
            (false, false) => {
                let _ = writeln!(out, " FR BND {v}");
            }
            (false, true) => {
                let _ = writeln!(out, " MI BND {v}");
                let _ = writeln!(out, " UP BND {v} {}", format_number(hi));
            }
            (true, _) => {
                if lo != 0.0 {
                    let _ = writeln!(out, " LO BND {v} {}", format_number(lo));
                }
                if hi.is_finite() {
                    let _ = writeln!(out, " UP BND {v} {}", format_number(hi));
                }
            }
        }
    }
    out.push_str("ENDATA\n");
    out
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Start,
    Rows,
    Columns,
    Rhs,
    Bounds,
    End,
}

/// Reads a free-format MPS document into a minimization [`LinearProgram`].
pub fn read_mps(text: &str) -> Result<LinearProgram, MpsError> {
    let mut lp = LinearProgram::new();
    let mut section = Section::Start;
    let mut objective_name: Option<String> = None;
    let mut rows: HashMap<String, usize> = HashMap::new();
    let mut cols: HashMap<String, usize> = HashMap::new();
    let mut senses: Vec<RowSense> = Vec::new();
    let mut row_names: Vec<String> = Vec::new();

    let err = |line: usize, message: String| MpsError { line, message };
    let number = |line: usize, s: &str| -> Result<f64, MpsError> {
        s.parse::<f64>()
            .map_err(|_| err(line, format!("expected a number, found `{s}`")))
    };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if !raw.starts_with(char::is_whitespace) {
            section = match fields[0] {
                "NAME" => Section::Start,
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => Section::End,
                other => return Err(err(line_no, format!("unsupported section `{other}`"))),
            };
            if section == Section::Columns {
                for (name, sense) in row_names.iter().zip(&senses) {
                    lp.add_named_row(name.clone(), Vec::new(), *sense, 0.0);
                }
            }
            continue;
        }
        match section {
            Section::Rows => {
                let [kind, name] = fields[..] else {
                    return Err(err(line_no, "row line needs a type and a name".into()));
                };
                let sense = match kind {
                    "N" => {
                        if objective_name.is_none() {
                            objective_name = Some(name.to_string());
                        }
                        continue;
                    }
                    "L" => RowSense::Le,
                    "E" => RowSense::Eq,
                    "G" => RowSense::Ge,
                    other => return Err(err(line_no, format!("unknown row type `{other}`"))),
                };
                rows.insert(name.to_string(), senses.len());
                senses.push(sense);
                row_names.push(name.to_string());
            }
            Section::Columns => {
                if fields.contains(&"'MARKER'") {
                    return Err(err(line_no, "integer markers are not supported".into()));
                }
                if fields.len() != 3 && fields.len() != 5 {
                    return Err(err(line_no, "column line needs 3 or 5 fields".into()));
                }
                let col = match cols.get(fields[0]) {
                    Some(&c) => c,
                    None => {
                        let v = lp.add_named_var(fields[0], 0.0, 0.0, f64::INFINITY);
                        cols.insert(fields[0].to_string(), v.0);
                        v.0
                    }
                };
                for pair in fields[1..].chunks(2) {
                    let value = number(line_no, pair[1])?;
                    if Some(pair[0]) == objective_name.as_deref() {
                        lp.objective[col] = value;
                    } else if let Some(&r) = rows.get(pair[0]) {
                        lp.rows[r].coeffs.push((VarId(col), value));
                    } else {
                        return Err(err(line_no, format!("unknown row `{}`", pair[0])));
                    }
                }
            }
            Section::Rhs => {
                if fields.len() != 3 && fields.len() != 5 {
                    return Err(err(line_no, "rhs line needs 3 or 5 fields".into()));
                }
                for pair in fields[1..].chunks(2) {
                    let value = number(line_no, pair[1])?;
                    if Some(pair[0]) == objective_name.as_deref() {
                        continue;
                    }
                    let &r = rows
                        .get(pair[0])
                        .ok_or_else(|| err(line_no, format!("unknown row `{}`", pair[0])))?;
                    lp.rows[r].rhs = value;
                }
            }
            Section::Bounds => {
                if fields.len() < 3 {
                    return Err(err(
                        line_no,
                        "bound line needs a type, set and column".into(),
                    ));
                }
                let &col = cols
                    .get(fields[2])
                    .ok_or_else(|| err(line_no, format!("unknown column `{}`", fields[2])))?;
                let value = || -> Result<f64, MpsError> {
                    let s = fields
                        .get(3)
                        .ok_or_else(|| err(line_no, "bound value missing".into()))?;
                    number(line_no, s)
                };
                match fields[0] {
                    "LO" => lp.lower[col] = value()?,
                    "UP" => lp.upper[col] = value()?,
                    "FX" => {
                        let v = value()?;
                        lp.lower[col] = v;
                        lp.upper[col] = v;
                    }
                    "FR" => {
                        lp.lower[col] = f64::NEG_INFINITY;
                        lp.upper[col] = f64::INFINITY;
                    }
                    "MI" => lp.lower[col] = f64::NEG_INFINITY,
                    "PL" => lp.upper[col] = f64::INFINITY,
                    other => return Err(err(line_no, format!("unsupported bound type `{other}`"))),
                }
            }
            Section::Start | Section::End => {
                return Err(err(line_no, "data outside of a section".into()));
            }
        }
    }
    if section != Section::End {
        return Err(err(text.lines().count(), "missing ENDATA".into()));
    }
    Ok(lp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{solve, SolverOptions};

    #[test]
    fn round_trip_preserves_the_model() {
        let mut lp = LinearProgram::new();
        let a = lp.add_named_var("a", 1.5, 0.0, 4.0);
        let b = lp.add_named_var("b", -2.0, -1.0, f64::INFINITY);
        let c = lp.add_named_var("c", 0.0, f64::NEG_INFINITY, f64::INFINITY);
        let d = lp.add_named_var("d", 3e-7, 2.0, 2.0);
        lp.add_named_row("r one", vec![(a, 1.0), (b, 2.0)], RowSense::Le, 8.0);
        lp.add_named_row("r2", vec![(b, 1.0), (c, -1.0), (d, 1.0)], RowSense::Eq, 0.0);
        lp.add_named_row("r3", vec![(a, 1.0), (c, 1.0)], RowSense::Ge, -2.5);

        let text = write_mps(&lp, "demo");
        let back = read_mps(&text).unwrap();
        assert_eq!(back.num_vars(), 4);
        assert_eq!(back.num_rows(), 3);
        assert_eq!(back.objective(), lp.objective());
        for j in 0..4 {
            assert_eq!(back.bounds(VarId(j)), lp.bounds(VarId(j)));
        }
        for (r1, r2) in back.rows().iter().zip(lp.rows()) {
            assert_eq!(r1, r2);
        }
        assert_eq!(back.row_name(RowId(0)), "r_one");

        let opts = SolverOptions::default();
        let s1 = solve(&lp, &opts).unwrap();
        let s2 = solve(&back, &opts).unwrap();
        assert_eq!(s1.status, s2.status);
        assert!((s1.objective_value - s2.objective_value).abs() < 1e-12);
    }

    #[test]
    fn rejects_unknown_rows() {
        let text = "NAME x\nROWS\n N COST\n L r\nCOLUMNS\n x q 1\nRHS\nBOUNDS\nENDATA\n";
        let e = read_mps(text).unwrap_err();
        assert_eq!(e.line, 6);
    }
}
