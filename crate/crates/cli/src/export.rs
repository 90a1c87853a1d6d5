//! Plot-ready exports.
//!
//! CSV files carry a header line and one row per node in storage order, with
//! floats at 17 significant digits, so `parse(export(field))` reproduces
//! every value bit for bit. JSON uses shortest round-trip formatting.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use asymgame::hji::{DualField, PdeGrids, Route, ValueField};
use serde::{Deserialize, Serialize};

use crate::run::RunError;

fn num(out: &mut String, v: f64) {
    write!(out, "{v:.16e}").expect("writing to a String");
}

fn header(out: &mut String, cols: &[String]) {
    out.push_str(&cols.join(","));
    out.push('\n');
}

fn names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|k| format!("{prefix}{k}")).collect()
}

fn row(out: &mut String, groups: &[&[f64]]) {
    let mut first = true;
    for g in groups {
        for &v in *g {
            if !first {
                out.push(',');
            }
            first = false;
            num(out, v);
        }
    }
    out.push('\n');
}

/// Rows `(t, x.., p.., q.., value)` in storage order.
pub fn value_csv(field: &ValueField<f64>, grids: &PdeGrids<f64>) -> String {
    let (nt, nx, np, nq) = field.shape();
    let d = grids.state.dim();
    let mut cols = vec!["t".to_string()];
    cols.extend(names("x", d));
    cols.extend(names("p", grids.p_grid.dim()));
    cols.extend(names("q", grids.q_grid.dim()));
    cols.push("value".into());
    let mut out = String::new();
    header(&mut out, &cols);
    let ps: Vec<Vec<f64>> = (0..np).map(|k| grids.p_grid.point(k)).collect();
    let qs: Vec<Vec<f64>> = (0..nq).map(|k| grids.q_grid.point(k)).collect();
    for k in 0..nt {
        let t = [grids.time.knots()[k]];
        for x in 0..nx {
            let xs = grids.state.point(x);
            for (p, pp) in ps.iter().enumerate() {
                for (q, qq) in qs.iter().enumerate() {
                    row(&mut out, &[&t, &xs, pp, qq, &[field.at(k, x, p, q)]]);
                }
            }
        }
    }
    out
}

/// Rows `(t, x.., p_hat.., q.., value)` for the V route and
/// `(t, x.., p.., q_hat.., value)` for the W route, in storage order.
pub fn dual_csv(field: &DualField<f64>, grids: &PdeGrids<f64>) -> String {
    let (nt, nx, nd, nb) = field.shape();
    let d = grids.state.dim();
    let (dual_box, belief_grid, dual_name, belief_name, dual_first) = match field.route {
        Route::V => (&grids.dual_p, &grids.q_grid, "phat", "q", true),
        Route::W => (&grids.dual_q, &grids.p_grid, "qhat", "p", false),
    };
    let mut cols = vec!["t".to_string()];
    cols.extend(names("x", d));
    let (dn, bn) = (names(dual_name, dual_box.dim()), names(belief_name, belief_grid.dim()));
    if dual_first {
        cols.extend(dn);
        cols.extend(bn);
    } else {
        cols.extend(bn);
        cols.extend(dn);
    }
    cols.push("value".into());
    let mut out = String::new();
    header(&mut out, &cols);
    let xs: Vec<Vec<f64>> = (0..nx).map(|x| grids.state.point(x)).collect();
    for dual in 0..nd {
        let y = dual_box.point(dual);
        for b in 0..nb {
            let bel = belief_grid.point::<f64>(b);
            for k in 0..nt {
                let t = [grids.time.knots()[k]];
                for (x, xv) in xs.iter().enumerate() {
                    let v = [field.at(k, x, dual, b)];
                    if dual_first {
                        row(&mut out, &[&t, xv, &y, &bel, &v]);
                    } else {
                        row(&mut out, &[&t, xv, &bel, &y, &v]);
                    }
                }
            }
        }
    }
    out
}

/// Header and numeric rows of a CSV export.
pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>), String> {
    let mut lines = text.lines();
    let head: Vec<String> = lines.next().ok_or("empty file")?.split(',').map(str::to_string).collect();
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate() {
        let r = line
            .split(',')
            .map(|s| s.parse::<f64>().map_err(|e| format!("row {}: {e}", n + 1)))
            .collect::<Result<Vec<_>, _>>()?;
        if r.len() != head.len() {
            return Err(format!("row {} has {} columns, header has {}", n + 1, r.len(), head.len()));
        }
        rows.push(r);
    }
    Ok((head, rows))
}

/// Rebuilds a value field from its CSV export.
pub fn parse_value_csv(text: &str, shape: (usize, usize, usize, usize)) -> Result<ValueField<f64>, String> {
    let (_, rows) = parse_csv(text)?;
    let values = rows.iter().map(|r| *r.last().expect("non-empty row")).collect();
    ValueField::new(shape.0, shape.1, shape.2, shape.3, values).map_err(|e| e.to_string())
}

/// JSON form of a field: shape, axes and values in storage order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldJson {
    pub kind: String,
    pub shape: [usize; 4],
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub first: Vec<Vec<f64>>,
    pub second: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

pub fn value_json(field: &ValueField<f64>, grids: &PdeGrids<f64>) -> FieldJson {
    let (nt, nx, np, nq) = field.shape();
    FieldJson {
        kind: "value".into(),
        shape: [nt, nx, np, nq],
        times: grids.time.knots().to_vec(),
        states: (0..nx).map(|x| grids.state.point(x)).collect(),
        first: (0..np).map(|k| grids.p_grid.point(k)).collect(),
        second: (0..nq).map(|k| grids.q_grid.point(k)).collect(),
        values: field.values().to_vec(),
    }
}

pub fn dual_json(field: &DualField<f64>, grids: &PdeGrids<f64>) -> FieldJson {
    let (nt, nx, nd, nb) = field.shape();
    let (dual_box, belief_grid, kind) = match field.route {
        Route::V => (&grids.dual_p, &grids.q_grid, "dual_v"),
        Route::W => (&grids.dual_q, &grids.p_grid, "dual_w"),
    };
    FieldJson {
        kind: kind.into(),
        shape: [nt, nx, nd, nb],
        times: grids.time.knots().to_vec(),
        states: (0..nx).map(|x| grids.state.point(x)).collect(),
        first: dual_box.points(),
        second: (0..nb).map(|k| belief_grid.point(k)).collect(),
        values: field.values().to_vec(),
    }
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> Result<(), RunError> {
    fs::create_dir_all(dir).map_err(|e| RunError::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), RunError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| RunError::Io(e.to_string()))?;
    text.push('\n');
    write_text(dir, name, &text)
}

/// Generic table with named columns, written as CSV.
pub fn table_csv(columns: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = String::new();
    header(&mut out, &columns.iter().map(|s| s.to_string()).collect::<Vec<_>>());
    for r in rows {
        row(&mut out, &[r]);
    }
    out
}
