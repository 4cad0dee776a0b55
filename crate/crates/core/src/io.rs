//! Plain-text emitters. Numbers are written with 17 significant digits in
//! scientific notation, which is locale independent and round-trips `f64`.

use std::fmt::Write as _;

use serde::Serialize;

use crate::linalg::{CMat, Mat};
use crate::simulate::SimulationPath;

/// `x` with 17 significant digits; `-0` prints as `0`.
pub fn fmt_num(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.16e}")
}

/// Row-major nested vectors, the layout used in model files.
pub fn mat_rows(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// Real and imaginary parts of a complex matrix.
#[derive(Clone, Debug, Serialize)]
pub struct ComplexRows {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

pub fn cmat_rows(m: &CMat) -> ComplexRows {
    let part = |f: fn(&num_complex::Complex64) -> f64| (0..m.nrows()).map(|i| m.row(i).iter().map(f).collect()).collect();
    ComplexRows { re: part(|z| z.re), im: part(|z| z.im) }
}

fn entry_names(prefix: &str, d: usize) -> Vec<String> {
    (1..=d).flat_map(|i| (1..=d).map(move |j| format!("{prefix}{i}{j}"))).collect()
}

/// A table whose leading columns are `keys` and whose remaining columns are
/// `re_ij, im_ij` for every entry `(i, j)`, 1-based.
pub fn complex_table_csv(keys: &[&str], rows: &[(Vec<String>, CMat)]) -> String {
    let d = rows.first().map_or(0, |r| r.1.nrows());
    let mut header: Vec<String> = keys.iter().map(|k| k.to_string()).collect();
    for (re, im) in entry_names("re_", d).into_iter().zip(entry_names("im_", d)) {
        header.push(re);
        header.push(im);
    }
    let mut out = header.join(",") + "\n";
    for (key, m) in rows {
        let mut row = key.clone();
        for i in 0..d {
            for j in 0..d {
                row.push(fmt_num(m[(i, j)].re));
                row.push(fmt_num(m[(i, j)].im));
            }
        }
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

/// Columns `omega, re_ij, im_ij`.
pub fn spectrum_csv(omegas: &[f64], values: &[CMat]) -> String {
    let rows: Vec<_> = omegas.iter().zip(values).map(|(w, m)| (vec![fmt_num(*w)], m.clone())).collect();
    complex_table_csv(&["omega"], &rows)
}

/// Columns `<key>, <prefix>ij`, with the key column already formatted.
pub fn matrix_table_csv(key: &str, prefix: &str, keys: &[String], values: &[Mat]) -> String {
    let d = values.first().map_or(0, |m| m.nrows());
    let mut header = vec![key.to_string()];
    header.extend(entry_names(prefix, d));
    let mut out = header.join(",") + "\n";
    for (k, m) in keys.iter().zip(values) {
        let mut row = vec![k.clone()];
        for i in 0..d {
            for j in 0..d {
                row.push(fmt_num(m[(i, j)]));
            }
        }
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

/// Columns `t, gamma_ij`.
pub fn acov_csv(ts: &[f64], values: &[Mat]) -> String {
    let keys: Vec<String> = ts.iter().map(|&t| fmt_num(t)).collect();
    matrix_table_csv("t", "gamma_", &keys, values)
}

/// Columns `t, y_1..y_d` with `t = kΔ`.
pub fn path_csv(path: &SimulationPath) -> String {
    let d = path.obs.nrows();
    let mut header = vec!["t".to_string()];
    header.extend((1..=d).map(|i| format!("y_{i}")));
    let mut out = header.join(",") + "\n";
    for k in 0..path.obs.ncols() {
        let mut row = vec![fmt_num(path.delta * k as f64)];
        row.extend(path.obs.column(k).iter().map(|&x| fmt_num(x)));
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}
