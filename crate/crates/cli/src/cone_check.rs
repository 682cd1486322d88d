//! Input: one row per line, comma-separated numbers; `#` lines and blank
//! lines are skipped. Rows are numbered by file line.

use mhess::symfun::{largest_cone_degree, sym_prefix, SymMatrix, MAX_DIM};
use mhess::woperator::w_spectrum_fast;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::output::num;
use crate::{CliError, Output, RunConfig, EXIT_OK};

const KEYS: &[&str] = &["input", "kind", "m", "seed"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    /// `n * n` row-major entries of a symmetric matrix.
    Hessian,
    /// `n` eigenvalues.
    Spectrum,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowReport {
    pub row: u64,
    pub n: usize,
    /// Spectrum of the `m`-sum lift, descending.
    pub lifted: Vec<f64>,
    /// `S_1 .. S_N` of the lifted spectrum.
    pub s: Vec<f64>,
    /// `min_{i <= k} S_i` for `k = 1 .. N`.
    pub margins: Vec<f64>,
    pub admissible: Vec<bool>,
    pub largest_admissible_k: usize,
}

fn classify(row: u64, values: &[f64], kind: Kind, m: usize) -> Result<RowReport, CliError> {
    let bad = |msg: String| CliError::Config(format!("row {row}: {msg}"));
    let (h, n) = match kind {
        Kind::Hessian => {
            let n = (values.len() as f64).sqrt().round() as usize;
            if n * n != values.len() || n == 0 {
                return Err(bad(format!("{} entries is not a square matrix", values.len())));
            }
            for i in 0..n {
                for j in 0..i {
                    let (a, b) = (values[i * n + j], values[j * n + i]);
                    if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                        return Err(bad(format!("matrix is not symmetric at ({}, {})", i + 1, j + 1)));
                    }
                }
            }
            (SymMatrix::from_row_major(n, values).map_err(|e| bad(e.to_string()))?, n)
        }
        Kind::Spectrum => (SymMatrix::diagonal(values), values.len()),
    };
    if n > MAX_DIM {
        return Err(bad(format!("n = {n} exceeds the supported maximum {MAX_DIM}")));
    }
    if m < 1 || m > n {
        return Err(bad(format!("m = {m} needs 1 <= m <= n = {n}")));
    }
    let mut lifted = w_spectrum_fast(&h, m).map_err(|e| bad(e.to_string()))?.into_vec();
    lifted.sort_by(|a, b| b.total_cmp(a));
    let s = sym_prefix(&lifted, lifted.len())[1..].to_vec();
    let mut margins = Vec::with_capacity(s.len());
    let mut run = f64::INFINITY;
    for v in &s {
        run = run.min(*v);
        margins.push(run);
    }
    Ok(RowReport {
        row,
        n,
        admissible: margins.iter().map(|v| *v > 0.0).collect(),
        largest_admissible_k: largest_cone_degree(&lifted),
        lifted,
        s,
        margins,
    })
}

pub fn run(cfg: &RunConfig, out: &Output) -> Result<i32, CliError> {
    cfg.check_keys("cone-check", KEYS)?;
    let input: String = cfg.require("input")?;
    let kind = match cfg.str("kind").unwrap_or("hessian") {
        "hessian" => Kind::Hessian,
        "spectrum" => Kind::Spectrum,
        other => return Err(CliError::Config(format!("kind = {other}; expected hessian or spectrum"))),
    };
    let m: usize = cfg.get_or("m", 1)?;
    let text = std::fs::read_to_string(&input).map_err(|e| CliError::Config(format!("cannot read input {input}: {e}")))?;

    let mut reports = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let row = i as u64 + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let values = line
            .split(',')
            .map(|f| {
                let f = f.trim();
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| CliError::Config(format!("row {row}: cannot parse '{f}' as a finite number")))
            })
            .collect::<Result<Vec<f64>, _>>()?;
        let r = classify(row, &values, kind, m)?;
        println!("row {row}: n = {}, largest admissible k = {}", r.n, r.largest_admissible_k);
        reports.push(r);
    }

    let header: Vec<String> =
        ["row", "n", "k", "s_k", "margin", "admissible", "largest_admissible_k"].map(String::from).to_vec();
    let mut rows = Vec::new();
    for r in &reports {
        for k in 0..r.s.len() {
            rows.push(vec![
                r.row.to_string(),
                r.n.to_string(),
                (k + 1).to_string(),
                num(r.s[k]),
                num(r.margins[k]),
                r.admissible[k].to_string(),
                r.largest_admissible_k.to_string(),
            ]);
        }
    }
    out.data("report", &reports, &header, &rows)?;
    let mut body = Map::new();
    body.insert("kind".into(), Value::from(if kind == Kind::Hessian { "hessian" } else { "spectrum" }));
    body.insert("m".into(), Value::from(m));
    body.insert("rows".into(), serde_json::to_value(&reports).expect("row reports"));
    out.manifest("classified", EXIT_OK, body)?;
    println!("cone-check: {} rows", reports.len());
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_admissible_for_every_k() {
        let r = classify(1, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0], Kind::Hessian, 2).unwrap();
        assert_eq!(r.largest_admissible_k, 3);
        assert!(r.admissible.iter().all(|&a| a));
    }

    #[test]
    fn pair_sums_of_one_one_minus_one() {
        let r = classify(1, &[1.0, 1.0, -1.0], Kind::Spectrum, 2).unwrap();
        assert_eq!(r.lifted, vec![2.0, 0.0, 0.0]);
        assert_eq!(r.largest_admissible_k, 1);
        assert_eq!(r.admissible, vec![true, false, false]);
    }

    #[test]
    fn malformed_rows() {
        assert!(classify(4, &[1.0, 2.0, 3.0], Kind::Hessian, 1).unwrap_err().to_string().contains("row 4"));
        assert!(classify(2, &[1.0, 2.0, 0.0, 1.0], Kind::Hessian, 1).is_err());
        assert!(classify(2, &[1.0, 2.0], Kind::Spectrum, 3).is_err());
    }
}
