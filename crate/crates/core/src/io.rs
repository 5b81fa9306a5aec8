//! Text formats: dense matrix CSV, observation CSV and the repair plan sidecar.
//!
//! Numbers are written with 17 significant digits so that every value
//! parses back to the identical `f64`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fspd::{FspdPlan, MuRule};
use crate::linalg::SymmetricMatrix;
use crate::regularizers::DataMatrix;

/// Maximum `|a_ij - a_ji|` accepted when loading a matrix.
pub const SYMMETRY_TOLERANCE: f64 = 1e-8;

pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn parse_f64(field: &str, line: usize, col: usize) -> Result<f64> {
    let t = field.trim();
    t.parse::<f64>()
        .map_err(|_| Error::Parse(format!("line {line}, column {col}: '{t}' is not a number")))
}

fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn parse_matrix_csv(text: &str) -> Result<SymmetricMatrix> {
    let mut rows = Vec::new();
    for (ln, line) in lines(text) {
        let row = line
            .split(',')
            .enumerate()
            .map(|(c, f)| parse_f64(f, ln, c + 1))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse("matrix file is empty".into()));
    }
    SymmetricMatrix::from_rows(&rows, SYMMETRY_TOLERANCE)
}

pub fn matrix_to_csv(m: &SymmetricMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.dim() {
        let row: Vec<String> = m.row(i).iter().map(|&v| format_f64(v)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn read_matrix_csv(path: &Path) -> Result<SymmetricMatrix> {
    parse_matrix_csv(&read_text(path)?)
}

pub fn write_matrix_csv(path: &Path, m: &SymmetricMatrix) -> Result<()> {
    write_text(path, &matrix_to_csv(m))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DataCsvOptions {
    pub header: bool,
    /// First column holds an ISO `YYYY-MM-DD` date.
    pub date_column: bool,
}

/// Observations plus the optional labels that came with them.
#[derive(Debug, Clone, PartialEq)]
pub struct DataTable {
    pub data: DataMatrix,
    /// Column names for the numeric columns.
    pub header: Option<Vec<String>>,
    pub dates: Option<Vec<String>>,
}

fn is_iso_date(s: &str) -> bool {
    let b = s.as_bytes();
    if b.len() != 10 || b[4] != b'-' || b[7] != b'-' {
        return false;
    }
    let digits = |r: std::ops::Range<usize>| b[r].iter().all(u8::is_ascii_digit);
    if !(digits(0..4) && digits(5..7) && digits(8..10)) {
        return false;
    }
    let month: u32 = s[5..7].parse().unwrap_or(0);
    let day: u32 = s[8..10].parse().unwrap_or(0);
    (1..=12).contains(&month) && (1..=31).contains(&day)
}

pub fn parse_data_csv(text: &str, opts: DataCsvOptions) -> Result<DataTable> {
    let mut it = lines(text);
    let skip = usize::from(opts.date_column);
    let header = if opts.header {
        let (_, line) = it.next().ok_or_else(|| Error::Parse("data file is empty".into()))?;
        Some(line.split(',').skip(skip).map(|f| f.trim().to_string()).collect::<Vec<_>>())
    } else {
        None
    };
    let mut dates = Vec::new();
    let mut rows = Vec::new();
    for (ln, line) in it {
        let mut fields = line.split(',');
        if opts.date_column {
            let d = fields.next().unwrap_or("").trim();
            if !is_iso_date(d) {
                return Err(Error::Parse(format!("line {ln}: '{d}' is not an ISO date")));
            }
            dates.push(d.to_string());
        }
        let row = fields
            .enumerate()
            .map(|(c, f)| parse_f64(f, ln, c + 1 + skip))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse("data file has no observations".into()));
    }
    let data = DataMatrix::from_rows(&rows)?;
    if let Some(h) = &header {
        if h.len() != data.p() {
            return Err(Error::Parse(format!("header has {} columns, data has {}", h.len(), data.p())));
        }
    }
    Ok(DataTable { data, header, dates: opts.date_column.then_some(dates) })
}

pub fn data_to_csv(table: &DataTable) -> String {
    let mut out = String::new();
    if let Some(h) = &table.header {
        if table.dates.is_some() {
            out.push_str("date,");
        }
        out.push_str(&h.join(","));
        out.push('\n');
    }
    for k in 0..table.data.n() {
        let mut fields: Vec<String> = Vec::with_capacity(table.data.p() + 1);
        if let Some(d) = &table.dates {
            fields.push(d[k].clone());
        }
        fields.extend(table.data.row(k).iter().map(|&v| format_f64(v)));
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn read_data_csv(path: &Path, opts: DataCsvOptions) -> Result<DataTable> {
    parse_data_csv(&read_text(path)?, opts)
}

pub fn write_data_csv(path: &Path, table: &DataTable) -> Result<()> {
    write_text(path, &data_to_csv(table))
}

/// Flat `key=value` file, one pair per line. Extra entries (such as
/// distances) are appended after the plan fields in the given order.
pub fn plan_to_sidecar(plan: &FspdPlan, extra: &[(String, f64)]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "epsilon={}", format_f64(plan.epsilon));
    let _ = writeln!(out, "mu={}", format_f64(plan.mu));
    let _ = writeln!(out, "mu_rule={}", plan.mu_rule.label());
    let _ = writeln!(out, "alpha={}", format_f64(plan.alpha));
    let _ = writeln!(out, "gamma_min={}", format_f64(plan.gamma_min));
    let _ = writeln!(out, "repaired={}", plan.repaired);
    let _ = writeln!(out, "mu_f_fallback={}", plan.mu_f_fallback);
    for (k, v) in extra {
        let _ = writeln!(out, "{k}={}", format_f64(*v));
    }
    out
}

pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (ln, line) in lines(text) {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {ln}: expected key=value")))?;
        if map.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
            return Err(Error::Parse(format!("line {ln}: duplicate key '{}'", k.trim())));
        }
    }
    Ok(map)
}

pub fn plan_from_sidecar(text: &str) -> Result<FspdPlan> {
    let map = parse_key_values(text)?;
    let get = |k: &str| map.get(k).ok_or_else(|| Error::Parse(format!("sidecar is missing '{k}'")));
    let num = |k: &str| get(k).and_then(|v| parse_f64(v, 0, 0).map_err(|_| Error::Parse(format!("bad value for '{k}'"))));
    let flag = |k: &str| {
        get(k).and_then(|v| v.parse::<bool>().map_err(|_| Error::Parse(format!("bad value for '{k}'"))))
    };
    let mu_rule = match get("mu_rule")?.as_str() {
        "mu_S" => MuRule::MuS,
        "mu_F" => MuRule::MuF,
        "mu_SF" => MuRule::MuSF,
        "explicit" => MuRule::Explicit,
        "infinite" => MuRule::Infinite,
        other => return Err(Error::Parse(format!("unknown mu_rule '{other}'"))),
    };
    Ok(FspdPlan {
        epsilon: num("epsilon")?,
        mu: num("mu")?,
        mu_rule,
        alpha: num("alpha")?,
        repaired: flag("repaired")?,
        gamma_min: num("gamma_min")?,
        mu_f_fallback: flag("mu_f_fallback")?,
    })
}
