use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::write_atomic;

/// Five significant digits with a signed two-digit exponent, e.g.
/// `3.8533e-01`.
pub fn format_sci(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    let s = format!("{v:.4e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

pub fn format_rate(v: f64) -> String {
    format!("{v:.4}")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    /// Resolution parameter or point count, printed as an integer.
    Count,
    /// Error or bound, printed by [`format_sci`].
    Error,
    /// Empirical rate of the preceding error column; empty on the first row.
    Rate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
    /// Full-precision values; `NaN` marks an empty rate cell and is stored
    /// as `null` in JSON.
    #[serde(deserialize_with = "nan_from_null")]
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub preset: String,
    pub config_hash: String,
    pub version: String,
    pub reference: Option<f64>,
    pub reference_cache_hit: Option<bool>,
    /// Estimated values (or FEM functionals) per row.
    pub estimates: Vec<f64>,
    pub solves: Vec<usize>,
    pub wall_times: Vec<f64>,
    pub total_wall_time: f64,
    pub warnings: Vec<String>,
}

/// Column-oriented error table of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub columns: Vec<Column>,
    /// Column used as abscissa in plot data.
    pub plot_x: usize,
    /// Column plotted as the error.
    pub plot_error: usize,
    /// Column holding the guide line, if the table carries one; otherwise
    /// plot data uses the second-order line through the first error.
    pub plot_guide: Option<usize>,
    pub metadata: Option<ReportMetadata>,
}

pub fn version_string() -> String {
    format!("qmcfem {}", env!("CARGO_PKG_VERSION"))
}

impl ConvergenceReport {
    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, |c| c.values.len())
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.iter().map(|c| c.name.as_str()).collect::<Vec<_>>().join(",");
        out.push('\n');
        for r in 0..self.rows() {
            let cells: Vec<String> = self
                .columns
                .iter()
                .map(|c| {
                    let v = c.values[r];
                    match c.kind {
                        ColumnKind::Count => format!("{}", v as u64),
                        ColumnKind::Error => format_sci(v),
                        ColumnKind::Rate if v.is_nan() => String::new(),
                        ColumnKind::Rate => format_rate(v),
                    }
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Reads a table written by [`ConvergenceReport::to_csv`]; column kinds
    /// are recovered from the header names.
    pub fn from_csv(text: &str, path: &Path) -> Result<Self> {
        let parse_err = |line: usize, field: &str, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            field: field.to_string(),
            message,
        };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| parse_err(1, "header", "empty file".into()))?;
        let mut columns: Vec<Column> = header
            .split(',')
            .map(|name| Column {
                name: name.to_string(),
                kind: column_kind(name),
                values: Vec::new(),
            })
            .collect();
        for (i, line) in lines {
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != columns.len() {
                return Err(parse_err(i + 1, "row", format!("{} cells, header has {}", cells.len(), columns.len())));
            }
            for (c, cell) in columns.iter_mut().zip(cells) {
                let v = if cell.is_empty() && c.kind == ColumnKind::Rate {
                    f64::NAN
                } else {
                    cell.trim()
                        .parse::<f64>()
                        .map_err(|e| parse_err(i + 1, &c.name, format!("`{cell}`: {e}")))?
                };
                c.values.push(v);
            }
        }
        let plot_error = columns
            .iter()
            .position(|c| c.kind == ColumnKind::Error)
            .ok_or_else(|| parse_err(1, "header", "no error column".into()))?;
        let plot_x = columns.iter().position(|c| c.name == "M").unwrap_or(0);
        let plot_guide = columns.iter().position(|c| c.name == BOUND_COLUMN);
        Ok(ConvergenceReport {
            columns,
            plot_x,
            plot_error,
            plot_guide,
            metadata: None,
        })
    }

    /// Writes the CSV and, when present, the metadata sidecar
    /// `<csv>.meta.json`; both through atomic renames.
    pub fn write(&self, csv_path: &Path) -> Result<PathBuf> {
        if let Some(dir) = csv_path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let meta_path = sidecar_path(csv_path);
        let meta = serde_json::to_string_pretty(self)?;
        write_atomic(&meta_path, meta.as_bytes())?;
        write_atomic(csv_path, self.to_csv().as_bytes())?;
        Ok(meta_path)
    }

    /// Whitespace-delimited `x error guide` rows for plotting tools. The
    /// guide is the table's bound column if it has one, else
    /// `e_0 (x_0 / x)^2`.
    pub fn plot_data(&self) -> Result<String> {
        if self.rows() == 0 {
            return Err(Error::invalid("cannot plot an empty report"));
        }
        let x = &self.columns[self.plot_x];
        let e = &self.columns[self.plot_error];
        let guide: Vec<f64> = match self.plot_guide {
            Some(g) => self.columns[g].values.clone(),
            None => x.values.iter().map(|&xi| e.values[0] * (x.values[0] / xi).powi(2)).collect(),
        };
        let guide_name = match self.plot_guide {
            Some(g) => self.columns[g].name.clone(),
            None => format!("{}^-2", x.name),
        };
        let mut out = format!("# {} error {}\n", x.name, guide_name.replace(' ', ""));
        for r in 0..self.rows() {
            out.push_str(&format!("{} {:.17e} {:.17e}\n", x.values[r], e.values[r], guide[r]));
        }
        Ok(out)
    }
}

fn nan_from_null<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    let v: Vec<Option<f64>> = Deserialize::deserialize(d)?;
    Ok(v.into_iter().map(|x| x.unwrap_or(f64::NAN)).collect())
}

pub const BOUND_COLUMN: &str = "(log M)M^-1";

fn column_kind(name: &str) -> ColumnKind {
    match name {
        "CR" => ColumnKind::Rate,
        "J" | "N" | "N_1" | "N_2" | "L" | "M" => ColumnKind::Count,
        _ => ColumnKind::Error,
    }
}

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    let mut name = csv_path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".meta.json");
    csv_path.with_file_name(name)
}

/// Writes plot data for `report` to `path`; an empty report is rejected
/// before anything is written.
pub fn emit_plot_data(report: &ConvergenceReport, path: &Path) -> Result<()> {
    let text = report.plot_data()?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    write_atomic(path, text.as_bytes())
}

/// A count column, an error column and its rates.
pub(crate) fn rate_columns(name: &str, errors: &[f64]) -> Result<[Column; 2]> {
    let mut rates = vec![f64::NAN];
    if errors.len() > 1 {
        rates.extend(crate::fem::empirical_rate(errors)?);
    }
    Ok([
        Column {
            name: name.to_string(),
            kind: ColumnKind::Error,
            values: errors.to_vec(),
        },
        Column {
            name: "CR".into(),
            kind: ColumnKind::Rate,
            values: rates,
        },
    ])
}

pub(crate) fn count_column(name: &str, values: impl IntoIterator<Item = usize>) -> Column {
    Column {
        name: name.to_string(),
        kind: ColumnKind::Count,
        values: values.into_iter().map(|v| v as f64).collect(),
    }
}
