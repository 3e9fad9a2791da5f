//! CSV tables and run manifests.

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{QuadratureSpec, SeriesTruncation};

#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Num(f64),
    Int(i64),
    Text(String),
}

/// 17 significant digits in scientific notation; enough to round-trip.
pub fn format_num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

impl Field {
    fn render(&self) -> String {
        match self {
            Field::Num(v) => format_num(*v),
            Field::Int(v) => v.to_string(),
            Field::Text(s) => s.clone(),
        }
    }
}

/// Renders a table with a header row and LF line endings.
pub fn render_csv(header: &[&str], rows: &[Vec<Field>]) -> Result<Vec<u8>> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Config(format!("csv: {e}"));
    writer.write_record(header).map_err(csv_err)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::DimensionMismatch {
                expected: header.len(),
                found: row.len(),
            });
        }
        writer.write_record(row.iter().map(Field::render)).map_err(csv_err)?;
    }
    writer.into_inner().map_err(|e| Error::Config(format!("csv: {e}")))
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<Field>]) -> Result<()> {
    std::fs::write(path, render_csv(header, rows)?)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct Tolerances {
    pub tol_scale: f64,
    pub quadrature: QuadratureSpec,
    pub series: SeriesTruncation,
    /// Tolerance of the unit-norm check on initial states.
    pub normalization: f64,
}

impl Tolerances {
    pub fn new(tol_scale: f64) -> Self {
        Self {
            tol_scale,
            quadrature: default_quadrature().scaled(tol_scale),
            series: SeriesTruncation::default(),
            normalization: 1e-8,
        }
    }
}

pub fn default_quadrature() -> QuadratureSpec {
    QuadratureSpec::default().with_abs_tol(1e-12)
}

#[derive(Debug, Clone, Serialize)]
pub struct RouteTiming {
    pub route: String,
    pub parameter: [f64; 2],
    pub seconds: f64,
}

/// A pass/fail statement about a run.
#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub name: String,
    pub measured: f64,
    pub limit: f64,
    pub passed: bool,
}

impl Verdict {
    pub fn at_most(name: impl Into<String>, measured: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            limit,
            passed: measured <= limit,
        }
    }
}

/// Written next to every output table.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub scenario: serde_json::Value,
    pub tolerances: Tolerances,
    pub timings: Vec<RouteTiming>,
    pub verdicts: Vec<Verdict>,
    /// Some rows are missing because a computation failed.
    pub partial: bool,
    pub errors: Vec<String>,
    pub notes: Vec<String>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, scenario: serde_json::Value, tolerances: Tolerances) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            scenario,
            tolerances,
            timings: Vec::new(),
            verdicts: Vec::new(),
            partial: false,
            errors: Vec::new(),
            notes: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip_with_17_digits() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23] {
            let s = format_num(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
            let mantissa = s.trim_start_matches('-').split('e').next().unwrap();
            assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17);
        }
        assert_eq!(format_num(f64::NAN), "nan");
    }

    #[test]
    fn csv_quotes_text_and_uses_lf() {
        let bytes = render_csv(&["a", "b"], &[vec![Field::Int(1), Field::Text("x, y".into())]]).unwrap();
        assert_eq!(String::from_utf8(bytes).unwrap(), "a,b\n1,\"x, y\"\n");
        assert!(render_csv(&["a"], &[vec![]]).is_err());
    }
}
