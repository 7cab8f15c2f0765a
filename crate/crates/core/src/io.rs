//! File formats shared with the command-line tool.
//!
//! Channel specs and codes are JSON. Sweeps are written either as CSV with
//! nine significant digits or as JSON that keeps each witness, so a reloaded
//! sweep can be checked row by row.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::channel::{bsc, ChannelPair, DiscreteChannel};
use crate::codes::TabularCode;
use crate::error::{Error, Result};
use crate::region::{SweepAxis, SweepRow, WitnessKind};

pub const FORMAT_VERSION: u32 = 1;
pub const CODE_FORMAT: &str = "authcap-code";
pub const SWEEP_FORMAT: &str = "authcap-sweep";
pub const SWEEP_CSV_HEADER: &str = "r,alpha,kappa,witness_kind,budget_flag";
/// Tolerance used when a reloaded sweep row is checked against its witness.
pub const REVALIDATION_TOL: f64 = 1e-6;

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn format_error(what: &str, e: impl ToString) -> Error {
    Error::Format {
        what: what.to_string(),
        message: e.to_string(),
    }
}

/// A channel pair given either as two matrices or as two crossover
/// probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChannelSpecFile {
    Matrices {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        main: Vec<Vec<f64>>,
        tap: Vec<Vec<f64>>,
    },
    Bsc {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        main_bsc: f64,
        tap_bsc: f64,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixForm {
    #[serde(default)]
    name: Option<String>,
    main: Vec<Vec<f64>>,
    tap: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BscForm {
    #[serde(default)]
    name: Option<String>,
    main_bsc: f64,
    tap_bsc: f64,
}

impl ChannelSpecFile {
    pub fn parse(text: &str) -> Result<Self> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| format_error("channel spec", e))?;
        let is_bsc = value.get("main_bsc").is_some() || value.get("tap_bsc").is_some();
        if is_bsc {
            let f: BscForm =
                serde_json::from_value(value).map_err(|e| format_error("channel spec", e))?;
            Ok(ChannelSpecFile::Bsc {
                name: f.name,
                main_bsc: f.main_bsc,
                tap_bsc: f.tap_bsc,
            })
        } else {
            let f: MatrixForm =
                serde_json::from_value(value).map_err(|e| format_error("channel spec", e))?;
            Ok(ChannelSpecFile::Matrices {
                name: f.name,
                main: f.main,
                tap: f.tap,
            })
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_text(path)?)
    }

    pub fn name(&self) -> Option<&str> {
        match self {
            ChannelSpecFile::Matrices { name, .. } | ChannelSpecFile::Bsc { name, .. } => {
                name.as_deref()
            }
        }
    }

    /// Validates both channels.
    pub fn to_pair(&self) -> Result<ChannelPair> {
        match self {
            ChannelSpecFile::Matrices { main, tap, .. } => ChannelPair::new(
                DiscreteChannel::new(main.clone())?,
                DiscreteChannel::new(tap.clone())?,
            ),
            ChannelSpecFile::Bsc {
                main_bsc, tap_bsc, ..
            } => ChannelPair::new(bsc(*main_bsc)?, bsc(*tap_bsc)?),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeFile {
    pub format: String,
    pub version: u32,
    pub code: TabularCode,
}

impl CodeFile {
    pub fn new(code: TabularCode) -> Self {
        CodeFile {
            format: CODE_FORMAT.into(),
            version: FORMAT_VERSION,
            code,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("code serializes") + "\n"
    }

    /// Parses without checking the tables, so broken codes can still be
    /// inspected with [`TabularCode::violations`].
    pub fn parse_unchecked(text: &str) -> Result<Self> {
        let file: CodeFile =
            serde_json::from_str(text).map_err(|e| format_error("code file", e))?;
        check_header("code file", &file.format, CODE_FORMAT, file.version)?;
        Ok(file)
    }

    pub fn parse(text: &str) -> Result<TabularCode> {
        let file = Self::parse_unchecked(text)?;
        file.code.validate()?;
        Ok(file.code)
    }
}

fn check_header(what: &str, format: &str, expected: &str, version: u32) -> Result<()> {
    if format != expected {
        return Err(format_error(
            what,
            format!("format is '{format}', expected '{expected}'"),
        ));
    }
    if version != FORMAT_VERSION {
        return Err(format_error(
            what,
            format!("version {version} is not supported (expected {FORMAT_VERSION})"),
        ));
    }
    Ok(())
}

/// `v` with `digits` significant digits, '.' as decimal separator, trailing
/// zeros removed. Very large or small magnitudes use exponent notation.
pub fn format_significant(v: f64, digits: usize) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{:.*e}", digits.saturating_sub(1), v);
    let (mantissa, exponent) = sci.split_once('e').expect("exponent present");
    let exponent: i32 = exponent.parse().expect("integer exponent");
    if exponent < -5 || exponent >= digits as i32 {
        return format!("{}e{exponent}", trim_zeros(mantissa));
    }
    let decimals = (digits as i32 - 1 - exponent).max(0) as usize;
    trim_zeros(&format!("{v:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for row in rows {
        let p = &row.point;
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            format_significant(p.r, 9),
            format_significant(p.alpha, 9),
            format_significant(p.kappa, 9),
            row.witness_kind.as_str(),
            row.budget_flag
        );
    }
    out
}

/// One line of a sweep CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvSweepRow {
    pub r: f64,
    pub alpha: f64,
    pub kappa: f64,
    pub witness_kind: WitnessKind,
    pub budget_flag: bool,
}

pub fn parse_sweep_csv(text: &str) -> Result<Vec<CsvSweepRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == SWEEP_CSV_HEADER => {}
        other => {
            return Err(format_error(
                "sweep csv",
                format!("bad header {:?}", other.unwrap_or("")),
            ));
        }
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, line)| {
            let fields: Vec<&str> = line.split(',').collect();
            let bad = |msg: String| format_error("sweep csv", format!("line {}: {msg}", i + 2));
            if fields.len() != 5 {
                return Err(bad(format!("expected 5 fields, got {}", fields.len())));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("'{s}': {e}")));
            Ok(CsvSweepRow {
                r: num(fields[0])?,
                alpha: num(fields[1])?,
                kappa: num(fields[2])?,
                witness_kind: WitnessKind::parse(fields[3])
                    .ok_or_else(|| bad(format!("unknown witness kind '{}'", fields[3])))?,
                budget_flag: fields[4]
                    .parse()
                    .map_err(|_| bad(format!("'{}' is not a boolean", fields[4])))?,
            })
        })
        .collect()
}

/// A sweep together with everything needed to re-check it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepDocument {
    pub format: String,
    pub version: u32,
    pub pair: ChannelPair,
    pub fixed: SweepAxis,
    pub step: f64,
    pub seed: u64,
    pub rows: Vec<SweepRow>,
}

impl SweepDocument {
    pub fn new(
        pair: ChannelPair,
        fixed: SweepAxis,
        step: f64,
        seed: u64,
        rows: Vec<SweepRow>,
    ) -> Self {
        SweepDocument {
            format: SWEEP_FORMAT.into(),
            version: FORMAT_VERSION,
            pair,
            fixed,
            step,
            seed,
            rows,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sweep serializes") + "\n"
    }

    /// Parses and re-validates the channels. Rows are not checked here; see
    /// [`SweepDocument::failing_rows`].
    pub fn parse(text: &str) -> Result<Self> {
        let mut doc: SweepDocument =
            serde_json::from_str(text).map_err(|e| format_error("sweep document", e))?;
        check_header("sweep document", &doc.format, SWEEP_FORMAT, doc.version)?;
        doc.pair = ChannelPair::new(
            DiscreteChannel::new(doc.pair.main.to_rows())?,
            DiscreteChannel::new(doc.pair.tap.to_rows())?,
        )?;
        Ok(doc)
    }

    /// Indices of rows that no longer satisfy the region against their
    /// recorded witness.
    pub fn failing_rows(&self) -> Result<Vec<usize>> {
        let mut bad = Vec::new();
        for (i, row) in self.rows.iter().enumerate() {
            if !row.revalidate(&self.pair, REVALIDATION_TOL)? {
                bad.push(i);
            }
        }
        Ok(bad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::simmons_noiseless_code;
    use crate::region::{boundary_sweep, SearchParams};

    #[test]
    fn significant_digits() {
        assert_eq!(format_significant(0.1, 9), "0.1");
        assert_eq!(format_significant(0.531004406410719, 9), "0.531004406");
        assert_eq!(format_significant(1.0 / 3.0, 9), "0.333333333");
        assert_eq!(format_significant(0.9999999999, 9), "1");
        assert_eq!(format_significant(123.456, 9), "123.456");
        assert_eq!(format_significant(1.5e-7, 9), "1.5e-7");
        assert_eq!(format_significant(-0.25, 9), "-0.25");
        assert_eq!(format_significant(2e9, 9), "2e9");
        assert_eq!(format_significant(0.0, 9), "0");
    }

    #[test]
    fn channel_specs_in_both_shapes() {
        let bsc = ChannelSpecFile::parse(r#"{"main_bsc": 0.1, "tap_bsc": 0.2}"#).unwrap();
        assert_eq!(bsc.to_pair().unwrap().as_bsc_pair(), Some((0.1, 0.2)));
        let m = ChannelSpecFile::parse(r#"{"name": "erasure", "main": [[1, 0, 0], [0, 0, 1]], "tap": [[0.5, 0.5, 0], [0, 0.5, 0.5]]}"#)
            .unwrap();
        assert_eq!(m.name(), Some("erasure"));
        assert_eq!(m.to_pair().unwrap().main.output_size(), 3);
    }

    #[test]
    fn bad_channel_specs() {
        let not_stochastic =
            ChannelSpecFile::parse(r#"{"main": [[0.5, 0.6]], "tap": [[1.0]]}"#).unwrap();
        assert!(matches!(
            not_stochastic.to_pair(),
            Err(Error::NotStochastic(_))
        ));
        let mismatch =
            ChannelSpecFile::parse(r#"{"main": [[1.0]], "tap": [[1, 0], [0, 1]]}"#).unwrap();
        assert!(matches!(
            mismatch.to_pair(),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(
            ChannelSpecFile::parse("{"),
            Err(Error::Format { .. })
        ));
        assert!(
            ChannelSpecFile::parse(r#"{"main_bsc": 0.1, "tap_bsc": 0.2, "extra": 1}"#).is_err()
        );
        assert!(
            ChannelSpecFile::parse(r#"{"main_bsc": 1.5, "tap_bsc": 0.2}"#)
                .unwrap()
                .to_pair()
                .is_err()
        );
    }

    #[test]
    fn missing_file_names_the_path() {
        let err = ChannelSpecFile::load(Path::new("/no/such/spec.json")).unwrap_err();
        assert!(err.to_string().contains("/no/such/spec.json"));
    }

    #[test]
    fn code_round_trip() {
        let code = simmons_noiseless_code(2, 4, 1.0, 9).unwrap();
        let text = CodeFile::new(code.clone()).to_json();
        assert_eq!(CodeFile::parse(&text).unwrap(), code);
    }

    #[test]
    fn broken_code_parses_unchecked_only() {
        let mut code = simmons_noiseless_code(2, 2, 1.0, 9).unwrap();
        code.decoder[3][0] += 0.5;
        let text = CodeFile::new(code).to_json();
        assert!(CodeFile::parse(&text).is_err());
        let raw = CodeFile::parse_unchecked(&text).unwrap();
        assert!(raw
            .code
            .violations()
            .iter()
            .any(|v| v.starts_with("row-stochastic")));
    }

    #[test]
    fn wrong_header_rejected() {
        let code = simmons_noiseless_code(2, 2, 1.0, 9).unwrap();
        let text = CodeFile::new(code)
            .to_json()
            .replace("authcap-code", "other");
        assert!(matches!(CodeFile::parse(&text), Err(Error::Format { .. })));
    }

    #[test]
    fn sweep_round_trips_and_revalidates() {
        let pair = ChannelPair::bsc_pair(0.1, 0.2).unwrap();
        let rows =
            boundary_sweep(&pair, SweepAxis::Kappa(0.3), 0.05, &SearchParams::default()).unwrap();
        let csv = sweep_csv(&rows);
        let parsed = parse_sweep_csv(&csv).unwrap();
        assert_eq!(parsed.len(), rows.len());
        for (a, b) in parsed.iter().zip(&rows) {
            assert!((a.alpha - b.point.alpha).abs() <= 5e-9 * b.point.alpha.abs() + 1e-300);
            assert_eq!(a.witness_kind, b.witness_kind);
        }
        let doc = SweepDocument::new(pair, SweepAxis::Kappa(0.3), 0.05, 0, rows);
        let back = SweepDocument::parse(&doc.to_json()).unwrap();
        assert_eq!(back, doc);
        assert!(back.failing_rows().unwrap().is_empty());
    }

    #[test]
    fn tampered_sweep_row_is_caught() {
        let pair = ChannelPair::bsc_pair(0.1, 0.2).unwrap();
        let mut rows =
            boundary_sweep(&pair, SweepAxis::Kappa(0.3), 0.1, &SearchParams::default()).unwrap();
        rows[0].point.alpha += 0.1;
        let doc = SweepDocument::new(pair, SweepAxis::Kappa(0.3), 0.1, 0, rows);
        assert_eq!(
            SweepDocument::parse(&doc.to_json())
                .unwrap()
                .failing_rows()
                .unwrap(),
            vec![0]
        );
    }

    #[test]
    fn csv_errors() {
        assert!(parse_sweep_csv("a,b\n").is_err());
        assert!(parse_sweep_csv(&format!("{SWEEP_CSV_HEADER}\n0.1,0.2,0.3,nope,false\n")).is_err());
        assert!(
            parse_sweep_csv(&format!("{SWEEP_CSV_HEADER}\n0.1,0.2,0.3,closed-form\n")).is_err()
        );
    }
}
