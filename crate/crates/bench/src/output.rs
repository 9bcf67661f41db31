//! CSV and JSON-lines writers.
//!
//! Floats use Rust's shortest round-trip decimal form; lines end in `\n`.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use wva_core::estimators::EstimatorKind;

use crate::runner::{RunResult, TrialRecord};

pub const CSV_COLUMNS: [&str; 13] = [
    "sweep_param",
    "sweep_value",
    "estimator",
    "emp_mean",
    "emp_var",
    "analytic_var",
    "emp_mse",
    "mean_d_null",
    "mean_d_alt",
    "reject_rate",
    "mean_n_check",
    "skipped_trials",
    "seed",
];

/// `estimator` value of the detection row.
pub const DETECT_ROW: &str = "detect";

/// `sweep_param` value for runs outside a sweep.
pub const NO_SWEEP: &str = "none";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Jsonl,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Self::Csv),
            "jsonl" => Ok(Self::Jsonl),
            other => Err(format!("unknown format '{other}' (expected csv or jsonl)")),
        }
    }
}

/// Which CSV rows to write for each result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rows {
    All,
    Estimators,
    Detection,
}

impl Rows {
    fn estimators(self) -> bool {
        matches!(self, Rows::All | Rows::Estimators)
    }

    fn detection(self) -> bool {
        matches!(self, Rows::All | Rows::Detection)
    }
}

fn push_row(out: &mut String, cells: &[String]) {
    out.push_str(&cells.join(","));
    out.push('\n');
}

/// CSV text for `results`: three estimator rows then one detection row per result.
pub fn csv_string(results: &[RunResult], rows: Rows) -> String {
    let mut out = String::new();
    push_row(&mut out, &CSV_COLUMNS.map(String::from));
    let empty = String::new;
    for r in results {
        let param = r.sweep_param.map_or(NO_SWEEP.to_string(), |p| p.to_string());
        let value = r.sweep_value.map_or_else(empty, |v| v.to_string());
        let n_check = r.mean_n_check.to_string();
        let seed = r.seed.to_string();
        if rows.estimators() {
            for kind in EstimatorKind::ALL {
                let s = r.estimator(kind);
                push_row(
                    &mut out,
                    &[
                        param.clone(),
                        value.clone(),
                        kind.to_string(),
                        s.emp_mean.to_string(),
                        s.emp_var.to_string(),
                        s.analytic_var.to_string(),
                        s.emp_mse.to_string(),
                        empty(),
                        empty(),
                        empty(),
                        n_check.clone(),
                        s.skipped_trials.to_string(),
                        seed.clone(),
                    ],
                );
            }
        }
        if rows.detection() {
            let d = &r.detection;
            push_row(
                &mut out,
                &[
                    param.clone(),
                    value.clone(),
                    DETECT_ROW.to_string(),
                    empty(),
                    empty(),
                    empty(),
                    empty(),
                    d.mean_d_null.to_string(),
                    d.mean_d_alt.to_string(),
                    d.reject_rate_alt.to_string(),
                    n_check.clone(),
                    "0".to_string(),
                    seed.clone(),
                ],
            );
        }
    }
    out
}

/// One JSON object per line.
pub fn jsonl_string<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for item in items {
        let line = serde_json::to_string(item).expect("records serialize");
        writeln!(out, "{line}").expect("writing to a String");
    }
    out
}

fn write_text(text: &str, path: Option<&Path>) -> io::Result<()> {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            w.write_all(text.as_bytes())?;
            w.flush()
        }
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()
        }
    }
}

/// Writes results to `path`, or to stdout when `path` is `None`.
pub fn emit_results(results: &[RunResult], format: Format, path: Option<&Path>) -> io::Result<()> {
    emit_rows(results, format, Rows::All, path)
}

pub fn emit_rows(results: &[RunResult], format: Format, rows: Rows, path: Option<&Path>) -> io::Result<()> {
    let text = match format {
        Format::Csv => csv_string(results, rows),
        Format::Jsonl => jsonl_string(results),
    };
    write_text(&text, path)
}

#[derive(Serialize)]
struct DumpLine<'a> {
    point: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    sweep_value: Option<f64>,
    #[serde(flatten)]
    record: &'a TrialRecord,
}

/// Per-trial records of every result as JSON lines.
pub fn dump_trials(results: &[RunResult], path: &Path) -> io::Result<()> {
    let lines: Vec<DumpLine> = results
        .iter()
        .enumerate()
        .flat_map(|(point, r)| {
            r.trial_records.iter().map(move |record| DumpLine {
                point,
                sweep_value: r.sweep_value,
                record,
            })
        })
        .collect();
    write_text(&jsonl_string(&lines), Some(path))
}

/// Reads a dump written by [`dump_trials`] back into records grouped by point.
pub fn read_trial_dump(text: &str) -> Result<Vec<Vec<TrialRecord>>, serde_json::Error> {
    let mut points: Vec<Vec<TrialRecord>> = Vec::new();
    for line in text.lines().filter(|l| !l.is_empty()) {
        let value: serde_json::Value = serde_json::from_str(line)?;
        let point = value["point"].as_u64().unwrap_or(0) as usize;
        let record: TrialRecord = serde_json::from_value(value)?;
        if points.len() <= point {
            points.resize_with(point + 1, Vec::new);
        }
        points[point].push(record);
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_results_give_header_only() {
        let csv = csv_string(&[], Rows::All);
        assert_eq!(csv, format!("{}\n", CSV_COLUMNS.join(",")));
        assert_eq!(jsonl_string::<RunResult>(&[]), "");
    }

    #[test]
    fn float_text_round_trips() {
        for v in [0.1f64, 1.0 / 3.0, 1e-300, 2.5e17, -0.0, 123456.789] {
            let s = v.to_string();
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn format_parsing() {
        assert_eq!("csv".parse::<Format>().unwrap(), Format::Csv);
        assert_eq!("jsonl".parse::<Format>().unwrap(), Format::Jsonl);
        assert!("xml".parse::<Format>().is_err());
    }
}
