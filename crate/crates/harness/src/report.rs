//! Sweep reports and their CSV/JSON serialisations.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{OutputFormat, SuiteName};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
}

/// Results of one suite at one `h`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HRow {
    pub h: f64,
    pub max_error: Option<f64>,
    pub mean_error: Option<f64>,
    pub worst_point: Option<[f64; 2]>,
    pub metrics: Vec<Metric>,
    pub pass: bool,
    pub error: Option<String>,
}

impl HRow {
    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|m| m.name == name).map(|m| m.value)
    }
}

/// A pass/fail rule evaluated on a suite's rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub rule: String,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: SuiteName,
    pub rows: Vec<HRow>,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl SuiteReport {
    /// A metric across the sweep, in `h` order.
    pub fn column(&self, name: &str) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r.metric(name)).collect()
    }
}

/// Problem data echoed into the report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemSummary {
    pub potential: String,
    pub parameters: BTreeMap<String, [f64; 2]>,
    pub energy: [f64; 2],
    pub d_x: f64,
    pub d_y: f64,
    pub z0: [f64; 2],
    pub z1: [f64; 2],
    pub seed: u64,
    pub im_p_margin: f64,
}

/// Fields that legitimately differ between identical runs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Volatile {
    pub timestamp: String,
    /// Keyed by `suite@h`.
    pub runtime_seconds: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub schema_version: String,
    pub problem: ProblemSummary,
    pub h_list: Vec<f64>,
    pub suites: Vec<SuiteReport>,
    pub pass: bool,
    pub volatile: Volatile,
}

impl SweepReport {
    pub fn suite(&self, name: SuiteName) -> Option<&SuiteReport> {
        self.suites.iter().find(|s| s.suite == name)
    }

    /// Process exit code: 0 if every suite passed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            1
        }
    }
}

#[derive(Debug, Error)]
pub enum EmitError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub const CSV_HEADER: [&str; 6] = ["suite", "h", "metric", "value", "pass", "note"];

fn write_csv<W: Write>(report: &SweepReport, out: W) -> Result<(), EmitError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    let flag = |b: bool| if b { "true" } else { "false" };
    for s in &report.suites {
        let suite = s.suite.as_str();
        for row in &s.rows {
            let h = row.h.to_string();
            if let Some(e) = &row.error {
                w.write_record([suite, &h, "error", "", "false", e])?;
            }
            let mut fields: Vec<(String, f64)> = Vec::new();
            if let Some(v) = row.max_error {
                fields.push(("max_error".into(), v));
            }
            if let Some(v) = row.mean_error {
                fields.push(("mean_error".into(), v));
            }
            if let Some([re, im]) = row.worst_point {
                fields.push(("worst_point_re".into(), re));
                fields.push(("worst_point_im".into(), im));
            }
            fields.extend(row.metrics.iter().map(|m| (m.name.clone(), m.value)));
            for (name, value) in fields {
                w.write_record([suite, &h, &name, &format!("{value:e}"), flag(row.pass), ""])?;
            }
            if let Some(t) = report.volatile.runtime_seconds.get(&format!("{suite}@{}", row.h)) {
                w.write_record([suite, &h, "runtime_seconds", &format!("{t:e}"), flag(row.pass), ""])?;
            }
        }
        for c in &s.checks {
            w.write_record([suite, "", "check", "", flag(c.pass), &c.rule])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes `report` in `format`; `None` means standard output.
pub fn emit(report: &SweepReport, format: OutputFormat, destination: Option<&std::path::Path>) -> Result<(), EmitError> {
    let mut buf = Vec::new();
    match format {
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut buf, report)?;
            buf.push(b'\n');
        }
        OutputFormat::Csv => write_csv(report, &mut buf)?,
    }
    match destination {
        Some(path) => std::fs::write(path, buf)?,
        None => std::io::stdout().write_all(&buf)?,
    }
    Ok(())
}

/// The JSON text of `report`, without the volatile section.
pub fn stable_json(report: &SweepReport) -> Result<String, EmitError> {
    let mut v = serde_json::to_value(report)?;
    if let Some(o) = v.as_object_mut() {
        o.remove("volatile");
    }
    Ok(serde_json::to_string_pretty(&v)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report_with_error(message: &str) -> SweepReport {
        SweepReport {
            schema_version: SCHEMA_VERSION.into(),
            problem: ProblemSummary {
                potential: "1/z".into(),
                parameters: BTreeMap::new(),
                energy: [0.0, 0.0],
                d_x: 0.3,
                d_y: 0.3,
                z0: [-0.2, 0.0],
                z1: [0.2, 0.0],
                seed: 1,
                im_p_margin: 0.5,
            },
            h_list: vec![0.01],
            suites: vec![SuiteReport {
                suite: SuiteName::Wkb,
                rows: vec![HRow {
                    h: 0.01,
                    max_error: Some(0.5),
                    mean_error: None,
                    worst_point: Some([0.1, -0.2]),
                    metrics: vec![Metric { name: "extra".into(), value: 1e-300 }],
                    pass: false,
                    error: Some(message.into()),
                }],
                checks: vec![Check { rule: "a, b".into(), pass: false }],
                pass: false,
            }],
            pass: false,
            volatile: Volatile::default(),
        }
    }

    #[test]
    fn csv_quotes_awkward_fields() {
        let message = "step collapse at z = (0.1, \"x\")\nsecond line";
        let mut buf = Vec::new();
        write_csv(&report_with_error(message), &mut buf).unwrap();
        let mut r = csv::Reader::from_reader(buf.as_slice());
        let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
        assert!(rows.iter().all(|x| x.len() == CSV_HEADER.len()));
        assert_eq!(&rows[0][5], message);
        assert_eq!(rows[0][2].to_string(), "error");
        let extra = rows.iter().find(|x| &x[2] == "extra").unwrap();
        assert_eq!(extra[3].parse::<f64>().unwrap(), 1e-300);
        assert_eq!(&rows.last().unwrap()[5], "a, b");
    }

    #[test]
    fn json_round_trips_and_strips_volatile() {
        let r = report_with_error("e");
        let text = serde_json::to_string(&r).unwrap();
        let back: SweepReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
        assert!(!stable_json(&r).unwrap().contains("volatile"));
        assert_eq!(r.exit_code(), 1);
    }
}
