//! Report serialization. JSON uses shortest round-trip floats, so parsing a
//! report and writing it again reproduces it byte for byte.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::battery::BatteryReport;
use crate::run::{CheckEntry, Outcome, RunReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    ReportJson,
    TableCsv,
    FieldCsv,
}

impl Format {
    pub const ALL: [Format; 3] = [Format::ReportJson, Format::TableCsv, Format::FieldCsv];
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Format, String> {
        match s {
            "report-json" => Ok(Format::ReportJson),
            "table-csv" => Ok(Format::TableCsv),
            "field-csv" => Ok(Format::FieldCsv),
            _ => Err(format!(
                "unknown format `{s}` (expected report-json, table-csv or field-csv)"
            )),
        }
    }
}

pub fn to_json<T: Serialize>(report: &T) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
    s.push('\n');
    s
}

pub fn from_json<'a, T: Deserialize<'a>>(text: &'a str) -> serde_json::Result<T> {
    serde_json::from_str(text)
}

fn outcome_str(o: Outcome) -> &'static str {
    match o {
        Outcome::Pass => "pass",
        Outcome::Marginal => "marginal",
        Outcome::Fail => "fail",
        Outcome::Error => "error",
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn table_row(out: &mut String, prefix: &str, c: &CheckEntry) {
    let s = &c.summary;
    let _ = writeln!(
        out,
        "{prefix}{},{},{},{},{}",
        c.id,
        cell(s.computed),
        cell(s.bound),
        cell(s.slack),
        outcome_str(c.outcome)
    );
}

/// One row per check: `id,computed,bound,slack,verdict`.
pub fn table_csv(report: &RunReport) -> String {
    let mut out = String::from("id,computed,bound,slack,verdict\n");
    for c in &report.checks {
        table_row(&mut out, "", c);
    }
    out
}

/// One row per admissible node of the finest grid, or `None` when the run
/// computed no ground state.
pub fn field_csv(report: &RunReport) -> Option<String> {
    let field = report.field.as_ref()?;
    let mut out = String::from("x,y,phi0,grad_log_phi0_norm,heat\n");
    for (p, phi, x, heat) in &field.rows {
        let _ = writeln!(out, "{},{},{},{},{}", p[0], p[1], phi, x, cell(*heat));
    }
    Some(out)
}

fn write(dir: &Path, name: &str, text: &str, written: &mut Vec<PathBuf>) -> io::Result<()> {
    let path = dir.join(name);
    fs::write(&path, text)?;
    written.push(path);
    Ok(())
}

/// Writes `report.json`, `checks.csv` and `field.csv` as selected.
pub fn emit(report: &RunReport, formats: &[Format], dir: &Path) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for f in formats {
        match f {
            Format::ReportJson => write(dir, "report.json", &to_json(report), &mut written)?,
            Format::TableCsv => write(dir, "checks.csv", &table_csv(report), &mut written)?,
            Format::FieldCsv => {
                if let Some(text) = field_csv(report) {
                    write(dir, "field.csv", &text, &mut written)?;
                }
            }
        }
    }
    Ok(written)
}

/// Battery output: one JSON report, one table with a scenario column, one
/// field file per scenario.
pub fn emit_battery(
    report: &BatteryReport,
    formats: &[Format],
    dir: &Path,
) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for f in formats {
        match f {
            Format::ReportJson => write(dir, "report.json", &to_json(report), &mut written)?,
            Format::TableCsv => {
                let mut out = String::from("scenario,id,computed,bound,slack,verdict\n");
                for r in &report.scenarios {
                    for c in &r.checks {
                        table_row(&mut out, &format!("{},", r.config.name), c);
                    }
                }
                write(dir, "checks.csv", &out, &mut written)?;
            }
            Format::FieldCsv => {
                for r in &report.scenarios {
                    if let Some(text) = field_csv(r) {
                        write(
                            dir,
                            &format!("field-{}.csv", r.config.name),
                            &text,
                            &mut written,
                        )?;
                    }
                }
            }
        }
    }
    Ok(written)
}
