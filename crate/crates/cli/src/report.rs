//! Check rows, run reports and the files written for them.

use std::fmt::Write as _;
use std::path::Path;

use duality_core::duality_engine::{DualityReport, Z_THRESHOLD};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliResult;

/// How a row's `got` is compared with `expected`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Comparison {
    /// `|got − expected| ≤ tolerance`.
    Absolute,
    /// `|got − expected| ≤ tolerance·|expected|`.
    Relative,
    /// `|got − expected| ≤ tolerance` with `tolerance = 3·SE`.
    ZScore,
    /// `got ≤ expected + tolerance`.
    AtMost,
    /// Exact equality of discrete outcomes.
    Equal,
}

/// One check: what was expected, what came out, and whether it is close enough.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub name: String,
    pub comparison: Comparison,
    pub expected: Value,
    pub got: Value,
    pub tolerance: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub se: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<Value>,
    pub pass: bool,
}

/// JSON has no infinities or NaN; those are written as strings.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or_else(|| Value::String(format!("{x}")), Value::Number)
}

impl Row {
    fn numeric(name: impl Into<String>, comparison: Comparison, expected: f64, got: f64, tolerance: f64, pass: bool) -> Self {
        Self {
            name: name.into(),
            comparison,
            expected: num(expected),
            got: num(got),
            tolerance: num(tolerance),
            se: None,
            z: None,
            pass,
        }
    }

    pub fn absolute(name: impl Into<String>, expected: f64, got: f64, tolerance: f64) -> Self {
        let pass = (got - expected).abs() <= tolerance;
        Self::numeric(name, Comparison::Absolute, expected, got, tolerance, pass)
    }

    pub fn relative(name: impl Into<String>, expected: f64, got: f64, tolerance: f64) -> Self {
        let pass = (got - expected).abs() <= tolerance * expected.abs();
        Self::numeric(name, Comparison::Relative, expected, got, tolerance, pass)
    }

    pub fn at_most(name: impl Into<String>, bound: f64, got: f64, tolerance: f64) -> Self {
        let pass = got <= bound + tolerance;
        Self::numeric(name, Comparison::AtMost, bound, got, tolerance, pass)
    }

    pub fn statistical(name: impl Into<String>, report: &DualityReport) -> Self {
        let mut row = Self::numeric(
            name,
            Comparison::ZScore,
            report.j_exact,
            report.mse_mc,
            Z_THRESHOLD * report.mse_se,
            report.verdict.passed(),
        );
        row.se = Some(num(report.mse_se));
        row.z = Some(num(report.z_score));
        row
    }

    pub fn equal(name: impl Into<String>, expected: impl Into<Value>, got: impl Into<Value>) -> Self {
        let (expected, got) = (expected.into(), got.into());
        Self {
            name: name.into(),
            comparison: Comparison::Equal,
            pass: expected == got,
            expected,
            got,
            tolerance: Value::Null,
            se: None,
            z: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub digest: String,
    pub seed: u64,
    pub rows: Vec<Row>,
    /// `"pass"` iff every row passes.
    pub verdict: String,
    pub wall_clock_s: f64,
    /// Files written next to `report.json`, relative to the output directory.
    pub files: Vec<String>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.verdict == "pass"
    }

    pub fn row(&self, name: &str) -> Option<&Row> {
        self.rows.iter().find(|r| r.name == name)
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scenario  {}", self.scenario);
        let _ = writeln!(out, "digest    {}", self.digest);
        let _ = writeln!(out, "seed      {}", self.seed);
        let _ = writeln!(out);
        let width = self.rows.iter().map(|r| r.name.len()).max().unwrap_or(0);
        for r in &self.rows {
            let tag = if r.pass { "PASS" } else { "FAIL" };
            let _ = write!(
                out,
                "{tag}  {:width$}  expected {}  got {}  ({:?}, tol {})",
                r.name,
                r.expected,
                r.got,
                r.comparison,
                r.tolerance
            );
            if let Some(z) = &r.z {
                let _ = write!(out, "  z {z}");
            }
            let _ = writeln!(out);
        }
        let passed = self.rows.iter().filter(|r| r.pass).count();
        let _ = writeln!(out);
        let _ = writeln!(out, "{}/{} checks passed; verdict {}", passed, self.rows.len(), self.verdict);
        let _ = writeln!(out, "wall clock {:.3} s", self.wall_clock_s);
        out
    }
}

/// A CSV file to be emitted: a header row then numeric rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file_name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(file_name: impl Into<String>, header: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self { file_name: file_name.into(), header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.header.len(), "row width differs from the header of {}", self.file_name);
        self.rows.push(row);
    }

    /// Floats are written in the shortest form that round-trips.
    pub fn write(&self, dir: &Path) -> CliResult<()> {
        let mut w = csv::Writer::from_path(dir.join(&self.file_name))?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Column names `prefix[0]`, `prefix[1]`, …
pub fn indexed(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}[{i}]")).collect()
}
