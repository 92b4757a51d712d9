//! Verification suites with persisted reports.

mod suites;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{AflError, Result};

pub use suites::{
    lemma_suite, norm_equivalence_suite, witness_suite, NormEquivalenceConfig, WitnessConfig, WitnessFamily,
};

pub const REPORT_SCHEMA: &str = "afl-report/1";

/// One case: its parameters, metrics, declared tolerance and outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaseResult {
    pub name: String,
    pub params: serde_json::Value,
    pub metrics: BTreeMap<String, f64>,
    pub tolerance: f64,
    pub passed: bool,
}

impl CaseResult {
    pub fn new(name: impl Into<String>, params: serde_json::Value, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            params,
            metrics: BTreeMap::new(),
            tolerance,
            passed: false,
        }
    }

    pub fn metric(mut self, key: &str, value: f64) -> Self {
        self.metrics.insert(key.to_string(), value);
        self
    }

    pub fn passed(mut self, ok: bool) -> Self {
        self.passed = ok;
        self
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteReport {
    pub schema: String,
    pub suite: String,
    pub seed: u64,
    pub parameter_grid: serde_json::Value,
    pub metadata: serde_json::Value,
    pub cases: Vec<CaseResult>,
    pub passed: bool,
    pub runtime_seconds: f64,
}

impl SuiteReport {
    pub(crate) fn new(suite: &str, parameter_grid: serde_json::Value, metadata: serde_json::Value) -> Self {
        Self {
            schema: REPORT_SCHEMA.to_string(),
            suite: suite.to_string(),
            seed: 0,
            parameter_grid,
            metadata,
            cases: Vec::new(),
            passed: false,
            runtime_seconds: 0.0,
        }
    }

    pub(crate) fn finish(mut self, started: std::time::Instant) -> Self {
        self.passed = !self.cases.is_empty() && self.cases.iter().all(|c| c.passed);
        self.runtime_seconds = started.elapsed().as_secs_f64();
        self
    }

    pub fn failures(&self) -> impl Iterator<Item = &CaseResult> {
        self.cases.iter().filter(|c| !c.passed)
    }

    pub fn case(&self, name: &str) -> Option<&CaseResult> {
        self.cases.iter().find(|c| c.name == name)
    }

    /// Long-format table: one row per `(case, metric)`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["case", "metric", "value", "tolerance", "passed"])?;
        for c in &self.cases {
            for (k, v) in &c.metrics {
                w.write_record([
                    c.name.as_str(),
                    k.as_str(),
                    &format!("{v:?}"),
                    &format!("{:?}", c.tolerance),
                    if c.passed { "true" } else { "false" },
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `<suite>.json` and `<suite>.csv` under `dir`.
    pub fn persist(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let json = dir.join(format!("{}.json", self.suite));
        let table = dir.join(format!("{}.csv", self.suite));
        std::fs::write(&json, serde_json::to_string_pretty(self)?)?;
        self.write_csv(std::fs::File::create(&table)?)?;
        Ok((json, table))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(text)?;
        if r.schema != REPORT_SCHEMA {
            return Err(AflError::invalid(format!("unknown report schema {:?}", r.schema)));
        }
        Ok(r)
    }
}

/// JSON number for possibly non-finite metrics.
pub(crate) fn finite_or(v: f64, fallback: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        fallback
    }
}
