//! Experiment reports and their on-disk form.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use super::config::ExperimentConfig;
use crate::{Error, Result};

/// Version of the JSON layout.
pub const SCHEMA: u32 = 1;

/// Acceptance clause a verdict belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Clause {
    Acc1,
    Acc2,
    Acc3,
    Acc4,
    Acc5,
    Acc6,
    Acc7,
    Acc8,
    Acc9,
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = *self as u8 + 1;
        write!(f, "acc{n}")
    }
}

/// Comparison a verdict asserts between a measured value and a limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = ">")]
    Above,
    #[serde(rename = "<")]
    Below,
}

impl Relation {
    pub fn holds(self, value: f64, limit: f64) -> bool {
        match self {
            Relation::AtMost => value <= limit,
            Relation::AtLeast => value >= limit,
            Relation::Above => value > limit,
            Relation::Below => value < limit,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
            Relation::Above => ">",
            Relation::Below => "<",
        }
    }
}

/// A measured or derived number.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Quantity {
    pub name: String,
    pub value: f64,
    /// One standard error, when the estimate has one.
    pub uncertainty: Option<f64>,
}

/// Pass or fail of one numeric check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub clause: Clause,
    pub check: String,
    pub value: f64,
    pub relation: Relation,
    pub limit: f64,
    pub passed: bool,
}

/// Output file kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl Format {
    pub const ALL: [Format; 3] = [Format::Csv, Format::Json, Format::Svg];

    fn of(name: &str) -> Option<Format> {
        match Path::new(name).extension()?.to_str()? {
            "csv" => Some(Format::Csv),
            "json" => Some(Format::Json),
            "svg" => Some(Format::Svg),
            _ => None,
        }
    }
}

/// File name of the JSON report inside the output directory.
pub const REPORT_FILE: &str = "report.json";

/// Results, verdicts and artifacts of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub schema: u32,
    pub config: ExperimentConfig,
    pub quantities: Vec<Quantity>,
    pub verdicts: Vec<Verdict>,
    /// Wall-clock seconds per stage.
    pub timings: BTreeMap<String, f64>,
    /// Files written by [`emit`], in order.
    pub artifacts: Vec<String>,
    #[serde(skip)]
    contents: BTreeMap<String, String>,
}

impl ExperimentReport {
    pub fn new(config: ExperimentConfig) -> Self {
        ExperimentReport {
            schema: SCHEMA,
            config,
            quantities: Vec::new(),
            verdicts: Vec::new(),
            timings: BTreeMap::new(),
            artifacts: vec![
                REPORT_FILE.to_string(),
                "quantities.csv".to_string(),
                "verdicts.csv".to_string(),
            ],
            contents: BTreeMap::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.quantities.is_empty() && self.verdicts.is_empty()
    }

    pub fn quantity(&mut self, name: impl Into<String>, value: f64) {
        self.quantities.push(Quantity {
            name: name.into(),
            value,
            uncertainty: None,
        });
    }

    pub fn measured(&mut self, name: impl Into<String>, value: f64, stderr: f64) {
        self.quantities.push(Quantity {
            name: name.into(),
            value,
            uncertainty: Some(stderr),
        });
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.quantities
            .iter()
            .find(|q| q.name == name)
            .map(|q| q.value)
    }

    /// Records `value relation limit` under `clause` and returns whether it holds.
    pub fn check(
        &mut self,
        clause: Clause,
        check: impl Into<String>,
        value: f64,
        relation: Relation,
        limit: f64,
    ) -> bool {
        let passed = relation.holds(value, limit);
        self.verdicts.push(Verdict {
            clause,
            check: check.into(),
            value,
            relation,
            limit,
            passed,
        });
        passed
    }

    /// Whether every verdict passed (false when there are none).
    pub fn passed(&self) -> bool {
        !self.verdicts.is_empty() && self.verdicts.iter().all(|v| v.passed)
    }

    /// Whether every verdict of `clause` passed (false when there are none).
    pub fn clause_passed(&self, clause: Clause) -> bool {
        let mut any = false;
        for v in self.verdicts.iter().filter(|v| v.clause == clause) {
            if !v.passed {
                return false;
            }
            any = true;
        }
        any
    }

    /// Stores the seconds elapsed since `start` under `stage`.
    pub fn time(&mut self, stage: impl Into<String>, start: Instant) {
        self.timings
            .insert(stage.into(), start.elapsed().as_secs_f64());
    }

    /// Registers an artifact; the name's extension selects its format.
    pub fn attach(&mut self, name: impl Into<String>, content: String) -> Result<()> {
        let name = name.into();
        if Format::of(&name).is_none() || name.contains(['/', '\\']) {
            return Err(Error::config(format!(
                "artifact {name:?} needs a plain .csv, .json or .svg file name"
            )));
        }
        if self.artifacts.contains(&name) {
            return Err(Error::config(format!("artifact {name:?} attached twice")));
        }
        self.contents.insert(name.clone(), content);
        self.artifacts.push(name);
        Ok(())
    }

    /// Content of an attached artifact (not the generated tables).
    pub fn artifact(&self, name: &str) -> Option<&str> {
        self.contents.get(name).map(String::as_str)
    }

    pub fn quantities_csv(&self) -> String {
        let mut out = String::from("name,value,uncertainty\n");
        for q in &self.quantities {
            let u = q.uncertainty.map(|u| u.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{},{},{}", q.name, q.value, u);
        }
        out
    }

    pub fn verdicts_csv(&self) -> String {
        let mut out = String::from("clause,check,value,relation,limit,passed\n");
        for v in &self.verdicts {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                v.clause,
                v.check,
                v.value,
                v.relation.symbol(),
                v.limit,
                v.passed
            );
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// One line per verdict, for terminals.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for v in &self.verdicts {
            let _ = writeln!(
                out,
                "{} {} {}: {} {} {}",
                if v.passed { "PASS" } else { "FAIL" },
                v.clause,
                v.check,
                v.value,
                v.relation.symbol(),
                v.limit
            );
        }
        out
    }
}

/// Writes the report's files of the given formats into `dir` and returns their paths.
///
/// Output is a pure function of the report, so re-emitting gives identical bytes.
pub fn emit(report: &ExperimentReport, dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>> {
    if report.is_empty() {
        return Err(Error::config("report has no quantities and no verdicts"));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for name in &report.artifacts {
        let format = Format::of(name).expect("attach checks the extension");
        if !formats.contains(&format) {
            continue;
        }
        let content = match name.as_str() {
            REPORT_FILE => report.to_json()?,
            "quantities.csv" => report.quantities_csv(),
            "verdicts.csv" => report.verdicts_csv(),
            other => report.contents[other].clone(),
        };
        let path = dir.join(name);
        std::fs::write(&path, content).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workbench::config::ExperimentId;

    fn report() -> ExperimentReport {
        let mut r = ExperimentReport::new(ExperimentConfig::new(ExperimentId::Anisotropic));
        r.quantity("gap", 0.63);
        r.check(Clause::Acc2, "gap error", 0.001, Relation::AtMost, 0.01);
        r.attach("profile.csv", "theta,speed\n0,4\n".into())
            .unwrap();
        r
    }

    #[test]
    fn emit_is_byte_stable() {
        let dir = tempfile::tempdir().unwrap();
        let r = report();
        let first = emit(&r, dir.path(), &Format::ALL).unwrap();
        let bytes: Vec<Vec<u8>> = first.iter().map(|p| std::fs::read(p).unwrap()).collect();
        let second = emit(&r, dir.path(), &Format::ALL).unwrap();
        assert_eq!(first, second);
        for (p, b) in second.iter().zip(&bytes) {
            assert_eq!(&std::fs::read(p).unwrap(), b);
        }
        assert_eq!(first.len(), 4);
        let json: serde_json::Value =
            serde_json::from_slice(&std::fs::read(dir.path().join(REPORT_FILE)).unwrap()).unwrap();
        assert_eq!(json["schema"], 1);
        assert_eq!(json["verdicts"][0]["clause"], "acc2");
        assert_eq!(json["config"]["experiment"], "anisotropic");
    }

    #[test]
    fn format_filter_and_empty_report() {
        let dir = tempfile::tempdir().unwrap();
        let only_csv = emit(&report(), dir.path(), &[Format::Csv]).unwrap();
        assert_eq!(only_csv.len(), 3);
        let empty = ExperimentReport::new(ExperimentConfig::new(ExperimentId::FreeKpp));
        assert!(emit(&empty, dir.path(), &Format::ALL).is_err());
    }

    #[test]
    fn verdict_bookkeeping() {
        let mut r = report();
        assert!(r.passed() && r.clause_passed(Clause::Acc2) && !r.clause_passed(Clause::Acc1));
        assert!(!r.check(Clause::Acc2, "strict", 1.0, Relation::Above, 1.0));
        assert!(!r.passed());
        assert!(r.attach("profile.csv", String::new()).is_err());
        assert!(r.attach("plot.png", String::new()).is_err());
        assert!(r.summary().contains("FAIL acc2 strict"));
    }
}
