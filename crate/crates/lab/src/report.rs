//! Verification reports and their text, JSON and CSV renderings.
//!
//! Reports hold no timings or thread counts, so equal inputs give
//! byte-identical output.

use crate::config::ExperimentConfig;
use carleman_core::harness::{CarlemanSides, Convergence};
use carleman_core::params::ProblemParams;
use carleman_core::summation::Scaled;
use serde::Serialize;
use std::fmt::Write as _;

/// How a check value is compared with its tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Below,
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">")]
    Above,
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = "==")]
    Equal,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Below => "<",
            Relation::AtMost => "<=",
            Relation::Above => ">",
            Relation::AtLeast => ">=",
            Relation::Equal => "==",
        }
    }

    /// NaN never holds.
    pub fn holds(self, value: f64, tolerance: f64) -> bool {
        match self {
            Relation::Below => value < tolerance,
            Relation::AtMost => value <= tolerance,
            Relation::Above => value > tolerance,
            Relation::AtLeast => value >= tolerance,
            Relation::Equal => value == tolerance,
        }
    }
}

/// One judged number: passes iff `value relation tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convergence: Option<Convergence>,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, relation: Relation, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            value,
            relation,
            tolerance,
            passed: relation.holds(value, tolerance),
            note: None,
            convergence: None,
        }
    }

    /// Setup or evaluation error, recorded as a failed check.
    pub fn error(name: impl Into<String>, message: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            value: f64::NAN,
            relation: Relation::Equal,
            tolerance: 0.0,
            passed: false,
            note: Some(message.into()),
            convergence: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn with_convergence(mut self, c: Convergence) -> Self {
        self.convergence = Some(c);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Passed,
    Failed,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageReport {
    pub name: String,
    pub status: StageStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub checks: Vec<Check>,
    /// The core reports behind the checks.
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub details: serde_json::Value,
}

impl StageReport {
    pub fn judged(name: &str, checks: Vec<Check>, details: serde_json::Value) -> Self {
        let status = if checks.iter().all(|c| c.passed) {
            StageStatus::Passed
        } else {
            StageStatus::Failed
        };
        StageReport {
            name: name.into(),
            status,
            note: None,
            checks,
            details,
        }
    }

    pub fn skipped(name: &str, reason: impl Into<String>) -> Self {
        StageReport {
            name: name.into(),
            status: StageStatus::Skipped,
            note: Some(reason.into()),
            checks: Vec::new(),
            details: serde_json::Value::Null,
        }
    }
}

/// One `α` sweep for one test function.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSeries {
    pub test_function: usize,
    pub sides: Vec<CarlemanSides>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub command: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    /// Parameters the constants were computed from.
    pub params: ProblemParams,
    pub stages: Vec<StageReport>,
    pub passed: bool,
    #[serde(skip)]
    pub sweeps: Vec<SweepSeries>,
}

impl VerificationReport {
    /// Overall pass: no stage failed and at least one ran.
    pub fn judge(&mut self) {
        self.passed = self.stages.iter().all(|s| s.status != StageStatus::Failed)
            && self.stages.iter().any(|s| s.status == StageStatus::Passed);
    }

    pub fn failing_checks(&self) -> impl Iterator<Item = (&str, &Check)> {
        self.stages.iter().flat_map(|s| {
            s.checks
                .iter()
                .filter(|c| !c.passed)
                .map(move |c| (s.name.as_str(), c))
        })
    }

    pub fn stage(&self, name: &str) -> Option<&StageReport> {
        self.stages.iter().find(|s| s.name == name)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let p = &self.params;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{}: d={} rho={} mu={} theta1={} theta2={} b_inf={} c_inf={} seed={}",
            self.command, p.d, p.rho, p.mu, p.theta1, p.theta2, p.b_inf, p.c_inf, self.seed
        );
        let width = self
            .stages
            .iter()
            .flat_map(|s| s.checks.iter().map(|c| c.name.len()))
            .max()
            .unwrap_or(0);
        for stage in &self.stages {
            let status = match stage.status {
                StageStatus::Passed => "PASS",
                StageStatus::Failed => "FAIL",
                StageStatus::Skipped => "SKIP",
            };
            let _ = write!(out, "[{status}] {}", stage.name);
            if let Some(note) = &stage.note {
                let _ = write!(out, " ({note})");
            }
            out.push('\n');
            for c in &stage.checks {
                let _ = write!(
                    out,
                    "  {} {:<width$}  {:>14} {:<2} {:>12}",
                    if c.passed { "ok  " } else { "FAIL" },
                    c.name,
                    number(c.value),
                    c.relation.symbol(),
                    number(c.tolerance),
                );
                if let Some(note) = &c.note {
                    let _ = write!(out, "  {note}");
                }
                out.push('\n');
            }
        }
        let _ = writeln!(
            out,
            "overall: {}",
            if self.passed { "PASS" } else { "FAIL" }
        );
        out
    }

    /// One row per check.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("stage,check,value,relation,tolerance,passed,note\n");
        for s in &self.stages {
            for c in &s.checks {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    csv_field(&s.name),
                    csv_field(&c.name),
                    number(c.value),
                    c.relation.symbol(),
                    number(c.tolerance),
                    c.passed,
                    csv_field(c.note.as_deref().unwrap_or("")),
                );
            }
        }
        out
    }
}

/// `{:.6e}`, with the non-finite cases spelled out.
pub fn number(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.6e}")
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Sweep series as CSV. The three sides overflow `f64` at large `α`, so they
/// are written as mantissas against a common power of ten per row:
/// `side = mantissa · 10^log10_scale`.
pub fn sweep_csv(series: &SweepSeries) -> String {
    let mut out = String::from("alpha,lhs_grad,lhs_u,rhs,ratio,log10_scale\n");
    for s in &series.sides {
        let sides = [s.lhs_grad, s.lhs_u, s.rhs];
        let top = sides
            .iter()
            .map(Scaled::ln_abs)
            .fold(f64::NEG_INFINITY, f64::max);
        let log10_scale = if top.is_finite() {
            (top / std::f64::consts::LN_10).floor()
        } else {
            0.0
        };
        let ln_scale = log10_scale * std::f64::consts::LN_10;
        let m: Vec<String> = sides.iter().map(|v| number(v.rescaled(ln_scale))).collect();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            number(s.alpha),
            m[0],
            m[1],
            m[2],
            number(s.ratio),
            log10_scale
        );
    }
    out
}
