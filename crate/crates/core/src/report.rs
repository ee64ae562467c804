//! Structured run reports (`fnls-report/1`), trajectory CSV and atomic output.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::boundstate::{BoundarySample, FamilyMax, IterRecord, LinkingBox, SolutionCheck, Windows};
use crate::config::RunConfig;
use crate::groundstate::MassEnergyPoint;
use crate::io::atomic_write;
use crate::potential::{ConditionReport, Status};
use crate::verification::ScalingSuite;
use crate::{Error, Result};

pub const FORMAT: &str = "fnls-report/1";

/// One pass/fail verdict with the numbers it was decided from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, value: Option<f64>, lower: Option<f64>, upper: Option<f64>) -> Self {
        Self { name: name.into(), passed, value, lower, upper, detail: String::new() }
    }

    /// `value <= upper`.
    pub fn at_most(name: &str, value: f64, upper: f64) -> Self {
        Self::new(name, value <= upper, Some(value), None, Some(upper))
    }

    /// `lower < value < upper`.
    pub fn between(name: &str, value: f64, lower: f64, upper: f64) -> Self {
        Self::new(name, value > lower && value < upper, Some(value), Some(lower), Some(upper))
    }

    /// `value >= lower`.
    pub fn at_least(name: &str, value: f64, lower: f64) -> Self {
        Self::new(name, value >= lower, Some(value), Some(lower), None)
    }

    /// `value > lower`.
    pub fn above(name: &str, value: f64, lower: f64) -> Self {
        Self::new(name, value > lower, Some(value), Some(lower), None)
    }

    pub fn flag(name: &str, passed: bool) -> Self {
        Self::new(name, passed, None, None, None)
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }
}

/// Verdicts of the admissibility checker as report checks; an
/// inadmissible-as-printed condition is recorded as passing with its reason.
pub fn condition_checks(report: &ConditionReport) -> Vec<Check> {
    report
        .verdicts
        .iter()
        .map(|v| Check {
            name: format!("condition {}", v.name),
            passed: v.status != Status::Fail,
            value: v.margin,
            lower: v.margin.map(|_| 0.0),
            upper: None,
            detail: match v.status {
                Status::InadmissibleAsPrinted => format!("inadmissible-as-printed: {}", v.detail),
                _ => v.detail.clone(),
            },
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub theta: f64,
    pub c: f64,
    pub c0: f64,
    pub m_c0: f64,
    pub m_c: f64,
    pub lambda_c: f64,
    pub delta0: Option<f64>,
    pub lambda0: Option<f64>,
    pub two_theta: Option<f64>,
    pub three_theta: Option<f64>,
    pub a1_threshold: Option<f64>,
    pub a5_rhs: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundSummary {
    pub d: usize,
    pub n: usize,
    /// Half-width of the lattice the solution lives on.
    pub half_width: f64,
    pub s: f64,
    pub p: f64,
    pub c0: f64,
    pub m_c0: f64,
    pub residual: f64,
    pub iterations: usize,
    /// `pohozaev / (s K)` on the requested lattice, before calibration.
    pub raw_pohozaev: f64,
    pub relative_pohozaev: f64,
    pub scale: f64,
    pub kinetic: f64,
    pub lp_pow: f64,
    pub peak: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkingSummary {
    #[serde(rename = "box")]
    pub linking_box: LinkingBox,
    pub family: FamilyMax,
    pub boundary: Vec<BoundarySample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSummary {
    pub c: f64,
    pub lambda: f64,
    pub energy: f64,
    pub tangent_res: f64,
    pub tangent_res_l2: f64,
    pub pohozaev_res: f64,
    pub kinetic: f64,
    pub h_star: f64,
    pub barycenter: Option<Vec<f64>>,
    pub spacing: f64,
    pub iterations: usize,
    pub windows: Windows,
    pub recomputed: SolutionCheck,
    /// `(h, F(h * u))` around the converged state.
    pub fiber_profile: Vec<[f64; 2]>,
    pub trajectory: Vec<IterRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorInfo {
    pub kind: String,
    pub message: String,
}

impl ErrorInfo {
    pub fn from_error(e: &Error) -> Self {
        let kind = match e {
            Error::InvalidGrid(_) => "invalid_grid",
            Error::InvalidParams(_) => "invalid_params",
            Error::GridMismatch(_) => "grid_mismatch",
            Error::ImaginaryResidue { .. } => "imaginary_residue",
            Error::Aliasing(_) => "aliasing",
            Error::UndefinedBarycenter(_) => "undefined_barycenter",
            Error::ZeroField => "zero_field",
            Error::BadMagic => "bad_magic",
            Error::Truncated { .. } => "truncated",
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::UnsupportedVersion(_) => "unsupported_version",
            Error::MaxIterations { .. } => "max_iterations",
            Error::Diverged(_) => "diverged",
            Error::FiberUnbounded(_) => "fiber_unbounded",
            Error::StepCollapse { .. } => "step_collapse",
            Error::WindowViolation(_) => "window_violation",
            Error::LinkingBox(_) => "linking_box",
            Error::Corruption(_) => "corruption",
            Error::Condition(_) => "condition",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        };
        Self { kind: kind.into(), message: e.to_string() }
    }
}

/// Wall-clock data; the only part of a report that varies between runs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub started_unix: f64,
    pub wall_seconds: f64,
    pub stages: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub format: String,
    pub command: String,
    pub config: RunConfig,
    pub conditions: Option<ConditionReport>,
    pub constants: Option<Constants>,
    pub ground: Option<GroundSummary>,
    pub scaling: Option<ScalingSuite>,
    pub mass_energy: Option<Vec<MassEnergyPoint>>,
    pub linking: Option<LinkingSummary>,
    pub bound: Option<BoundSummary>,
    pub verification: BTreeMap<String, serde_json::Value>,
    pub checks: Vec<Check>,
    /// Readings of the formulas that differ from their printed form.
    #[serde(default)]
    pub notes: Vec<String>,
    pub error: Option<ErrorInfo>,
    pub timing: Timing,
}

/// Process exit status derived from a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    SolverError,
    VerdictFailure,
    ConfigError,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Success => 0,
            Outcome::SolverError => 1,
            Outcome::VerdictFailure => 2,
            Outcome::ConfigError => 3,
        }
    }
}

impl RunReport {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Self {
            format: FORMAT.into(),
            command: command.into(),
            config: config.clone(),
            conditions: None,
            constants: None,
            ground: None,
            scaling: None,
            mass_energy: None,
            linking: None,
            bound: None,
            verification: BTreeMap::new(),
            checks: Vec::new(),
            notes: Vec::new(),
            error: None,
            timing: Timing::default(),
        }
    }

    pub fn outcome(&self) -> Outcome {
        match &self.error {
            Some(e) if e.kind == "config" => Outcome::ConfigError,
            Some(_) => Outcome::SolverError,
            None if self.checks.iter().all(|c| c.passed) => Outcome::Success,
            None => Outcome::VerdictFailure,
        }
    }

    pub fn failed_checks(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: Self = serde_json::from_str(text)?;
        if report.format != FORMAT {
            return Err(Error::Config(format!("unsupported report format {:?}", report.format)));
        }
        Ok(report)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        atomic_write(path, self.to_json()?.as_bytes())
    }

    /// The report text with the timing block removed, for reproducibility checks.
    pub fn deterministic_json(&self) -> Result<String> {
        let mut copy = self.clone();
        copy.timing = Timing::default();
        copy.to_json()
    }
}

/// Trajectory as CSV with a header row.
pub fn trajectory_csv(records: &[IterRecord]) -> String {
    let mut out = String::from("iteration,reduced_value,tangent_res,pohozaev_res,lambda\n");
    for r in records {
        let _ = writeln!(out, "{},{},{},{},{}", r.iteration, r.reduced_value, r.tangent_res, r.pohozaev_res, r.lambda);
    }
    out
}

pub fn write_trajectory_csv(records: &[IterRecord], path: &Path) -> Result<()> {
    atomic_write(path, trajectory_csv(records).as_bytes())
}

/// Parses the CSV written by [`trajectory_csv`] into `(iteration, reduced_value)`
/// and the remaining columns.
pub fn read_trajectory_csv(text: &str) -> Result<Vec<[f64; 5]>> {
    let mut lines = text.lines();
    match lines.next() {
        Some("iteration,reduced_value,tangent_res,pohozaev_res,lambda") => {}
        _ => return Err(Error::Config("trajectory CSV header missing".into())),
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, line)| {
            let cols: Vec<f64> = line
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Config(format!("CSV row {}: {e}", i + 2)))?;
            <[f64; 5]>::try_from(cols).map_err(|_| Error::Config(format!("CSV row {} needs 5 columns", i + 2)))
        })
        .collect()
}
