//! Run configuration read from JSON, with every block optional.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::boundstate::{SaddleOptions, Sampling};
use crate::geometry::DEFAULT_H_MAX;
use crate::groundstate::GroundStateOptions;
use crate::{Error, Grid, PhysParams, Potential, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub d: usize,
    pub n: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { d: 2, n: 256, half_width: 30.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysConfig {
    pub s: f64,
    pub p: f64,
    /// Prescribed mass; `None` means `c0 = ||w||_2`.
    pub c: Option<f64>,
}

impl Default for PhysConfig {
    fn default() -> Self {
        Self { s: 0.5, p: 3.5, c: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub tol_grad: f64,
    pub tol_pohozaev: f64,
    pub max_iter: usize,
    pub h_max: f64,
    /// Boundary slack `eps` of the linking box as a fraction of `m_c`.
    pub linking_eps: f64,
    pub sampling: Sampling,
    pub ground_tol: f64,
    pub ground_max_iter: usize,
    pub calibrate_scale: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let g = GroundStateOptions::default();
        let b = SaddleOptions::default();
        Self {
            tol_grad: b.tol,
            tol_pohozaev: b.pohozaev_tol,
            max_iter: b.max_iter,
            h_max: DEFAULT_H_MAX,
            linking_eps: 0.01,
            sampling: Sampling::default(),
            ground_tol: g.tol,
            ground_max_iter: g.max_iter,
            calibrate_scale: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub field: Option<PathBuf>,
    pub report: Option<PathBuf>,
    /// CSV of the solver trajectory.
    pub series: Option<PathBuf>,
    /// Directory for SVG charts.
    pub plots: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub phys: PhysConfig,
    pub potential: Potential,
    pub solver: SolverConfig,
    pub output: OutputConfig,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            grid: GridConfig::default(),
            phys: PhysConfig::default(),
            potential: Potential::InversePowerWell { mu: 0.05, q: 1.0 },
            solver: SolverConfig::default(),
            output: OutputConfig::default(),
            seed: 0,
        }
    }
}

impl RunConfig {
    /// Parses a full config, or a bare potential block (an object with a
    /// `family` key) applied to the defaults.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("malformed JSON: {e}")))?;
        let cfg = if value.get("family").is_some() {
            let potential: Potential =
                serde_json::from_value(value).map_err(|e| Error::Config(format!("potential block: {e}")))?;
            Self { potential, ..Self::default() }
        } else {
            serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?
        };
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Checks the grid, potential and tolerances, and the physical
    /// parameters against the relaxed window.
    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        self.potential.validate()?;
        PhysParams::relaxed(self.grid.d, self.phys.s, self.phys.p, self.phys.c.unwrap_or(1.0))
            .map_err(|e| Error::Config(e.to_string()))?;
        let s = &self.solver;
        let positive = [
            ("tol_grad", s.tol_grad),
            ("tol_pohozaev", s.tol_pohozaev),
            ("h_max", s.h_max),
            ("linking_eps", s.linking_eps),
            ("ground_tol", s.ground_tol),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::Config(format!("solver.{name} = {v} must be positive")));
        }
        if s.max_iter == 0 || s.ground_max_iter == 0 {
            return Err(Error::Config("iteration limits must be positive".into()));
        }
        if s.sampling.rings == 0 || s.sampling.angles == 0 || s.sampling.h_nodes < 2 {
            return Err(Error::Config("sampling needs rings, angles >= 1 and h_nodes >= 2".into()));
        }
        Ok(())
    }

    /// The mass-supercritical window required by the bound-state problem.
    pub fn validate_supercritical(&self) -> Result<PhysParams> {
        PhysParams::new(self.grid.d, self.phys.s, self.phys.p, self.phys.c.unwrap_or(1.0))
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid.d, self.grid.n, self.grid.half_width).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn ground_options(&self) -> GroundStateOptions {
        GroundStateOptions {
            tol: self.solver.ground_tol,
            max_iter: self.solver.ground_max_iter,
            calibrate_scale: self.solver.calibrate_scale,
            ..GroundStateOptions::default()
        }
    }

    pub fn saddle_options(&self) -> SaddleOptions {
        SaddleOptions {
            tol: self.solver.tol_grad,
            pohozaev_tol: self.solver.tol_pohozaev,
            max_iter: self.solver.max_iter,
            h_max: self.solver.h_max,
            enforce_windows: false,
            ..SaddleOptions::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_gives_defaults() {
        let cfg = RunConfig::from_json("{}").unwrap();
        assert_eq!(cfg, RunConfig::default());
        cfg.validate().unwrap();
    }

    #[test]
    fn bare_potential_block() {
        let cfg = RunConfig::from_json(r#"{"family":"inverse_power_well","mu":0.3,"q":1.0}"#).unwrap();
        assert_eq!(cfg.potential, Potential::InversePowerWell { mu: 0.3, q: 1.0 });
        let cfg = RunConfig::from_json(r#"{"family":"constant","a0":1.0}"#).unwrap();
        assert!(cfg.potential.is_constant_one());
    }

    #[test]
    fn nested_blocks_round_trip() {
        let text = r#"{"grid":{"d":1,"n":1024,"L":40},"phys":{"s":1.0,"p":3.0},
            "solver":{"tol_grad":1e-7,"sampling":{"rings":4,"angles":16,"h_nodes":17}},"seed":7}"#;
        let cfg = RunConfig::from_json(text).unwrap();
        assert_eq!(cfg.grid.half_width, 40.0);
        assert_eq!(cfg.solver.tol_grad, 1e-7);
        assert_eq!(cfg.solver.max_iter, 5000);
        assert_eq!(cfg.seed, 7);
        let back = RunConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn invalid_values_are_config_errors() {
        for text in [
            r#"{"grid":{"n":100}}"#,
            r#"{"phys":{"p":1.5}}"#,
            r#"{"solver":{"tol_grad":0}}"#,
            r#"{"potential":{"family":"inverse_power_well","mu":1.5,"q":1}}"#,
        ] {
            let cfg = RunConfig::from_json(text).unwrap();
            assert!(matches!(cfg.validate(), Err(Error::Config(_))), "{text}");
        }
        assert!(matches!(RunConfig::from_json(r#"{"grdi":{}}"#), Err(Error::Config(_))));
        assert!(matches!(RunConfig::from_json("{"), Err(Error::Config(_))));
    }
}
