//! JSON run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::SolverOptions;
use crate::macro_solver::{ScalarBoundary, TimeGrid};
use crate::material::{InterfaceProfile, Phase, PhaseParameters};
use crate::micro_dns::{InterfaceMode, DESK_CAP};
use crate::source::PhaseSources;
use crate::unit_cell::{build_unit_cell, build_unit_cell_allow_empty, reciprocal_integer, Inclusion, UnitCellMesh};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    /// Cells per axis of the unit cell mesh.
    pub resolution: usize,
    pub inclusion: Inclusion,
    /// Accept a cell without inclusion (single-phase runs).
    #[serde(default)]
    pub allow_empty: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhasesConfig {
    pub matrix: Phase,
    pub inclusion: Phase,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterfaceConfig {
    /// Hydraulic barrier `ζ(y)` [m/(Pa·s)].
    pub zeta: InterfaceProfile,
    /// Thermal barrier `ω(y)` [W/(m²·K)].
    pub omega: InterfaceProfile,
    /// Allows barriers that vanish somewhere.
    #[serde(default)]
    pub insulated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MacroConfig {
    pub resolution: usize,
    pub boundary: ScalarBoundary,
}

impl Default for MacroConfig {
    fn default() -> Self {
        Self {
            resolution: 8,
            boundary: ScalarBoundary::Mixed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DnsConfig {
    pub epsilon: f64,
    pub interface: InterfaceMode,
    pub desk_cap: usize,
    /// Permit an inclusion touching the cell boundary.
    pub allow_boundary: bool,
}

impl Default for DnsConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.5,
            interface: InterfaceMode::Duplicated,
            desk_cap: DESK_CAP,
            allow_boundary: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: PathBuf,
    /// Write VTK files of the fields.
    pub vtk: bool,
    /// Also dump the cell correctors as VTK in `upscale`.
    pub correctors_vtk: bool,
    /// Log level: error, warn, info, debug or trace.
    pub verbosity: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            vtk: true,
            correctors_vtk: false,
            verbosity: "info".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: GeometryConfig,
    pub phases: PhasesConfig,
    pub interface: InterfaceConfig,
    #[serde(default)]
    pub sources: PhaseSources,
    pub time: TimeGrid,
    #[serde(default, rename = "macro")]
    pub macro_: MacroConfig,
    #[serde(default)]
    pub eps_list: Vec<f64>,
    #[serde(default)]
    pub dns: DnsConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub solver: SolverOptions,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn parameters(&self) -> PhaseParameters {
        PhaseParameters {
            phases: [self.phases.matrix.clone(), self.phases.inclusion.clone()],
            zeta: self.interface.zeta.clone(),
            omega: self.interface.omega.clone(),
        }
    }

    pub fn unit_cell(&self) -> Result<UnitCellMesh> {
        if self.geometry.allow_empty {
            build_unit_cell_allow_empty(self.geometry.resolution, &self.geometry.inclusion)
        } else {
            build_unit_cell(self.geometry.resolution, &self.geometry.inclusion)
        }
    }

    /// Checks every invariant that does not need a mesh.
    pub fn validate(&self) -> Result<()> {
        self.parameters().validate(self.interface.insulated)?;
        self.time.steps()?;
        if self.macro_.resolution < 2 {
            return Err(Error::Config("macro.resolution must be at least 2".into()));
        }
        if self.geometry.resolution == 0 {
            return Err(Error::Config("geometry.resolution must be positive".into()));
        }
        for &e in &self.eps_list {
            reciprocal_integer(e)?;
        }
        reciprocal_integer(self.dns.epsilon)?;
        if !(self.solver.tol > 0.0) || self.solver.max_iter == 0 {
            return Err(Error::Config(
                "solver.tol must be positive and solver.max_iter nonzero".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const MINIMAL: &str = r#"{
        "geometry": {"resolution": 4, "inclusion": {"kind": "box", "lo": [0.25, 0.25, 0.25], "hi": [0.75, 0.75, 0.75]}},
        "phases": {
            "matrix": {"lambda": 2, "mu": 1, "beta": 0.8, "gamma": 0.3, "alpha": 0.1, "phi": 0.5, "kappa": 1, "conductivity": 1.5, "capacity": 1.2},
            "inclusion": {"lambda": 4, "mu": 2, "beta": 0.8, "gamma": 0.3, "alpha": 0.1, "phi": 0.5, "kappa": 2, "conductivity": 3, "capacity": 1.2}
        },
        "interface": {"zeta": 1.0, "omega": {"kind": "sine", "mean": 1.0, "amplitude": 0.5, "axis": 0, "frequency": 1}},
        "time": {"dt": 0.1, "t_end": 0.3}
    }"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let c = RunConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.macro_.resolution, 8);
        assert_eq!(c.dns.desk_cap, DESK_CAP);
        assert!(c.sources.is_zero());
        assert_eq!(c.time.steps().unwrap(), 3);
    }

    #[test]
    fn invariants_are_named() {
        let bad = MINIMAL.replace("\"zeta\": 1.0", "\"zeta\": 0.0");
        let e = RunConfig::from_json(&bad).unwrap_err().to_string();
        assert!(e.contains("zeta"), "{e}");
        let ok = bad.replace("\"time\"", "\"interface_unused\"");
        assert!(RunConfig::from_json(&ok).is_err());
        let bad = MINIMAL.replace("\"mu\": 1,", "\"mu\": -1,");
        assert!(matches!(RunConfig::from_json(&bad), Err(Error::Material(_))));
        let bad = MINIMAL.replace("\"t_end\": 0.3", "\"t_end\": 0.3}, \"eps_list\": [0.3], \"x\": {");
        assert!(RunConfig::from_json(&bad).is_err());
    }

    #[test]
    fn non_reciprocal_epsilon_is_rejected() {
        let bad = MINIMAL.replace("\"time\"", "\"eps_list\": [0.5, 0.3], \"time\"");
        assert!(matches!(RunConfig::from_json(&bad), Err(Error::Scale(_))));
    }
}
