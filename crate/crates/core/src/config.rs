//! The project configuration file: arm model, tank, grid, solver and controller
//! settings in one TOML document. Every section and key is optional; missing
//! values take their defaults, unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::arm_model::ArmModel;
use crate::coevolution::{CoevoMethod, CoevoParams, Neighborhood};
use crate::error::{Error, Result};
use crate::es_solver::{EsParams, SweepOrder};
use crate::workspace::{GridSpec, TankModel};

/// Environment variable naming the default configuration file.
pub const CONFIG_ENV: &str = "SERPENTIK_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSettings {
    pub order: SweepOrder,
    pub warm_start: bool,
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings {
            order: SweepOrder::Serpentine,
            warm_start: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoevoSettings {
    pub method: CoevoMethod,
    pub neighborhood: Neighborhood,
    pub passes: usize,
    /// Feet; defaults to the solver tolerance.
    pub relax_bound: Option<f64>,
    pub evals_per_point: u64,
}

impl Default for CoevoSettings {
    fn default() -> Self {
        let d = CoevoParams::default();
        CoevoSettings {
            method: d.method,
            neighborhood: d.neighborhood,
            passes: d.passes,
            relax_bound: None,
            evals_per_point: d.evals_per_point,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectorySettings {
    /// Sample spacing along the path, feet.
    pub step: f64,
    /// Degrees per sample; no default, must be supplied for trajectory planning.
    pub max_joint_rate: Option<f64>,
}

impl Default for TrajectorySettings {
    fn default() -> Self {
        TrajectorySettings {
            step: 0.25,
            max_joint_rate: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServeSettings {
    pub port: u16,
}

impl Default for ServeSettings {
    fn default() -> Self {
        ServeSettings { port: 8765 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectConfig {
    pub arm: ArmModel,
    pub tank: TankModel,
    pub grid: GridSpec,
    pub es: EsParams,
    pub sweep: SweepSettings,
    pub coevo: CoevoSettings,
    pub trajectory: TrajectorySettings,
    pub serve: ServeSettings,
}

impl ProjectConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ProjectConfig = toml::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.arm.validate()?;
        self.tank.validate()?;
        self.grid.validate()?;
        self.es.validate()?;
        self.coevo_params().validate()?;
        if !(self.trajectory.step > 0.0) {
            return Err(Error::InvalidConfig("trajectory.step must be > 0".into()));
        }
        Ok(())
    }

    pub fn coevo_params(&self) -> CoevoParams {
        CoevoParams {
            method: self.coevo.method,
            neighborhood: self.coevo.neighborhood,
            passes: self.coevo.passes,
            relax_bound: self.coevo.relax_bound.unwrap_or(self.es.tolerance),
            evals_per_point: self.coevo.evals_per_point,
            es: self.es.clone(),
        }
    }
}
