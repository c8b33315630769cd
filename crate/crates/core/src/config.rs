//! Run configuration.
//!
//! A [`RunConfig`] is a single JSON document with one block per concern:
//!
//! ```json
//! {
//!   "machine": { "r_s": 0.02, ... },
//!   "grid": { "v_ll_rms": 20000.0, "f": 50.0 },
//!   "torque": { "t_start": 15.0, "t_end": 20.0, "fraction": 0.25 },
//!   "quanta": { "flux_dq": 1e-4, "speed_dq": 1e-5, "angle_dq": 1e-4 },
//!   "solver": { "t_end": 50.0, "euler_dt": 1e-4, "resample_dt": 1e-4, "input_dt": 1e-3 },
//!   "output_dir": "out"
//! }
//! ```
//!
//! Every block may be omitted and then takes its default.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::machine::{GridSpec, MachineParams, Quanta, Scenario, TorqueProfile};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Simulated horizon (s).
    pub t_end: f64,
    /// Euler step of the reference solution (s).
    pub euler_dt: f64,
    /// Grid spacing of `liqss_resampled.csv` (s).
    pub resample_dt: f64,
    /// Hold period of the torque input seen by the event engine (s).
    pub input_dt: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            t_end: 50.0,
            euler_dt: 1e-4,
            resample_dt: 1e-4,
            input_dt: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub machine: MachineParams,
    pub grid: GridSpec,
    pub torque: TorqueProfile,
    pub quanta: Quanta,
    pub solver: SolverConfig,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            machine: MachineParams::default(),
            grid: GridSpec::default(),
            torque: TorqueProfile::default(),
            quanta: Quanta::default(),
            solver: SolverConfig::default(),
            output_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario().validate()?;
        let dt = self.solver.resample_dt;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!("solver.resample_dt must be positive, got {dt}")));
        }
        Ok(())
    }

    pub fn scenario(&self) -> Scenario {
        Scenario {
            params: self.machine,
            grid: self.grid,
            torque: self.torque,
            quanta: self.quanta.clone(),
            t_end: self.solver.t_end,
            euler_dt: self.solver.euler_dt,
            input_dt: self.solver.input_dt,
        }
    }
}
