//! Run configuration: JSON schema, defaults and validation.

use std::f64::consts::SQRT_2;

use qpump::classical::{PhaseSpacePoint, PlowSpec};
use qpump::models::ModelSpec;
use qpump::quadrature::QuadratureSpec;
use qpump::transport::ThermalState;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub format: Format,
    /// Standard output when absent.
    pub path: Option<String>,
}

/// Settings of the `classical` command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassicalConfig {
    pub plow: PlowSpec,
    /// Energy and time ranges of the partition table.
    pub energy: (f64, f64),
    pub time: (f64, f64),
    pub points: usize,
    /// Outgoing-time window and grid of the charge integrals.
    pub window: (f64, f64),
    pub time_points: usize,
    /// Incoming labels whose collision histories are listed.
    pub trajectories: Vec<PhaseSpacePoint>,
}

impl Default for ClassicalConfig {
    fn default() -> Self {
        Self {
            plow: PlowSpec {
                height: 50.0,
                speed: 0.01 * SQRT_2,
                half_window: 1.0,
            },
            energy: (40.0, 65.0),
            time: (-3.0, 3.0),
            points: 64,
            window: (-3.0, 3.0),
            time_points: 2000,
            trajectories: Vec::new(),
        }
    }
}

fn default_thermal() -> ThermalState {
    ThermalState::zero_temperature(1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: Option<ModelSpec>,
    #[serde(default = "default_thermal")]
    pub thermal: ThermalState,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub outputs: OutputSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub classical: ClassicalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: None,
            thermal: default_thermal(),
            quadrature: QuadratureSpec::default(),
            outputs: OutputSpec::default(),
            seed: 0,
            classical: ClassicalConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("config error at `{path}`: {message}")]
pub struct SchemaError {
    pub path: String,
    pub message: String,
}

impl SchemaError {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, SchemaError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let cfg: RunConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        SchemaError::new(path, e.into_inner().to_string())
    })?;
    validate(&cfg)?;
    Ok(cfg)
}

pub fn validate(cfg: &RunConfig) -> Result<(), SchemaError> {
    if let Some(model) = &cfg.model {
        model.validate().map_err(|e| SchemaError::new("model", e.to_string()))?;
    }
    cfg.thermal.validate().map_err(|e| SchemaError::new("thermal", e.to_string()))?;
    cfg.quadrature
        .validate()
        .map_err(|(field, msg)| SchemaError::new(format!("quadrature.{field}"), msg))?;
    let c = &cfg.classical;
    c.plow.validate().map_err(|e| SchemaError::new("classical.plow", e.to_string()))?;
    if c.points < 2 || c.time_points < 16 {
        return Err(SchemaError::new("classical", "points must be at least 2 and time_points at least 16"));
    }
    for (name, (lo, hi)) in [("energy", c.energy), ("time", c.time), ("window", c.window)] {
        if !(hi > lo && lo.is_finite() && hi.is_finite()) {
            return Err(SchemaError::new(format!("classical.{name}"), "range must be finite and increasing"));
        }
    }
    if c.energy.0 <= 0.0 {
        return Err(SchemaError::new("classical.energy", "energies must be positive"));
    }
    Ok(())
}
