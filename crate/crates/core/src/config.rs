//! Run configuration: one TOML file drives every command.
//!
//! The schema is strict: unknown keys are rejected with the parser's
//! location information, and cross-field invariants are checked before any
//! computation.

use serde::{Deserialize, Serialize};

use crate::counting::{DetectorModel, PowerScaling};
use crate::fiber::{FiberGeometry, Numerics, OpticalEnvironment, TransmittanceParams};
use crate::materials::{GasModel, SilicaModel};
use crate::phasematch::{NonlinearParams, PumpSpec};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub materials: Materials,
    pub geometry: FiberGeometry,
    pub environment: Environment,
    pub pump: PumpSpec,
    pub nonlinear: NonlinearParams,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub transmittance: TransmittanceParams,
    pub jsi: JsiConfig,
    pub simulation: SimulationConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Materials {
    pub gas: GasModel,
    pub silica: SilicaModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Environment {
    pub pressure_bar: f64,
    pub temperature_k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JsiConfig {
    pub grid_points: usize,
    pub signal_window_nm: (f64, f64),
    pub idler_window_nm: (f64, f64),
    pub signal_filter_fwhm_nm: f64,
    pub idler_bandwidths_nm: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub seed: u64,
    pub mu_at_reference: f64,
    pub reference_power_mw: f64,
    pub fluorescence_rate_hz: f64,
    pub dark_rate_hz: f64,
    pub pulses: u64,
    pub histogram_bin_ps: f64,
    pub histogram_span_ns: f64,
    pub power_sweep_mw: Vec<f64>,
    pub detector_signal: DetectorModel,
    pub detector_idler: DetectorModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: String,
}

impl RunConfig {
    /// Parses and validates a TOML configuration string.
    pub fn from_toml(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads, parses and validates a config file.
    pub fn load(path: &std::path::Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        RunConfig::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.geometry.validate()?;
        self.pump.validate()?;
        if self.environment.pressure_bar < 0.0 {
            return Err(Error::Config(
                "environment.pressure_bar must be >= 0".into(),
            ));
        }
        if self.environment.temperature_k <= 0.0 {
            return Err(Error::Config(
                "environment.temperature_k must be > 0".into(),
            ));
        }
        for (name, w) in [
            (
                "materials.gas.validity_window_nm",
                self.materials.gas.validity_window_nm,
            ),
            (
                "materials.silica.validity_window_nm",
                self.materials.silica.validity_window_nm,
            ),
            (
                "numerics.signal_search_window_nm",
                self.numerics.signal_search_window_nm,
            ),
            ("numerics.zdw_bracket_nm", self.numerics.zdw_bracket_nm),
            ("jsi.signal_window_nm", self.jsi.signal_window_nm),
            ("jsi.idler_window_nm", self.jsi.idler_window_nm),
        ] {
            if !(w.1 > w.0) {
                return Err(Error::Config(format!(
                    "{name}: empty window [{}, {}]",
                    w.0, w.1
                )));
            }
        }
        if self.jsi.grid_points < 64 {
            return Err(Error::Config("jsi.grid_points must be >= 64".into()));
        }
        if self.jsi.signal_filter_fwhm_nm <= 0.0 {
            return Err(Error::Config(
                "jsi.signal_filter_fwhm_nm must be > 0".into(),
            ));
        }
        if self.jsi.idler_bandwidths_nm.iter().any(|&b| b <= 0.0) {
            return Err(Error::Config("jsi.idler_bandwidths_nm must be > 0".into()));
        }
        self.simulation
            .detector_signal
            .validate()
            .map_err(wrap_config)?;
        self.simulation
            .detector_idler
            .validate()
            .map_err(wrap_config)?;
        if self.simulation.mu_at_reference < 0.0
            || self.simulation.fluorescence_rate_hz < 0.0
            || self.simulation.dark_rate_hz < 0.0
        {
            return Err(Error::Config("simulation rates must be >= 0".into()));
        }
        if self.simulation.pulses == 0 {
            return Err(Error::Config("simulation.pulses must be >= 1".into()));
        }
        if self.simulation.histogram_bin_ps <= 0.0 || self.simulation.histogram_span_ns <= 0.0 {
            return Err(Error::Config("histogram bin and span must be > 0".into()));
        }
        Ok(())
    }

    /// Optical environment at the config's default pressure.
    pub fn environment(&self) -> OpticalEnvironment {
        self.environment_at(self.environment.pressure_bar)
    }

    /// Optical environment at an explicit pressure.
    pub fn environment_at(&self, pressure_bar: f64) -> OpticalEnvironment {
        OpticalEnvironment {
            geometry: self.geometry.clone(),
            gas: self.materials.gas.clone(),
            silica: self.materials.silica.clone(),
            pressure_bar,
            temperature_k: self.environment.temperature_k,
            numerics: self.numerics.clone(),
        }
    }

    /// Pump-power scaling of the simulated source.
    pub fn power_scaling(&self) -> PowerScaling {
        PowerScaling {
            reference_power_mw: self.simulation.reference_power_mw,
            mu_at_reference: self.simulation.mu_at_reference,
            fluorescence_at_reference_hz: self.simulation.fluorescence_rate_hz,
            dark_rate_hz: self.simulation.dark_rate_hz,
        }
    }
}

fn wrap_config(e: Error) -> Error {
    Error::Config(e.to_string())
}
