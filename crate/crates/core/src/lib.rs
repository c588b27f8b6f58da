//! Simulation and analysis toolkit for a xenon-filled single-ring
//! photonic-crystal-fiber photon-pair source.
//!
//! The crate models the chain from material dispersion to detected counts:
//!
//! * [`materials`] — pressure- and temperature-scaled refractive indices of
//!   the filling gas and of the fused-silica cladding tubes,
//! * [`fiber`] — the resonance-aware LP01 effective index of the gas-filled
//!   fiber, its group-velocity dispersion, tube resonances and transmittance,
//! * [`phasematch`] — four-wave-mixing energy/momentum conservation solved
//!   for signal/idler wavelengths versus gas pressure,
//! * [`jointspectrum`] — the joint spectral intensity of the emitted pair,
//!   its marginals, conditional spectra and filtered count-rate integrals,
//! * [`counting`] — Monte Carlo time-tag simulation of pulsed pair detection
//!   with coincidence histograms, g²(0) and CAR,
//! * [`config`] — the TOML run configuration shared by the CLI commands.

pub mod config;
pub mod counting;
pub mod error;
pub mod fiber;
pub mod jointspectrum;
pub mod materials;
pub mod phasematch;
pub(crate) mod solve;

pub use error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const C_LIGHT: f64 = 299_792_458.0;

/// First zero of the zero-order Bessel function of the first kind, as used
/// by the LP01 capillary model.
pub const BESSEL_J01: f64 = 2.405;

/// Vacuum wavelength in nm to angular frequency in rad/s.
pub fn omega_from_lambda_nm(lambda_nm: f64) -> f64 {
    2.0 * std::f64::consts::PI * C_LIGHT / (lambda_nm * 1e-9)
}

/// Angular frequency in rad/s to vacuum wavelength in nm.
pub fn lambda_nm_from_omega(omega: f64) -> f64 {
    2.0 * std::f64::consts::PI * C_LIGHT / omega * 1e9
}
