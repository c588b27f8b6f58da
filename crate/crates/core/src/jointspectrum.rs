//! Joint spectral intensity of the emitted photon pair, its marginals,
//! conditional spectra and filtered count-rate integrals.
//!
//! The two-photon amplitude is the product of the pump pair envelope in
//! `W = w_s + w_i - 2 w_p` and the phase-matching function
//! `sinc(dbeta L_eff / 2)`, with the pump propagation constant of the
//! mismatch taken at the pair mean frequency `(w_s + w_i)/2` so that it
//! reduces to the tuning-curve mismatch on the energy-conservation line.
//!
//! The pump envelope is orders of magnitude narrower than any grid cell, so
//! grid entries store the cell average: the envelope mass is integrated
//! exactly over each cell (double antiderivative of the Gaussian) and the
//! sinc factor is evaluated where the energy line crosses the cell. Grid
//! marginals and filter integrals are then stable under refinement.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fiber::{OpticalEnvironment, Variant};
use crate::phasematch::{nonlinear_gamma, NonlinearParams, PumpSpec};
use crate::{lambda_nm_from_omega, omega_from_lambda_nm, Error, Result};

use std::f64::consts::PI;

/// A spectral passband applied along one axis of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralFilter {
    pub center_nm: f64,
    pub fwhm_bandwidth_nm: f64,
    pub shape: FilterShape,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterShape {
    Rectangular,
    Gaussian,
}

impl SpectralFilter {
    pub fn rectangular(center_nm: f64, fwhm_bandwidth_nm: f64) -> SpectralFilter {
        SpectralFilter {
            center_nm,
            fwhm_bandwidth_nm,
            shape: FilterShape::Rectangular,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.fwhm_bandwidth_nm <= 0.0 {
            return Err(Error::InvalidArgument(
                "filter bandwidth must be > 0".into(),
            ));
        }
        Ok(())
    }

    /// Transmission of a grid cell centered at `lambda_nm` with width
    /// `cell_nm`. Rectangular filters use the fractional cell overlap so the
    /// integrals vary smoothly with bandwidth.
    fn cell_weight(&self, lambda_nm: f64, cell_nm: f64) -> f64 {
        match self.shape {
            FilterShape::Rectangular => {
                let lo = self.center_nm - self.fwhm_bandwidth_nm / 2.0;
                let hi = self.center_nm + self.fwhm_bandwidth_nm / 2.0;
                let clo = lambda_nm - cell_nm / 2.0;
                let chi = lambda_nm + cell_nm / 2.0;
                ((chi.min(hi) - clo.max(lo)) / cell_nm).clamp(0.0, 1.0)
            }
            FilterShape::Gaussian => {
                let x = lambda_nm - self.center_nm;
                (-4.0 * std::f64::consts::LN_2 * x * x
                    / (self.fwhm_bandwidth_nm * self.fwhm_bandwidth_nm))
                    .exp()
            }
        }
    }
}

/// Standard deviation of the pump *spectrum* (Gaussian, transform limited),
/// rad/s, derived from the pulse duration via the Gaussian time-bandwidth
/// product 2 ln2 / pi.
fn pump_spectral_sigma(pump: &PumpSpec) -> f64 {
    let dnu_fwhm = 2.0 * std::f64::consts::LN_2 / PI / (pump.pulse_duration_fwhm_ps * 1e-12);
    2.0 * PI * dnu_fwhm / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt())
}

/// Pair-envelope standard deviation: variance is twice the single-pump
/// spectral variance.
fn pair_sigma(pump: &PumpSpec) -> f64 {
    std::f64::consts::SQRT_2 * pump_spectral_sigma(pump)
}

/// Pump pair envelope at detuning `W = w_s + w_i - 2 w_p` (rad/s):
/// a unit-peak Gaussian with variance twice the single-pump spectral
/// variance.
pub fn pump_pair_envelope(pump: &PumpSpec, omega_detuning: f64) -> f64 {
    let s = pair_sigma(pump);
    (-omega_detuning * omega_detuning / (2.0 * s * s)).exp()
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Free-frequency phase mismatch with the pump propagation constant at the
/// pair mean frequency, rad/m.
fn mismatch_free(
    env: &OpticalEnvironment,
    pump: &PumpSpec,
    params: &NonlinearParams,
    omega_s: f64,
    omega_i: f64,
) -> Result<f64> {
    let beta = |w: f64| env.propagation_beta(lambda_nm_from_omega(w), Variant::Resonant);
    let nonlinear = if params.include_self_phase_term {
        2.0 * nonlinear_gamma(params, env, pump.center_wavelength_nm) * pump.peak_power_w()
    } else {
        0.0
    };
    Ok(2.0 * beta((omega_s + omega_i) / 2.0)? - beta(omega_s)? - beta(omega_i)? - nonlinear)
}

/// Pointwise joint spectral intensity (not normalized).
pub fn jsi_value(
    env: &OpticalEnvironment,
    pump: &PumpSpec,
    params: &NonlinearParams,
    lambda_s_nm: f64,
    lambda_i_nm: f64,
) -> Result<f64> {
    let ws = omega_from_lambda_nm(lambda_s_nm);
    let wi = omega_from_lambda_nm(lambda_i_nm);
    let wp = omega_from_lambda_nm(pump.center_wavelength_nm);
    let envelope = pump_pair_envelope(pump, ws + wi - 2.0 * wp);
    let x = mismatch_free(env, pump, params, ws, wi)? * env.geometry.effective_length_m() / 2.0;
    Ok((envelope * sinc(x)).powi(2))
}

/// Joint spectral intensity on a wavelength grid, normalized to max = 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsiGrid {
    /// Signal-axis cell centers, nm, strictly increasing.
    pub signal_nm: Vec<f64>,
    /// Idler-axis cell centers, nm, strictly increasing.
    pub idler_nm: Vec<f64>,
    /// Row-major intensity, `intensity[j * idler_nm.len() + k]`.
    pub intensity: Vec<f64>,
    pub pressure_bar: f64,
    /// Maximum cell value before normalization.
    pub normalization: f64,
}

impl JsiGrid {
    pub fn value(&self, j: usize, k: usize) -> f64 {
        self.intensity[j * self.idler_nm.len() + k]
    }

    pub fn signal_cell_nm(&self) -> f64 {
        self.signal_nm[1] - self.signal_nm[0]
    }

    pub fn idler_cell_nm(&self) -> f64 {
        self.idler_nm[1] - self.idler_nm[0]
    }

    /// Index of the global maximum, `(signal, idler)`.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = (0, 0);
        let mut vmax = f64::MIN;
        let n_i = self.idler_nm.len();
        for (idx, &v) in self.intensity.iter().enumerate() {
            if v > vmax {
                vmax = v;
                best = (idx / n_i, idx % n_i);
            }
        }
        best
    }
}

/// Exact double antiderivative of the envelope intensity
/// `exp(-u^2 / sigma^2)`; differences over cell corners give the cell mass.
fn envelope_mass_antiderivative(u: f64, sigma: f64) -> f64 {
    let s = sigma;
    (PI.sqrt() * s / 2.0) * u * libm::erfc(-u / s) + (s * s / 2.0) * (-(u / s) * (u / s)).exp()
}

/// Builds the cell-averaged JSI grid. Windows must stay clear of the
/// resonance pole guards; `n >= 64` points per axis.
pub fn jsi_grid(
    env: &OpticalEnvironment,
    pump: &PumpSpec,
    params: &NonlinearParams,
    signal_window_nm: (f64, f64),
    idler_window_nm: (f64, f64),
    n: usize,
) -> Result<JsiGrid> {
    if n < 64 {
        return Err(Error::InvalidArgument(format!(
            "grid must have at least 64 points per axis, got {n}"
        )));
    }
    for (name, (lo, hi)) in [("signal", signal_window_nm), ("idler", idler_window_nm)] {
        if !(hi > lo) {
            return Err(Error::InvalidArgument(format!("empty {name} window")));
        }
        for g in env.pole_guard_bands(env.numerics.max_resonance_order)? {
            if g.lambda_high_nm > lo && g.lambda_low_nm < hi {
                return Err(Error::InvalidArgument(format!(
                    "{name} window [{lo}, {hi}] nm intersects the order-{} resonance guard \
                     [{:.2}, {:.2}] nm",
                    g.order, g.lambda_low_nm, g.lambda_high_nm
                )));
            }
        }
    }

    let axis = |(lo, hi): (f64, f64)| -> Vec<f64> {
        (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n as f64 - 1.0))
            .collect()
    };
    let signal_nm = axis(signal_window_nm);
    let idler_nm = axis(idler_window_nm);
    let ds = signal_nm[1] - signal_nm[0];
    let di = idler_nm[1] - idler_nm[0];
    let wp = omega_from_lambda_nm(pump.center_wavelength_nm);
    let sigma = pair_sigma(pump);
    let half_l = env.geometry.effective_length_m() / 2.0;

    // cell edges in angular frequency (omega decreases with wavelength)
    let om = omega_from_lambda_nm;
    let ws_lo: Vec<f64> = signal_nm.iter().map(|l| om(l + ds / 2.0)).collect();
    let ws_hi: Vec<f64> = signal_nm.iter().map(|l| om(l - ds / 2.0)).collect();
    let wi_lo: Vec<f64> = idler_nm.iter().map(|l| om(l + di / 2.0)).collect();
    let wi_hi: Vec<f64> = idler_nm.iter().map(|l| om(l - di / 2.0)).collect();

    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|j| -> Result<Vec<f64>> {
            let mut row = vec![0.0; n];
            for k in 0..n {
                let u11 = ws_lo[j] + wi_lo[k] - 2.0 * wp;
                let u22 = ws_hi[j] + wi_hi[k] - 2.0 * wp;
                let u12 = ws_lo[j] + wi_hi[k] - 2.0 * wp;
                let u21 = ws_hi[j] + wi_lo[k] - 2.0 * wp;
                let area = (ws_hi[j] - ws_lo[j]) * (wi_hi[k] - wi_lo[k]);
                let f3 = |u: f64| envelope_mass_antiderivative(u, sigma);
                let mass = ((f3(u22) - f3(u12) - f3(u21) + f3(u11)) / area).max(0.0);
                if mass == 0.0 {
                    continue;
                }
                // sinc on the energy line if it crosses the cell, else at center
                let (ws_eval, wi_eval) = if u11 < 0.0 && u22 > 0.0 {
                    let a = wi_lo[k].max(2.0 * wp - ws_hi[j]);
                    let b = wi_hi[k].min(2.0 * wp - ws_lo[j]);
                    let wi_m = (a + b) / 2.0;
                    (2.0 * wp - wi_m, wi_m)
                } else {
                    ((ws_lo[j] + ws_hi[j]) / 2.0, (wi_lo[k] + wi_hi[k]) / 2.0)
                };
                let x = mismatch_free(env, pump, params, ws_eval, wi_eval)? * half_l;
                row[k] = sinc(x).powi(2) * mass;
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut intensity = Vec::with_capacity(n * n);
    for row in rows {
        intensity.extend(row);
    }
    let vmax = intensity.iter().cloned().fold(f64::MIN, f64::max);
    if !(vmax > 0.0) {
        return Err(Error::UndefinedStatistic(
            "joint spectral intensity vanished on the whole grid".into(),
        ));
    }
    for v in &mut intensity {
        *v /= vmax;
    }
    Ok(JsiGrid {
        signal_nm,
        idler_nm,
        intensity,
        pressure_bar: env.pressure_bar,
        normalization: vmax,
    })
}

/// A one-dimensional spectrum with its full width at half maximum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub axis_nm: Vec<f64>,
    pub values: Vec<f64>,
    pub fwhm_nm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarginalAxis {
    Signal,
    Idler,
}

/// FWHM by linear interpolation of the half-maximum crossings.
pub fn fwhm_nm(axis: &[f64], values: &[f64]) -> Result<f64> {
    let vmax = values.iter().cloned().fold(f64::MIN, f64::max);
    if !(vmax > 0.0) {
        return Err(Error::UndefinedStatistic("all-zero spectrum".into()));
    }
    let half = vmax / 2.0;
    let above: Vec<usize> = (0..values.len()).filter(|&i| values[i] >= half).collect();
    let (i0, i1) = (*above.first().unwrap(), *above.last().unwrap());
    let left = if i0 > 0 {
        let (x0, x1) = (axis[i0 - 1], axis[i0]);
        let (y0, y1) = (values[i0 - 1], values[i0]);
        x0 + (x1 - x0) * (half - y0) / (y1 - y0)
    } else {
        axis[0]
    };
    let right = if i1 + 1 < values.len() {
        let (x0, x1) = (axis[i1], axis[i1 + 1]);
        let (y0, y1) = (values[i1], values[i1 + 1]);
        x0 + (x1 - x0) * (half - y0) / (y1 - y0)
    } else {
        axis[axis.len() - 1]
    };
    Ok(right - left)
}

/// Projection of the grid onto one axis.
pub fn marginal(grid: &JsiGrid, axis: MarginalAxis) -> Result<Spectrum> {
    let n_s = grid.signal_nm.len();
    let n_i = grid.idler_nm.len();
    let (axis_nm, values) = match axis {
        MarginalAxis::Signal => {
            let vals: Vec<f64> = (0..n_s)
                .map(|j| (0..n_i).map(|k| grid.value(j, k)).sum())
                .collect();
            (grid.signal_nm.clone(), vals)
        }
        MarginalAxis::Idler => {
            let vals: Vec<f64> = (0..n_i)
                .map(|k| (0..n_s).map(|j| grid.value(j, k)).sum())
                .collect();
            (grid.idler_nm.clone(), vals)
        }
    };
    let fwhm = fwhm_nm(&axis_nm, &values)?;
    Ok(Spectrum {
        axis_nm,
        values,
        fwhm_nm: fwhm,
    })
}

/// Idler spectrum conditioned on a signal-side filter.
pub fn conditional_spectrum(grid: &JsiGrid, signal_filter: &SpectralFilter) -> Result<Spectrum> {
    signal_filter.validate()?;
    let n_s = grid.signal_nm.len();
    let n_i = grid.idler_nm.len();
    let cell = grid.signal_cell_nm();
    let weights: Vec<f64> = grid
        .signal_nm
        .iter()
        .map(|&l| signal_filter.cell_weight(l, cell))
        .collect();
    let values: Vec<f64> = (0..n_i)
        .map(|k| (0..n_s).map(|j| weights[j] * grid.value(j, k)).sum())
        .collect();
    let fwhm = fwhm_nm(&grid.idler_nm, &values)?;
    Ok(Spectrum {
        axis_nm: grid.idler_nm.clone(),
        values,
        fwhm_nm: fwhm,
    })
}

/// Normalized coincidence and singles integrals versus idler bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilteredRatePoint {
    pub bandwidth_nm: f64,
    pub coincidence_norm: f64,
    pub singles_norm: f64,
}

/// Coincidences: JSI integrated over (signal filter) x (idler filter of
/// width B centered at `idler_center_nm`). Singles: the unconditional idler
/// marginal over the same idler filter. Both normalized to their values at
/// the largest bandwidth; output sorted by ascending bandwidth.
pub fn filtered_rates(
    grid: &JsiGrid,
    signal_filter: &SpectralFilter,
    idler_center_nm: f64,
    idler_bandwidths_nm: &[f64],
) -> Result<Vec<FilteredRatePoint>> {
    signal_filter.validate()?;
    if idler_bandwidths_nm.is_empty() {
        return Err(Error::InvalidArgument("no idler bandwidths given".into()));
    }
    if idler_bandwidths_nm.iter().any(|&b| b <= 0.0) {
        return Err(Error::InvalidArgument("bandwidths must be > 0".into()));
    }
    let mut bands = idler_bandwidths_nm.to_vec();
    bands.sort_by(|a, b| a.total_cmp(b));

    let conditional = conditional_spectrum(grid, signal_filter)?;
    let idler_marginal = marginal(grid, MarginalAxis::Idler)?;
    let cell = grid.idler_cell_nm();

    let integrate = |spectrum: &[f64], bandwidth: f64| -> f64 {
        let filter = SpectralFilter::rectangular(idler_center_nm, bandwidth);
        grid.idler_nm
            .iter()
            .zip(spectrum)
            .map(|(&l, &v)| filter.cell_weight(l, cell) * v)
            .sum()
    };

    let b_max = *bands.last().unwrap();
    let coinc_max = integrate(&conditional.values, b_max);
    let singles_max = integrate(&idler_marginal.values, b_max);
    if !(coinc_max > 0.0 && singles_max > 0.0) {
        return Err(Error::UndefinedStatistic(
            "zero rate at the maximal bandwidth".into(),
        ));
    }
    Ok(bands
        .into_iter()
        .map(|b| FilteredRatePoint {
            bandwidth_nm: b,
            coincidence_norm: integrate(&conditional.values, b) / coinc_max,
            singles_norm: integrate(&idler_marginal.values, b) / singles_max,
        })
        .collect())
}
