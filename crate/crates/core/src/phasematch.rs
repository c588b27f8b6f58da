//! Four-wave-mixing phase matching: energy and momentum conservation solved
//! for the signal/idler pair as a function of gas pressure.
//!
//! Momentum conservation reads `2 beta_p = beta_s + beta_i + 2 gamma P_peak`;
//! energy conservation pins the idler to the signal through
//! `1/lambda_i = 2/lambda_p - 1/lambda_s`. The solver scans the signal window
//! for sign changes of the mismatch after excising the resonance pole guards
//! (both the signal's own guards and their images through energy
//! conservation on the idler side, which otherwise masquerade as roots).

use serde::{Deserialize, Serialize};

use crate::fiber::{OpticalEnvironment, Variant};
use crate::solve;
use crate::{Error, Result, C_LIGHT};

use std::f64::consts::PI;

/// Pump laser parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpSpec {
    pub center_wavelength_nm: f64,
    pub repetition_rate_mhz: f64,
    pub pulse_duration_fwhm_ps: f64,
    pub average_power_mw: f64,
    pub pulse_shape: PulseShape,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PulseShape {
    Gaussian,
}

impl PumpSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("center_wavelength_nm", self.center_wavelength_nm),
            ("repetition_rate_mhz", self.repetition_rate_mhz),
            ("pulse_duration_fwhm_ps", self.pulse_duration_fwhm_ps),
        ] {
            if v <= 0.0 {
                return Err(Error::InvalidArgument(format!("{name} must be > 0")));
            }
        }
        if self.average_power_mw < 0.0 {
            return Err(Error::InvalidArgument("average power must be >= 0".into()));
        }
        Ok(())
    }

    pub fn repetition_rate_hz(&self) -> f64 {
        self.repetition_rate_mhz * 1e6
    }

    pub fn pulse_period_ps(&self) -> f64 {
        1e12 / self.repetition_rate_hz()
    }

    /// Peak power from the average power, repetition rate and duration.
    /// For a Gaussian pulse the shape factor is `2 sqrt(ln 2 / pi)`.
    pub fn peak_power_w(&self) -> f64 {
        let shape_factor = match self.pulse_shape {
            PulseShape::Gaussian => 2.0 * (std::f64::consts::LN_2 / PI).sqrt(),
        };
        shape_factor * (self.average_power_mw * 1e-3)
            / (self.repetition_rate_hz() * self.pulse_duration_fwhm_ps * 1e-12)
    }
}

/// Kerr nonlinearity of the gas-filled fiber.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearParams {
    /// n2 at the reference pressure, m^2/W.
    pub n2_reference_m2_per_w: f64,
    pub n2_reference_pressure_bar: f64,
    /// A_eff = factor * pi * R^2.
    pub effective_area_factor: f64,
    /// Whether the 2 gamma P term enters the mismatch.
    pub include_self_phase_term: bool,
}

/// Nonlinear coefficient `gamma = 2 pi n2(P) / (lambda_p A_eff)`, 1/(W m).
/// n2 scales linearly with pressure; gamma vanishes in vacuum.
pub fn nonlinear_gamma(
    params: &NonlinearParams,
    env: &OpticalEnvironment,
    lambda_p_nm: f64,
) -> f64 {
    let n2 = params.n2_reference_m2_per_w * env.pressure_bar / params.n2_reference_pressure_bar;
    let r = env.geometry.core_radius_m();
    let a_eff = params.effective_area_factor * PI * r * r;
    2.0 * PI * n2 / (lambda_p_nm * 1e-9 * a_eff)
}

/// Idler wavelength conjugate to `lambda_s` under energy conservation:
/// `1/lambda_i = 2/lambda_p - 1/lambda_s`.
pub fn conjugate_idler(lambda_p_nm: f64, lambda_s_nm: f64) -> Result<f64> {
    if lambda_p_nm <= 0.0 || lambda_s_nm <= 0.0 {
        return Err(Error::InvalidArgument(
            "wavelengths must be positive".into(),
        ));
    }
    let inv = 2.0 / lambda_p_nm - 1.0 / lambda_s_nm;
    if inv <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "no positive idler frequency for lambda_s = {lambda_s_nm} nm at pump {lambda_p_nm} nm"
        )));
    }
    Ok(1.0 / inv)
}

/// A solved phase-matching point at one pressure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseMatchPoint {
    pub pressure_bar: f64,
    pub lambda_s_nm: f64,
    pub lambda_i_nm: f64,
    pub residual_rad_per_m: f64,
    pub variant: Variant,
}

impl PhaseMatchPoint {
    /// Energy-conservation residual `|1/ls + 1/li - 2/lp|` in 1/nm.
    pub fn energy_residual_per_nm(&self, lambda_p_nm: f64) -> f64 {
        (1.0 / self.lambda_s_nm + 1.0 / self.lambda_i_nm - 2.0 / lambda_p_nm).abs()
    }

    /// Signal-minus-idler separation, expressed as ordinary frequency in THz.
    pub fn separation_thz(&self) -> f64 {
        C_LIGHT * (1.0 / (self.lambda_s_nm * 1e-9) - 1.0 / (self.lambda_i_nm * 1e-9)) / 1e12
    }
}

/// Phase mismatch `2 beta_p - beta_s - beta_i - 2 gamma P_peak` at a signal
/// wavelength, rad/m. The idler is the energy-conservation conjugate. A leg
/// inside a resonance guard is reported with the offending leg name.
pub fn mismatch(
    env: &OpticalEnvironment,
    pump: &PumpSpec,
    params: &NonlinearParams,
    lambda_s_nm: f64,
    variant: Variant,
) -> Result<f64> {
    let lambda_p = pump.center_wavelength_nm;
    let lambda_i = conjugate_idler(lambda_p, lambda_s_nm)?;
    let tag = |leg: &'static str, lam: f64| {
        move |e: Error| match e {
            Error::ResonancePole { order, .. } => Error::LegOnResonance {
                leg,
                lambda_nm: lam,
                order,
            },
            other => other,
        }
    };
    let beta_p = env
        .propagation_beta(lambda_p, variant)
        .map_err(tag("pump", lambda_p))?;
    let beta_s = env
        .propagation_beta(lambda_s_nm, variant)
        .map_err(tag("signal", lambda_s_nm))?;
    let beta_i = env
        .propagation_beta(lambda_i, variant)
        .map_err(tag("idler", lambda_i))?;
    let nonlinear = if params.include_self_phase_term {
        2.0 * nonlinear_gamma(params, env, lambda_p) * pump.peak_power_w()
    } else {
        0.0
    };
    Ok(2.0 * beta_p - beta_s - beta_i - nonlinear)
}

/// Signal sub-intervals of `window` that survive excision of the resonance
/// pole guards, both directly and through their idler-side images.
fn clear_segments(
    env: &OpticalEnvironment,
    pump: &PumpSpec,
    window: (f64, f64),
    variant: Variant,
) -> Result<Vec<(f64, f64)>> {
    let mut exclusions: Vec<(f64, f64)> = Vec::new();
    if variant == Variant::Resonant {
        let guards = env.pole_guard_bands(env.numerics.max_resonance_order)?;
        for g in &guards {
            exclusions.push((g.lambda_low_nm, g.lambda_high_nm));
            // idler-side image: conjugation reverses interval orientation
            let lo = conjugate_idler(pump.center_wavelength_nm, g.lambda_high_nm);
            let hi = conjugate_idler(pump.center_wavelength_nm, g.lambda_low_nm);
            if let (Ok(lo), Ok(hi)) = (lo, hi) {
                if lo < hi {
                    exclusions.push((lo, hi));
                }
            }
        }
    }
    exclusions.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut segments = vec![window];
    for (elo, ehi) in exclusions {
        let mut next = Vec::new();
        for (lo, hi) in segments {
            if ehi <= lo || elo >= hi {
                next.push((lo, hi));
            } else {
                if elo > lo {
                    next.push((lo, elo));
                }
                if ehi < hi {
                    next.push((ehi, hi));
                }
            }
        }
        segments = next;
    }
    Ok(segments)
}

/// Solves the phase-matching condition for every root in the signal window.
/// Roots are returned sorted by descending signal wavelength; the first
/// entry is the branch closest to the pump (the tuning-curve branch). More
/// than one entry flags a multi-root window.
pub fn solve_tuning_point(
    env: &OpticalEnvironment,
    pump: &PumpSpec,
    params: &NonlinearParams,
    window: (f64, f64),
    variant: Variant,
) -> Result<Vec<PhaseMatchPoint>> {
    pump.validate()?;
    let (lo, hi) = window;
    if !(hi > lo) {
        return Err(Error::InvalidArgument(format!(
            "empty signal window [{lo}, {hi}]"
        )));
    }
    let f = |lam: f64| mismatch(env, pump, params, lam, variant);
    let mut roots: Vec<f64> = Vec::new();
    let total = hi - lo;
    for (slo, shi) in clear_segments(env, pump, window, variant)? {
        let n = ((env.numerics.scan_points as f64 * (shi - slo) / total) as usize).max(32);
        for (a, b) in solve::sign_change_brackets(f, slo, shi, n) {
            let root = solve::brent(
                f,
                a,
                b,
                env.numerics.root_tol_nm,
                env.numerics.max_iterations,
            )?;
            roots.push(root);
        }
    }
    if roots.is_empty() {
        return Err(Error::NoPhaseMatching {
            lo,
            hi,
            pressure_bar: env.pressure_bar,
        });
    }
    roots.sort_by(|a, b| b.total_cmp(a));
    roots.dedup_by(|a, b| (*a - *b).abs() < 10.0 * env.numerics.root_tol_nm);
    roots
        .into_iter()
        .map(|lambda_s| {
            let lambda_i = conjugate_idler(pump.center_wavelength_nm, lambda_s)?;
            Ok(PhaseMatchPoint {
                pressure_bar: env.pressure_bar,
                lambda_s_nm: lambda_s,
                lambda_i_nm: lambda_i,
                residual_rad_per_m: f(lambda_s)?,
                variant,
            })
        })
        .collect()
}

/// A tuning curve: one primary phase-match point per pressure, with
/// pressures that failed to phase-match recorded as gaps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningCurve {
    pub points: Vec<PhaseMatchPoint>,
    pub gaps: Vec<f64>,
    pub variant: Variant,
}

/// Solves the primary branch on a pressure grid.
pub fn tuning_curve(
    env_template: &OpticalEnvironment,
    pump: &PumpSpec,
    params: &NonlinearParams,
    pressure_range_bar: (f64, f64),
    pressure_step_bar: f64,
    variant: Variant,
) -> Result<TuningCurve> {
    let (pmin, pmax) = pressure_range_bar;
    if pressure_step_bar <= 0.0 {
        return Err(Error::InvalidArgument("pressure step must be > 0".into()));
    }
    let window = env_template.numerics.signal_search_window_nm;
    let mut points = Vec::new();
    let mut gaps = Vec::new();
    let mut k = 0u32;
    loop {
        let p = pmin + pressure_step_bar * k as f64;
        if p > pmax + pressure_step_bar * 1e-9 {
            break;
        }
        let env = env_template.at_pressure(p);
        match solve_tuning_point(&env, pump, params, window, variant) {
            Ok(pts) => points.push(pts[0]),
            Err(Error::NoPhaseMatching { .. }) => gaps.push(p),
            Err(e) => return Err(e),
        }
        k += 1;
    }
    Ok(TuningCurve {
        points,
        gaps,
        variant,
    })
}

/// Least-squares tuning rate of the curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuningRate {
    /// Slope of the per-photon detuning (half the signal-idler separation)
    /// versus pressure, THz/bar.
    pub slope_thz_per_bar: f64,
    /// Total detuning span over the curve, THz.
    pub span_thz: f64,
}

pub fn tuning_rate(curve: &TuningCurve) -> Result<TuningRate> {
    if curve.points.is_empty() {
        return Err(Error::InvalidArgument("empty tuning curve".into()));
    }
    let detuning: Vec<f64> = curve
        .points
        .iter()
        .map(|p| p.separation_thz() / 2.0)
        .collect();
    let pressures: Vec<f64> = curve.points.iter().map(|p| p.pressure_bar).collect();
    let n = pressures.len() as f64;
    let p_mean = pressures.iter().sum::<f64>() / n;
    let d_mean = detuning.iter().sum::<f64>() / n;
    let sxx: f64 = pressures.iter().map(|p| (p - p_mean).powi(2)).sum();
    let sxy: f64 = pressures
        .iter()
        .zip(&detuning)
        .map(|(p, d)| (p - p_mean) * (d - d_mean))
        .sum();
    let slope = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    let span = detuning.last().unwrap() - detuning.first().unwrap();
    Ok(TuningRate {
        slope_thz_per_bar: slope,
        span_thz: span,
    })
}

#[cfg(test)]
pub(crate) use tests::{nonlinear as test_nonlinear, pump as test_pump};
