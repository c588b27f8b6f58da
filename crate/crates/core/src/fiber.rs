//! Resonance-aware LP01 effective index of the gas-filled single-ring PCF.
//!
//! The effective index follows the extended Marcatili capillary model with an
//! anti-resonant correction from the thin silica tubes:
//!
//! ```text
//! n_eff = n_g - j01^2 / (2 k0^2 n_g R^2)
//!             - j01^2 / (k0^3 n_g^2 R^3) * cot(psi) / sqrt(eps - 1) * (eps + 1) / 2
//! ```
//!
//! with `psi = k0 t sqrt(n_si^2 - n_g^2)` and `eps = n_si^2 / n_g^2`. The cot
//! term diverges at `psi = m pi`; a configurable guard refuses evaluation
//! close to those poles. The `Baseline` variant keeps only the first two
//! terms (plain capillary, no tube resonances).

use serde::{Deserialize, Serialize};

use crate::materials::{GasModel, SilicaModel};
use crate::solve;
use crate::{lambda_nm_from_omega, omega_from_lambda_nm, Error, Result, BESSEL_J01};

use std::f64::consts::PI;

/// Which terms of the effective-index model to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Full model including the tube-resonance term.
    Resonant,
    /// Capillary-only model, ignoring the resonances.
    Baseline,
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Variant::Resonant => write!(f, "resonant"),
            Variant::Baseline => write!(f, "baseline"),
        }
    }
}

/// Fiber cross-section and length parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberGeometry {
    /// Effective LP01 model radius, um.
    pub core_radius_um: f64,
    /// Nominal tube wall thickness, nm (the model's resonance positions).
    pub tube_thickness_nm: f64,
    /// Thickness spread along the fiber, nm (bands and transmittance only).
    pub tube_thickness_range_nm: (f64, f64),
    /// Number of cladding tubes (documentation only).
    pub tube_count: u32,
    /// Physical fiber length, cm.
    pub fiber_length_cm: f64,
    /// Length that effectively contributes detected pairs, cm.
    pub effective_length_cm: f64,
}

impl FiberGeometry {
    pub fn validate(&self) -> Result<()> {
        let (tmin, tmax) = self.tube_thickness_range_nm;
        if self.core_radius_um <= 0.0 {
            return Err(Error::InvalidArgument("core radius must be > 0".into()));
        }
        if !(tmin > 0.0 && tmin <= self.tube_thickness_nm && self.tube_thickness_nm <= tmax) {
            return Err(Error::InvalidArgument(format!(
                "tube thickness {} nm outside its range [{tmin}, {tmax}] nm",
                self.tube_thickness_nm
            )));
        }
        if !(self.effective_length_cm > 0.0 && self.effective_length_cm <= self.fiber_length_cm) {
            return Err(Error::InvalidArgument(
                "effective length must satisfy 0 < L_eff <= L".into(),
            ));
        }
        Ok(())
    }

    pub fn core_radius_m(&self) -> f64 {
        self.core_radius_um * 1e-6
    }

    pub fn effective_length_m(&self) -> f64 {
        self.effective_length_cm * 1e-2
    }
}

/// Numeric tolerances and guards shared by the dispersion machinery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    /// Pole guard: refuse evaluation where |psi mod pi| is below this, rad.
    pub resonance_guard_rad: f64,
    /// Widening applied to thickness-range resonance bands, nm.
    pub band_margin_nm: f64,
    /// Initial central-difference step for beta_2, THz.
    pub gvd_step_thz: f64,
    /// Relative change threshold for step refinement of beta_2.
    pub gvd_refine_rel_tol: f64,
    /// Root tolerance for wavelength solves, nm.
    pub root_tol_nm: f64,
    /// Fixed-point tolerance for resonance wavelengths, nm.
    pub fixed_point_tol_nm: f64,
    /// Iteration cap for iterative schemes.
    pub max_iterations: u32,
    /// Grid points used when scanning for sign changes.
    pub scan_points: usize,
    /// Highest tube-resonance order considered.
    pub max_resonance_order: u32,
    /// Signal-wavelength search window for the phase-matching solver, nm.
    pub signal_search_window_nm: (f64, f64),
    /// Bracket used by the ZDW search, nm.
    pub zdw_bracket_nm: (f64, f64),
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            resonance_guard_rad: 0.05,
            band_margin_nm: 2.0,
            gvd_step_thz: 0.2,
            gvd_refine_rel_tol: 1e-3,
            root_tol_nm: 0.01,
            fixed_point_tol_nm: 1e-7,
            max_iterations: 200,
            scan_points: 1600,
            max_resonance_order: 4,
            signal_search_window_nm: (231.0, 396.0),
            zdw_bracket_nm: (345.0, 600.0),
        }
    }
}

/// A non-guiding spectral band caused by a tube resonance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonanceBand {
    pub order: u32,
    pub lambda_low_nm: f64,
    pub lambda_high_nm: f64,
}

impl ResonanceBand {
    pub fn contains(&self, lambda_nm: f64) -> bool {
        lambda_nm >= self.lambda_low_nm && lambda_nm <= self.lambda_high_nm
    }
}

/// Result of a group-velocity-dispersion evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gvd {
    pub beta2_fs2_per_mm: f64,
    /// Step actually used after refinement, THz.
    pub step_thz: f64,
}

/// Phenomenological transmittance parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransmittanceParams {
    /// Baseline capillary attenuation: `alpha0 = loss_calibration * lambda^2 / R^3`.
    pub loss_calibration: f64,
    /// Depth of each Lorentzian resonance notch, in (0, 1].
    pub notch_depth: f64,
    /// Half width at half maximum of each notch, nm.
    pub notch_hwhm_nm: f64,
    /// Number of thickness samples spread over the thickness range.
    pub thickness_samples: u32,
    /// Fiber length used for the transmittance, cm.
    pub characterization_length_cm: f64,
}

impl Default for TransmittanceParams {
    fn default() -> Self {
        TransmittanceParams {
            loss_calibration: 1e-3,
            notch_depth: 0.9,
            notch_hwhm_nm: 5.0,
            thickness_samples: 9,
            characterization_length_cm: 30.0,
        }
    }
}

/// A gas-filled fiber at a fixed pressure and temperature. Immutable; all
/// operations are pure functions, safe to call from parallel workers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpticalEnvironment {
    pub geometry: FiberGeometry,
    pub gas: GasModel,
    pub silica: SilicaModel,
    pub pressure_bar: f64,
    pub temperature_k: f64,
    pub numerics: Numerics,
}

impl OpticalEnvironment {
    /// Same fiber and gas at a different pressure.
    pub fn at_pressure(&self, pressure_bar: f64) -> OpticalEnvironment {
        OpticalEnvironment {
            pressure_bar,
            ..self.clone()
        }
    }

    pub fn gas_index(&self, lambda_nm: f64) -> Result<f64> {
        self.gas
            .index(lambda_nm, self.pressure_bar, self.temperature_k)
    }

    /// `psi = k0 t sqrt(n_si^2 - n_g^2)` for a given thickness.
    fn psi_for_thickness(&self, lambda_nm: f64, thickness_nm: f64) -> Result<f64> {
        let ng = self.gas_index(lambda_nm)?;
        let ns = self.silica.index(lambda_nm)?;
        let k0 = 2.0 * PI / (lambda_nm * 1e-9);
        Ok(k0 * thickness_nm * 1e-9 * (ns * ns - ng * ng).sqrt())
    }

    pub fn psi(&self, lambda_nm: f64) -> Result<f64> {
        self.psi_for_thickness(lambda_nm, self.geometry.tube_thickness_nm)
    }

    /// The cot resonance term of the effective-index model (the quantity
    /// subtracted from the baseline index). Fails inside the pole guard.
    pub fn resonance_term(&self, lambda_nm: f64) -> Result<f64> {
        let ng = self.gas_index(lambda_nm)?;
        let ns = self.silica.index(lambda_nm)?;
        let k0 = 2.0 * PI / (lambda_nm * 1e-9);
        let psi = k0 * self.geometry.tube_thickness_nm * 1e-9 * (ns * ns - ng * ng).sqrt();
        let frac = psi.rem_euclid(PI);
        let distance = frac.min(PI - frac);
        let guard = self.numerics.resonance_guard_rad;
        if distance < guard {
            return Err(Error::ResonancePole {
                lambda_nm,
                order: (psi / PI).round() as u32,
                distance_rad: distance,
                guard_rad: guard,
            });
        }
        let r = self.geometry.core_radius_m();
        let eps = ns * ns / (ng * ng);
        let cot = psi.cos() / psi.sin();
        Ok(
            BESSEL_J01 * BESSEL_J01 / (k0.powi(3) * ng * ng * r.powi(3)) * cot / (eps - 1.0).sqrt()
                * (eps + 1.0)
                / 2.0,
        )
    }

    /// LP01 effective index.
    pub fn effective_index(&self, lambda_nm: f64, variant: Variant) -> Result<f64> {
        let ng = self.gas_index(lambda_nm)?;
        let k0 = 2.0 * PI / (lambda_nm * 1e-9);
        let r = self.geometry.core_radius_m();
        let base = ng - BESSEL_J01 * BESSEL_J01 / (2.0 * k0 * k0 * ng * r * r);
        match variant {
            Variant::Baseline => {
                // touch the silica window so both variants share domain checks
                self.silica.index(lambda_nm)?;
                Ok(base)
            }
            Variant::Resonant => Ok(base - self.resonance_term(lambda_nm)?),
        }
    }

    /// Propagation constant `beta = (2 pi / lambda) n_eff`, rad/m.
    pub fn propagation_beta(&self, lambda_nm: f64, variant: Variant) -> Result<f64> {
        Ok(2.0 * PI / (lambda_nm * 1e-9) * self.effective_index(lambda_nm, variant)?)
    }

    fn beta_at_omega(&self, omega: f64, variant: Variant) -> Result<f64> {
        self.propagation_beta(lambda_nm_from_omega(omega), variant)
    }

    /// Second derivative of `beta` with respect to angular frequency by
    /// central differences, refined until the relative change drops below
    /// the configured threshold. Returns fs^2/mm and the step used.
    pub fn group_velocity_dispersion(&self, lambda_nm: f64, variant: Variant) -> Result<Gvd> {
        let w0 = omega_from_lambda_nm(lambda_nm);
        let mut step_thz = self.numerics.gvd_step_thz;
        let eval = |step: f64| -> Result<f64> {
            let h = 2.0 * PI * step * 1e12;
            let stencil = |w: f64| {
                self.beta_at_omega(w, variant).map_err(|e| match e {
                    Error::ResonancePole { order, .. } => Error::StencilOnResonance {
                        lambda_nm,
                        step_thz: step,
                        order,
                    },
                    other => other,
                })
            };
            let b_plus = stencil(w0 + h)?;
            let b_zero = stencil(w0)?;
            let b_minus = stencil(w0 - h)?;
            Ok((b_plus - 2.0 * b_zero + b_minus) / (h * h))
        };
        // Refine at most twice: the stencil is second-order accurate, and
        // finer steps run into cancellation noise of the near-unity index
        // (~1e-4 fs^2/mm at 0.05 THz). The absolute floor keeps the loop
        // from chasing a relative criterion where beta2 itself crosses zero.
        const ABS_FLOOR: f64 = 1e-31; // s^2/m, 1e-4 fs^2/mm
        let min_step_thz = self.numerics.gvd_step_thz / 4.0;
        let mut beta2 = eval(step_thz)?;
        while step_thz / 2.0 >= min_step_thz * (1.0 - 1e-12) {
            let refined = eval(step_thz / 2.0)?;
            let delta = (refined - beta2).abs();
            beta2 = refined;
            step_thz /= 2.0;
            if delta <= (self.numerics.gvd_refine_rel_tol * refined.abs()).max(ABS_FLOOR) {
                break;
            }
        }
        Ok(Gvd {
            beta2_fs2_per_mm: beta2 * 1e27,
            step_thz,
        })
    }

    /// Zero-dispersion wavelength inside `bracket`.
    pub fn find_zdw(&self, bracket: (f64, f64), variant: Variant) -> Result<f64> {
        let (lo, hi) = bracket;
        let f = |lam: f64| {
            self.group_velocity_dispersion(lam, variant)
                .map(|g| g.beta2_fs2_per_mm)
        };
        let flo = f(lo)?;
        let fhi = f(hi)?;
        if flo == 0.0 {
            return Ok(lo);
        }
        if fhi == 0.0 {
            return Ok(hi);
        }
        if flo * fhi > 0.0 {
            return Err(Error::NoRoot {
                quantity: "beta2".into(),
                lo,
                hi,
            });
        }
        solve::brent(
            f,
            lo,
            hi,
            self.numerics.root_tol_nm,
            self.numerics.max_iterations,
        )
    }

    /// Solves `psi(lambda) = target` by fixed-point iteration.
    fn solve_psi_equals(&self, target: f64, thickness_nm: f64) -> Result<f64> {
        // seed from a flat silica index of 1.45 in vacuum
        let mut lam = 2.0 * PI * thickness_nm * (1.45f64 * 1.45 - 1.0).sqrt() / target;
        let tol = self.numerics.fixed_point_tol_nm;
        for _ in 0..self.numerics.max_iterations {
            let ng = self.gas_index(lam)?;
            let ns = self.silica.index(lam)?;
            let next = 2.0 * PI * thickness_nm * (ns * ns - ng * ng).sqrt() / target;
            if (next - lam).abs() < tol {
                return Ok(next);
            }
            lam = next;
        }
        Err(Error::NonConvergence {
            what: format!("resonance fixed point (psi = {target:.4})"),
            iterations: self.numerics.max_iterations,
            last: lam,
        })
    }

    /// Resonance wavelength of order `m` for an explicit tube thickness.
    pub fn resonance_wavelength_for_thickness(&self, m: u32, thickness_nm: f64) -> Result<f64> {
        self.solve_psi_equals(m as f64 * PI, thickness_nm)
    }

    /// Resonance wavelengths `psi = m pi` for `m = 1..=m_max` at the nominal
    /// thickness. Orders whose solution leaves the material windows are
    /// dropped.
    pub fn resonance_wavelengths(&self, m_max: u32) -> Result<Vec<(u32, f64)>> {
        if m_max < 1 {
            return Err(Error::InvalidArgument("m_max must be >= 1".into()));
        }
        let mut out = Vec::new();
        for m in 1..=m_max {
            match self.resonance_wavelength_for_thickness(m, self.geometry.tube_thickness_nm) {
                Ok(lam) => out.push((m, lam)),
                Err(Error::OutOfWindow { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
        Ok(out)
    }

    /// Non-guiding bands from the tube-thickness spread, widened by the
    /// configured margin.
    pub fn resonance_bands(&self, m_max: u32) -> Result<Vec<ResonanceBand>> {
        let (tmin, tmax) = self.geometry.tube_thickness_range_nm;
        let margin = self.numerics.band_margin_nm;
        let mut out = Vec::new();
        for m in 1..=m_max {
            let lo = self.resonance_wavelength_for_thickness(m, tmin);
            let hi = self.resonance_wavelength_for_thickness(m, tmax);
            match (lo, hi) {
                (Ok(lo), Ok(hi)) => out.push(ResonanceBand {
                    order: m,
                    lambda_low_nm: lo - margin,
                    lambda_high_nm: hi + margin,
                }),
                (Err(Error::OutOfWindow { .. }), _) | (_, Err(Error::OutOfWindow { .. })) => {
                    continue
                }
                (Err(e), _) | (_, Err(e)) => return Err(e),
            }
        }
        Ok(out)
    }

    /// Pole-guard exclusion zones of the nominal-thickness model: wavelength
    /// intervals where `|psi mod pi| < guard`, i.e. where the resonant
    /// variant refuses to evaluate.
    pub fn pole_guard_bands(&self, m_max: u32) -> Result<Vec<ResonanceBand>> {
        let guard = self.numerics.resonance_guard_rad;
        let t = self.geometry.tube_thickness_nm;
        let mut out = Vec::new();
        for m in 1..=m_max {
            // psi decreases with wavelength: the long side is psi = m pi - guard
            let lo = self.solve_psi_equals(m as f64 * PI + guard, t);
            let hi = self.solve_psi_equals(m as f64 * PI - guard, t);
            match (lo, hi) {
                (Ok(lo), Ok(hi)) => out.push(ResonanceBand {
                    order: m,
                    lambda_low_nm: lo,
                    lambda_high_nm: hi,
                }),
                (Err(Error::OutOfWindow { .. }), _) | (_, Err(Error::OutOfWindow { .. })) => {
                    continue
                }
                (Err(e), _) | (_, Err(e)) => return Err(e),
            }
        }
        Ok(out)
    }

    /// Power transmittance after the characterization length: baseline
    /// capillary attenuation times one Lorentzian notch per resonance order
    /// and thickness sample. Only the dip locations are model predictions;
    /// depth and width are phenomenological.
    pub fn transmittance(&self, lambda_nm: f64, params: &TransmittanceParams) -> Result<f64> {
        self.gas_index(lambda_nm)?;
        self.silica.index(lambda_nm)?;
        let r = self.geometry.core_radius_m();
        let length_m = params.characterization_length_cm * 1e-2;
        let alpha0 = params.loss_calibration * (lambda_nm * 1e-9).powi(2) / r.powi(3);
        let mut t_value = (-alpha0 * length_m).exp();
        let (tmin, tmax) = self.geometry.tube_thickness_range_nm;
        let n_samples = params.thickness_samples.max(1);
        let w2 = params.notch_hwhm_nm * params.notch_hwhm_nm;
        for m in 1..=self.numerics.max_resonance_order {
            for i in 0..n_samples {
                let tk = if n_samples == 1 {
                    self.geometry.tube_thickness_nm
                } else {
                    tmin + (tmax - tmin) * i as f64 / (n_samples - 1) as f64
                };
                match self.resonance_wavelength_for_thickness(m, tk) {
                    Ok(lam_m) => {
                        let d = lambda_nm - lam_m;
                        t_value *= 1.0 - params.notch_depth * w2 / (d * d + w2);
                    }
                    Err(Error::OutOfWindow { .. }) => continue,
                    Err(e) => return Err(e),
                }
            }
        }
        Ok(t_value)
    }
}

#[cfg(test)]
pub(crate) use tests::environment as test_environment;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::materials::{test_silica, test_xenon, SellmeierTerm, SilicaModel};
    use proptest::prelude::*;

    pub(crate) fn geometry(radius_um: f64) -> FiberGeometry {
        FiberGeometry {
            core_radius_um: radius_um,
            tube_thickness_nm: 300.0,
            tube_thickness_range_nm: (300.0, 340.0),
            tube_count: 6,
            fiber_length_cm: 65.0,
            effective_length_cm: 3.0,
        }
    }

    pub(crate) fn environment(radius_um: f64, pressure_bar: f64) -> OpticalEnvironment {
        OpticalEnvironment {
            geometry: geometry(radius_um),
            gas: test_xenon(),
            silica: test_silica(),
            pressure_bar,
            temperature_k: 293.0,
            numerics: Numerics::default(),
        }
    }

    #[test]
    fn vacuum_baseline_effective_index_golden() {
        // hand arithmetic of the capillary term at 800 nm, R = 10.25 um
        let env = environment(10.25, 0.0);
        let n = env.effective_index(800.0, Variant::Baseline).unwrap();
        assert!((n - 0.999553755709817).abs() < 1e-12, "n = {n:.15}");
        assert!((1.0 - n - 4.46e-4).abs() < 1e-6);
    }

    #[test]
    fn pole_is_refused_with_order() {
        let env = environment(10.25, 0.0);
        // exactly on the m = 1 resonance
        let lam1 = env.resonance_wavelength_for_thickness(1, 300.0).unwrap();
        match env.effective_index(lam1, Variant::Resonant) {
            Err(Error::ResonancePole { order, .. }) => assert_eq!(order, 1),
            other => panic!("expected pole error, got {other:?}"),
        }
        // baseline variant is untroubled there
        env.effective_index(lam1, Variant::Baseline).unwrap();
    }

    #[test]
    fn variants_agree_midway_between_resonances() {
        let env = environment(10.25, 0.0);
        // psi(430 nm) sits near 1.5 pi, halfway between the m=1 and m=2 poles
        let d = env.effective_index(430.0, Variant::Resonant).unwrap()
            - env.effective_index(430.0, Variant::Baseline).unwrap();
        assert!(d.abs() < 1e-6, "difference {d:.3e}");
    }

    #[test]
    fn resonant_minus_baseline_is_exactly_the_third_term() {
        let env = environment(9.825, 0.79);
        for lam in [250.0, 266.0, 400.0, 500.0, 800.0, 1342.0] {
            let res = env.effective_index(lam, Variant::Resonant).unwrap();
            let base = env.effective_index(lam, Variant::Baseline).unwrap();
            let term = env.resonance_term(lam).unwrap();
            // base - (base - term) loses one ulp of the unity-scale index
            assert!((base - res - term).abs() <= 1e-15, "at {lam} nm");
        }
    }

    #[test]
    fn third_term_changes_sign_across_pole() {
        let env = environment(10.25, 0.0);
        let lam1 = env.resonance_wavelength_for_thickness(1, 300.0).unwrap();
        let below = env.resonance_term(lam1 - 12.0).unwrap();
        let above = env.resonance_term(lam1 + 12.0).unwrap();
        assert!(below * above < 0.0, "below {below:.3e}, above {above:.3e}");
    }

    #[test]
    fn beta_definition_and_monotonicity() {
        let env = environment(9.825, 0.79);
        let beta = env.propagation_beta(400.0, Variant::Resonant).unwrap();
        let neff = env.effective_index(400.0, Variant::Resonant).unwrap();
        assert_eq!(beta, 2.0 * PI / (400.0 * 1e-9) * neff);

        // vacuum baseline beta strictly increasing in frequency
        let vac = environment(10.25, 0.0);
        let mut prev = 0.0;
        for lam in (300..1400).rev().step_by(50) {
            let b = vac.propagation_beta(lam as f64, Variant::Baseline).unwrap();
            assert!(b > prev, "beta not increasing at {lam} nm");
            prev = b;
        }
    }

    #[test]
    fn beta_variant_difference_grows_toward_band_edge() {
        let env = environment(9.825, 0.79);
        // approach the m=1 resonance (~635.5 nm) from the long side
        let mut prev = 0.0;
        for lam in [700.0, 680.0, 660.0, 650.0] {
            let d = (env.propagation_beta(lam, Variant::Resonant).unwrap()
                - env.propagation_beta(lam, Variant::Baseline).unwrap())
            .abs();
            assert!(d > prev, "difference not growing at {lam} nm");
            prev = d;
        }
    }

    #[test]
    fn vacuum_gvd_is_anomalous_at_800() {
        let env = environment(10.25, 0.0);
        for variant in [Variant::Baseline, Variant::Resonant] {
            let g = env.group_velocity_dispersion(800.0, variant).unwrap();
            assert!(g.beta2_fs2_per_mm < 0.0, "{variant}: {g:?}");
        }
    }

    #[test]
    fn gvd_step_refinement_converged() {
        let env = environment(9.825, 0.79);
        let coarse = env
            .group_velocity_dispersion(800.0, Variant::Resonant)
            .unwrap();
        // halving the returned step changes beta2 by < 0.1 %
        let h = 2.0 * PI * coarse.step_thz * 1e12 / 2.0;
        let w0 = omega_from_lambda_nm(800.0);
        let b = |w: f64| env.beta_at_omega(w, Variant::Resonant).unwrap();
        let refined = (b(w0 + h) - 2.0 * b(w0) + b(w0 - h)) / (h * h) * 1e27;
        assert!(
            ((refined - coarse.beta2_fs2_per_mm) / refined).abs() < 1e-3,
            "coarse {} refined {}",
            coarse.beta2_fs2_per_mm,
            refined
        );
    }

    #[test]
    fn gvd_stencil_near_pole_errors() {
        let env = environment(9.825, 0.79);
        let lam1 = env.resonance_wavelength_for_thickness(1, 300.0).unwrap();
        let err = env
            .group_velocity_dispersion(lam1 + 0.3, Variant::Resonant)
            .unwrap_err();
        assert!(
            matches!(
                err,
                Error::StencilOnResonance { .. } | Error::ResonancePole { .. }
            ),
            "{err:?}"
        );
    }

    #[test]
    fn zdw_golden_and_monotone_in_pressure() {
        let env = environment(9.825, 1.1);
        let z = env
            .find_zdw(env.numerics.zdw_bracket_nm, Variant::Resonant)
            .unwrap();
        assert!((z - 423.682).abs() < 0.05, "zdw = {z}");

        let mut prev = 0.0;
        for p in [0.5, 0.7, 0.9, 1.1, 1.3, 1.5] {
            let z = env
                .at_pressure(p)
                .find_zdw(env.numerics.zdw_bracket_nm, Variant::Resonant)
                .unwrap();
            assert!(z > prev, "zdw not increasing at {p} bar");
            prev = z;
        }
    }

    #[test]
    fn zdw_rejects_single_signed_bracket() {
        // the capillary-only dispersion is anomalous throughout (700, 800) nm
        let env = environment(9.825, 0.79);
        let err = env.find_zdw((700.0, 800.0), Variant::Baseline).unwrap_err();
        assert!(matches!(err, Error::NoRoot { .. }));
        // the resonant variant has a second, resonance-induced crossing
        // above the m=1 band
        let z = env.find_zdw((700.0, 800.0), Variant::Resonant).unwrap();
        assert!((z - 770.1).abs() < 1.0, "resonance-side zdw = {z}");
    }

    #[test]
    fn zdw_bracket_touching_pole_errors() {
        let env = environment(9.825, 0.79);
        let lam1 = env.resonance_wavelength_for_thickness(1, 300.0).unwrap();
        let err = env
            .find_zdw((lam1 - 40.0, lam1), Variant::Resonant)
            .unwrap_err();
        assert!(
            matches!(
                err,
                Error::StencilOnResonance { .. } | Error::ResonancePole { .. }
            ),
            "{err:?}"
        );
    }

    #[test]
    fn resonance_wavelength_goldens() {
        // frozen from an independent bisection of psi(lambda) = m pi
        let env = environment(10.25, 0.0);
        let lams = env.resonance_wavelengths(4).unwrap();
        let expect = [(1u32, 635.7324), (2, 327.7462), (3, 229.1743)];
        // m = 4 solves to ~183 nm, below the silica window, and is dropped
        assert_eq!(lams.len(), 3);
        for ((m, lam), (em, elam)) in lams.iter().zip(expect.iter()) {
            assert_eq!(m, em);
            assert!((lam - elam).abs() < 0.01, "m={m}: {lam}");
        }
        // strictly decreasing in m
        assert!(lams.windows(2).all(|w| w[1].1 < w[0].1));
    }

    #[test]
    fn resonance_defining_relation_satisfied() {
        let env = environment(9.825, 0.79);
        for (m, lam) in env.resonance_wavelengths(3).unwrap() {
            let psi = env.psi(lam).unwrap();
            assert!(
                (psi - m as f64 * PI).abs() < 1e-6,
                "m={m}: psi residual {}",
                psi - m as f64 * PI
            );
        }
    }

    #[test]
    fn halving_thickness_halves_resonances_with_frozen_dispersion() {
        // synthetic silica with a constant index freezes dispersion
        let flat = SilicaModel {
            sellmeier_terms: vec![SellmeierTerm {
                strength: 1.1025, // n = sqrt(1 + 1.1025) = 1.45 everywhere
                resonance_wavelength_nm: 0.0,
            }],
            validity_window_nm: (1.0, 1e6),
        };
        let mut env = environment(10.25, 0.0);
        env.silica = flat;
        env.gas.validity_window_nm = (1.0, 1e6);
        for m in 1..=3 {
            let full = env.resonance_wavelength_for_thickness(m, 300.0).unwrap();
            let half = env.resonance_wavelength_for_thickness(m, 150.0).unwrap();
            assert!((full / half - 2.0).abs() < 1e-12, "m={m}");
        }
    }

    #[test]
    fn resonance_bands_golden_and_disjoint() {
        let env = environment(9.825, 0.0);
        let bands = env.resonance_bands(4).unwrap();
        assert_eq!(bands.len(), 3); // m = 4 out of the silica window
        let b1 = bands[0];
        assert_eq!(b1.order, 1);
        let margin = env.numerics.band_margin_nm;
        assert!((b1.lambda_low_nm + margin - 635.7324).abs() < 0.01);
        assert!((b1.lambda_high_nm - margin - 718.5770).abs() < 0.01);
        // pairwise disjoint
        for pair in bands.windows(2) {
            assert!(pair[1].lambda_high_nm < pair[0].lambda_low_nm);
        }
    }

    #[test]
    fn zero_width_thickness_range_gives_zero_width_band() {
        let mut env = environment(9.825, 0.0);
        env.geometry.tube_thickness_range_nm = (300.0, 300.0);
        env.numerics.band_margin_nm = 0.0;
        let bands = env.resonance_bands(1).unwrap();
        assert!((bands[0].lambda_high_nm - bands[0].lambda_low_nm).abs() < 1e-9);
    }

    #[test]
    fn neff_stays_below_gas_line_outside_guards() {
        let env = environment(9.825, 0.79);
        let guards = env.pole_guard_bands(4).unwrap();
        let mut lam = 235.0;
        while lam < 1342.0 {
            if !guards.iter().any(|g| g.contains(lam)) {
                let neff = env.effective_index(lam, Variant::Resonant).unwrap();
                let ng = env.gas_index(lam).unwrap();
                assert!(neff < ng, "n_eff >= n_gas at {lam} nm");
            }
            lam += 1.0;
        }
    }

    #[test]
    fn transmittance_dips_at_resonances() {
        let mut env = environment(9.825, 0.0);
        env.geometry.tube_thickness_range_nm = (300.0, 300.0);
        let params = TransmittanceParams::default();
        let lam1 = env.resonance_wavelength_for_thickness(1, 300.0).unwrap();
        let at_dip = env.transmittance(lam1, &params).unwrap();
        for offset in [-20.0, -10.0, -3.0, 3.0, 10.0, 20.0] {
            let t = env.transmittance(lam1 + offset, &params).unwrap();
            assert!(t > at_dip, "no local minimum at offset {offset}");
        }
    }

    #[test]
    fn transmittance_high_away_from_bands() {
        let env = environment(9.825, 0.0);
        let params = TransmittanceParams::default();
        for lam in [300.0, 450.0, 550.0, 800.0, 850.0] {
            let t = env.transmittance(lam, &params).unwrap();
            assert!(t > 0.5, "T({lam}) = {t}");
            assert!(t <= 1.0);
        }
    }

    #[test]
    fn thickness_spread_merges_dips_into_band() {
        let env = environment(9.825, 0.0);
        let params = TransmittanceParams::default();
        let band = &env.resonance_bands(1).unwrap()[0];
        // degradation across the whole m=1 band
        let mut lam = band.lambda_low_nm + params.notch_hwhm_nm;
        while lam < band.lambda_high_nm - params.notch_hwhm_nm {
            let t = env.transmittance(lam, &params).unwrap();
            assert!(t < 0.5, "band not degraded at {lam:.1} nm: T = {t:.3}");
            lam += 2.0;
        }
    }

    #[test]
    fn geometry_validation() {
        assert!(geometry(10.0).validate().is_ok());
        let mut g = geometry(10.0);
        g.core_radius_um = -1.0;
        assert!(g.validate().is_err());
        let mut g = geometry(10.0);
        g.tube_thickness_nm = 350.0; // outside [300, 340]
        assert!(g.validate().is_err());
        let mut g = geometry(10.0);
        g.effective_length_cm = 100.0;
        assert!(g.validate().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn prop_neff_below_gas_line(lam in 240.0f64..1300.0, p in 0.0f64..1.5) {
            let env = environment(9.825, p);
            if let Ok(neff) = env.effective_index(lam, Variant::Resonant) {
                prop_assert!(neff < env.gas_index(lam).unwrap());
            }
        }

        #[test]
        fn prop_transmittance_in_unit_interval(lam in 280.0f64..850.0) {
            let env = environment(9.825, 0.0);
            let t = env.transmittance(lam, &TransmittanceParams::default()).unwrap();
            prop_assert!((0.0..=1.0).contains(&t));
        }
    }
}
