//! Refractive-index models for the filling gas and the silica tubes.
//!
//! Both materials are described by (strength, resonance-wavelength) pairs
//! loaded from the run configuration. The gas model stores terms valid at
//! reference conditions and scales the susceptibility with ideal-gas density,
//! so `n(lambda, P=0, T) = 1` holds exactly.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One dispersion term: `strength * l^2 / (l^2 - resonance_wavelength^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SellmeierTerm {
    pub strength: f64,
    pub resonance_wavelength_nm: f64,
}

fn term_sum(terms: &[SellmeierTerm], lambda_nm: f64) -> f64 {
    let l2 = lambda_nm * lambda_nm;
    terms
        .iter()
        .map(|t| t.strength * l2 / (l2 - t.resonance_wavelength_nm * t.resonance_wavelength_nm))
        .sum()
}

fn check_window(material: &str, lambda_nm: f64, window: (f64, f64)) -> Result<()> {
    if lambda_nm < window.0 || lambda_nm > window.1 {
        return Err(Error::OutOfWindow {
            material: material.to_string(),
            lambda_nm,
            min_nm: window.0,
            max_nm: window.1,
        });
    }
    Ok(())
}

/// Filling-gas refractive index: susceptibility terms quoted at reference
/// pressure/temperature, ideal-gas density scaling elsewhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GasModel {
    pub name: String,
    pub susceptibility_terms: Vec<SellmeierTerm>,
    pub reference_pressure_bar: f64,
    pub reference_temperature_k: f64,
    pub validity_window_nm: (f64, f64),
}

impl GasModel {
    /// `n - 1` at the reference conditions.
    pub fn reference_susceptibility(&self, lambda_nm: f64) -> Result<f64> {
        check_window(&self.name, lambda_nm, self.validity_window_nm)?;
        Ok(term_sum(&self.susceptibility_terms, lambda_nm))
    }

    /// Refractive index at `lambda_nm`, `pressure_bar` and `temperature_k`.
    pub fn index(&self, lambda_nm: f64, pressure_bar: f64, temperature_k: f64) -> Result<f64> {
        if pressure_bar < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "negative pressure: {pressure_bar} bar"
            )));
        }
        if temperature_k <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "non-positive temperature: {temperature_k} K"
            )));
        }
        let chi_ref = self.reference_susceptibility(lambda_nm)?;
        let density_ratio = (pressure_bar / self.reference_pressure_bar)
            * (self.reference_temperature_k / temperature_k);
        Ok(1.0 + chi_ref * density_ratio)
    }

    pub fn validity_window_nm(&self) -> (f64, f64) {
        self.validity_window_nm
    }
}

/// Fused-silica index from a standard Sellmeier sum (`n^2 - 1` form).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SilicaModel {
    pub sellmeier_terms: Vec<SellmeierTerm>,
    pub validity_window_nm: (f64, f64),
}

impl SilicaModel {
    pub fn index(&self, lambda_nm: f64) -> Result<f64> {
        check_window("silica", lambda_nm, self.validity_window_nm)?;
        Ok((1.0 + term_sum(&self.sellmeier_terms, lambda_nm)).sqrt())
    }

    pub fn validity_window_nm(&self) -> (f64, f64) {
        self.validity_window_nm
    }
}

#[cfg(test)]
pub(crate) use tests::{silica as test_silica, xenon as test_xenon};

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn xenon() -> GasModel {
        GasModel {
            name: "xenon".into(),
            susceptibility_terms: vec![
                SellmeierTerm {
                    strength: 6.973261916589e-5,
                    resonance_wavelength_nm: 146.961919,
                },
                SellmeierTerm {
                    strength: 5.965171707677e-5,
                    resonance_wavelength_nm: 129.555854,
                },
                SellmeierTerm {
                    strength: 5.381976228490e-4,
                    resonance_wavelength_nm: 94.180498,
                },
            ],
            reference_pressure_bar: 1.01325,
            reference_temperature_k: 273.15,
            validity_window_nm: (160.0, 2000.0),
        }
    }

    pub(crate) fn silica() -> SilicaModel {
        SilicaModel {
            sellmeier_terms: vec![
                SellmeierTerm {
                    strength: 0.6961663,
                    resonance_wavelength_nm: 68.4043,
                },
                SellmeierTerm {
                    strength: 0.4079426,
                    resonance_wavelength_nm: 116.2414,
                },
                SellmeierTerm {
                    strength: 0.8974794,
                    resonance_wavelength_nm: 9896.161,
                },
            ],
            validity_window_nm: (210.0, 3710.0),
        }
    }

    #[test]
    fn vacuum_limit_is_exactly_one() {
        let gas = xenon();
        for lam in [160.0, 235.0, 400.0, 800.0, 1342.0, 2000.0] {
            assert_eq!(gas.index(lam, 0.0, 293.0).unwrap(), 1.0);
        }
    }

    #[test]
    fn gas_index_golden_value() {
        // Frozen from an independent evaluation of the configured
        // Bideau-Mehu terms with ideal-gas scaling to 1 bar, 293 K.
        let n = xenon().index(400.0, 1.0, 293.0).unwrap();
        assert!((n - 1.000659723164073).abs() < 1e-12, "n = {n:.15}");
    }

    #[test]
    fn pressure_linearity_exact() {
        let gas = xenon();
        let a = gas.index(800.0, 2.0, 293.0).unwrap() - 1.0;
        let b = gas.index(800.0, 1.0, 293.0).unwrap() - 1.0;
        assert!((a - 2.0 * b).abs() < 1e-18);
    }

    #[test]
    fn gas_rejects_negative_pressure_and_window() {
        let gas = xenon();
        assert!(matches!(
            gas.index(400.0, -0.1, 293.0),
            Err(Error::InvalidArgument(_))
        ));
        match gas.index(100.0, 1.0, 293.0) {
            Err(Error::OutOfWindow { min_nm, max_nm, .. }) => {
                assert_eq!((min_nm, max_nm), (160.0, 2000.0));
            }
            other => panic!("expected window error, got {other:?}"),
        }
    }

    #[test]
    fn silica_golden_and_window() {
        let si = silica();
        let n = si.index(589.0).unwrap();
        assert!((n - 1.4585).abs() < 1e-3);
        assert!((n - 1.458413206).abs() < 1e-8);
        assert!(si.index(1342.0).unwrap() < si.index(235.0).unwrap());
        assert!(matches!(si.index(100.0), Err(Error::OutOfWindow { .. })));
        for lam in [210.0, 500.0, 1000.0, 1400.0] {
            assert!(si.index(lam).unwrap() > 1.4);
        }
    }

    #[test]
    fn normal_dispersion_over_band() {
        let gas = xenon();
        let si = silica();
        let mut lam = 235.0;
        while lam < 1342.0 {
            let dg = gas.index(lam + 0.5, 1.0, 293.0).unwrap()
                - gas.index(lam - 0.5, 1.0, 293.0).unwrap();
            assert!(dg < 0.0, "gas dispersion not normal at {lam} nm");
            let ds = si.index(lam + 0.5).unwrap() - si.index(lam - 0.5).unwrap();
            assert!(ds < 0.0, "silica dispersion not normal at {lam} nm");
            lam += 25.0;
        }
    }

    proptest! {
        #[test]
        fn prop_vacuum_identity(lam in 160.0..2000.0f64, t in 250.0..350.0f64) {
            prop_assert_eq!(xenon().index(lam, 0.0, t).unwrap(), 1.0);
        }

        #[test]
        fn prop_pressure_ratio(lam in 200.0..1900.0f64, p1 in 0.01..5.0f64, p2 in 0.01..5.0f64) {
            let gas = xenon();
            let a = gas.index(lam, p1, 293.0).unwrap() - 1.0;
            let b = gas.index(lam, p2, 293.0).unwrap() - 1.0;
            // recovering n - 1 from the stored index costs ~1e-11 relative
            prop_assert!(((a / b) / (p1 / p2) - 1.0).abs() < 1e-9);
        }

        #[test]
        fn prop_positive_pressure_raises_index(lam in 200.0..1900.0f64, p in 0.01..5.0f64) {
            prop_assert!(xenon().index(lam, p, 293.0).unwrap() > 1.0);
        }
    }
}
