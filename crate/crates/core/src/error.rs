//! Crate-wide error type.

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Wavelength outside a material's validity window.
    #[error("{material}: {lambda_nm} nm outside validity window [{min_nm}, {max_nm}] nm")]
    OutOfWindow {
        material: String,
        lambda_nm: f64,
        min_nm: f64,
        max_nm: f64,
    },

    /// Argument violates a precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Wavelength sits on (or too close to) a cladding-tube resonance, where
    /// the cot term of the effective-index model diverges.
    #[error(
        "{lambda_nm:.3} nm lies on the order-{order} tube resonance \
         (|psi mod pi| = {distance_rad:.2e} rad < guard {guard_rad:.2e} rad)"
    )]
    ResonancePole {
        lambda_nm: f64,
        order: u32,
        distance_rad: f64,
        guard_rad: f64,
    },

    /// A finite-difference stencil crossed into a resonance guard zone.
    #[error(
        "dispersion stencil at {lambda_nm:.3} nm (step {step_thz} THz) touches the \
         order-{order} resonance; shrink the step or move the wavelength"
    )]
    StencilOnResonance {
        lambda_nm: f64,
        step_thz: f64,
        order: u32,
    },

    /// A leg of the four-wave-mixing triplet falls inside a resonance guard.
    #[error("{leg} wavelength {lambda_nm:.3} nm falls on the order-{order} tube resonance")]
    LegOnResonance {
        leg: &'static str,
        lambda_nm: f64,
        order: u32,
    },

    /// Root bracketing failed: no sign change over the given interval.
    #[error("no sign change of {quantity} in [{lo:.3}, {hi:.3}]")]
    NoRoot { quantity: String, lo: f64, hi: f64 },

    /// No phase-matched signal/idler pair in the search window.
    #[error("no phase matching in the signal window [{lo:.2}, {hi:.2}] nm at {pressure_bar} bar")]
    NoPhaseMatching { lo: f64, hi: f64, pressure_bar: f64 },

    /// An iterative scheme ran out of iterations.
    #[error("{what} did not converge after {iterations} iterations (last {last:.6})")]
    NonConvergence {
        what: String,
        iterations: u32,
        last: f64,
    },

    /// A statistic is undefined for the given data (e.g. zero singles).
    #[error("undefined statistic: {0}")]
    UndefinedStatistic(String),

    /// Configuration file errors (parse or validation).
    #[error("config: {0}")]
    Config(String),
}
