//! Error types shared across the solver stack.

use core::fmt;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

/// Failure modes of the element, circuit, and solver layers.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter failed basic validation (message describes the field).
    InvalidParameter(&'static str),
    /// The dense grid scan found no potential-minimum bracket.
    NoMinimumBracketed,
    /// Flux continuation jumped by more than π between adjacent points,
    /// i.e. the tracked minimum branch was lost (hysteretic regime).
    HystereticBranchLost {
        /// Reduced flux [rad] at which the branch was lost.
        phi_ext: f64,
    },
    /// The device is hysteretic (α > 1/3) and no override was set.
    HystereticDevice {
        /// Junction inductance ratio of the offending element.
        alpha: f64,
    },
    /// c₂ ≤ 1e-12 at the working point; the SNAIL linear inductance diverges.
    DivergentInductance,
    /// The nonlinear current-conservation solve did not converge.
    ConstraintNoConvergence {
        /// Residual after the final iteration.
        residual: f64,
    },
    /// The frequency root is not bracketed by (0, ω₀); inputs are corrupt.
    RootNotBracketed,
    /// K(flux) does not change sign on the scanned interval.
    NoSignChange,
    /// Newton iteration on the harmonic-balance system did not converge.
    NonConvergence {
        /// Residual norm after the last Newton step.
        residual: f64,
        /// Continuation steps completed before failure.
        steps: usize,
    },
    /// The requested drive puts the small-signal fixed point at or above the
    /// parametric instability (gain denominator ≤ 0).
    AboveInstability,
    /// The susceptibility-matrix denominator is numerically singular.
    SingularDenominator,
    /// Pump calibration hit the instability before reaching the target gain.
    TargetUnreachable {
        /// Largest small-signal gain reached below the instability.
        best_gain: f64,
    },
    /// Too few uncompressed points to fit the intermodulation asymptotes.
    FitWindowTooSmall {
        /// Number of points satisfying the compression criterion.
        points: usize,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            Error::NoMinimumBracketed => {
                write!(f, "grid scan found no sign change bracketing a minimum")
            }
            Error::HystereticBranchLost { phi_ext } => {
                write!(
                    f,
                    "minimum branch lost during continuation at phi_ext = {phi_ext}"
                )
            }
            Error::HystereticDevice { alpha } => write!(
                f,
                "device is hysteretic (alpha = {alpha} > 1/3); set the override to proceed"
            ),
            Error::DivergentInductance => {
                write!(f, "c2 <= 1e-12: SNAIL inductance diverges at this flux")
            }
            Error::ConstraintNoConvergence { residual } => write!(
                f,
                "current-conservation solve stalled with residual {residual:e}"
            ),
            Error::RootNotBracketed => write!(f, "frequency root not bracketed in (0, omega_0)"),
            Error::NoSignChange => write!(f, "K(flux) is single-signed on the scanned interval"),
            Error::NonConvergence { residual, steps } => write!(
                f,
                "harmonic balance did not converge (residual {residual:e} after {steps} steps)"
            ),
            Error::AboveInstability => {
                write!(f, "operating point is above the parametric instability")
            }
            Error::SingularDenominator => write!(f, "susceptibility denominator is singular"),
            Error::TargetUnreachable { best_gain } => write!(
                f,
                "target gain unreachable; best achievable below instability is {best_gain}"
            ),
            Error::FitWindowTooSmall { points } => write!(
                f,
                "only {points} points satisfy the compression criterion; fit window too small"
            ),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
