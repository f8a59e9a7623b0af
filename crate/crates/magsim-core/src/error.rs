//! Error and warning types shared across the library.
//!
//! Every fallible operation returns [`CoreError`]. Parameter validation
//! additionally produces non-fatal [`ModelWarning`]s for regimes where the
//! modelling assumptions start to degrade but the maths still goes through.

use thiserror::Error;

/// Failure modes of the numerical kernels and model constructors.
#[derive(Debug, Error)]
pub enum CoreError {
    /// The steady-state linear system could not be solved reliably.
    #[error("steady-state system is singular or ill-conditioned (condition estimate {cond:.3e})")]
    SingularSystem {
        /// One-norm condition estimate of the system matrix.
        cond: f64,
    },

    /// Fixed-step integration failed its step-halving consistency check.
    #[error(
        "ODE grid too coarse: {steps} steps leave a relative residual of {residual:.3e} \
         against the halved grid (tolerance {tol:.3e})"
    )]
    StepTooCoarse {
        /// Number of steps used for the coarse pass.
        steps: usize,
        /// Relative disagreement between the coarse and refined solutions.
        residual: f64,
        /// Tolerance the residual was checked against.
        tol: f64,
    },

    /// The integrated intensity dropped to zero or below inside the cell.
    #[error("field intensity reached zero near z = {z:.6e}; cell is longer than absorption allows")]
    IntensityUnderflow {
        /// Position (in the same units as the cell length) where the sign was lost.
        z: f64,
    },

    /// A resonance feature is unresolved by the requested sampling grid.
    #[error("spectral feature narrower than four grid spacings; refine the detuning grid")]
    GridTooCoarse,

    /// Both drive components vanish, so the steady state is undefined.
    #[error("total drive intensity is zero; the steady state needs a nonvanishing field")]
    ZeroField,

    /// An intensity profile contains samples that are not strictly positive.
    #[error("intensity profile contains non-positive samples")]
    ProfileNonPositive,

    /// A transmission value sits outside the open interval where the
    /// sensitivity expressions are defined.
    #[error("transmission must lie strictly between 0 and 1, got {eta}")]
    DegenerateEta {
        /// Offending transmission value.
        eta: f64,
    },

    /// Catch-all for arguments that violate a documented precondition.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter {
        /// Name of the offending argument.
        name: &'static str,
        /// Human-readable description of the violation.
        reason: String,
    },

    /// Root bracketing failed: the supplied interval does not straddle a sign change.
    #[error("no sign change on [{a:.6e}, {b:.6e}]; cannot bracket a root")]
    NoBracket {
        /// Lower end of the attempted bracket.
        a: f64,
        /// Upper end of the attempted bracket.
        b: f64,
    },
}

/// Non-fatal diagnostics emitted by parameter validation.
///
/// The library computes answers regardless; these flag parameter regimes in
/// which the closed-form results drift away from the full model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelWarning {
    /// Ground-state relaxation is not small against the optical linewidth,
    /// so the hierarchy behind the perturbative steady state is weak.
    GroundDecayComparable,
    /// The light-shift detuning is not large against the optical linewidth,
    /// so treating the far-detuned beam as a pure dephasing source is rough.
    StarkDetuningSmall,
}

impl std::fmt::Display for ModelWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelWarning::GroundDecayComparable => {
                write!(f, "ground relaxation rate is not small against the optical linewidth")
            }
            ModelWarning::StarkDetuningSmall => {
                write!(f, "light-shift detuning is not large against the optical linewidth")
            }
        }
    }
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, CoreError>;
