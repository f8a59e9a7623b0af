//! Model parameters for the three-level atomic medium and the probe geometry.
//!
//! All rates and detunings are expressed in units of the optical coherence
//! decay rate `gamma` (so `gamma = 1` in the default set), and lengths in
//! units of the inverse medium coupling constant `kappa`.

use crate::error::{ModelWarning, Result};

/// Rates, detunings and the medium coupling for the driven Lambda system.
///
/// Two near-degenerate ground states couple to a common excited state via
/// the circular components of a single linearly polarised beam; a magnetic
/// field splits the ground doublet by `ground_splitting` and a far-detuned
/// auxiliary beam can shift either leg via the light-shift terms passed to
/// the solvers separately.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomicParams {
    /// Optical coherence decay rate (half the excited-state linewidth when
    /// radiative decay dominates). Sets the unit system; keep at 1.0 unless
    /// you know what you are doing.
    pub gamma: f64,
    /// Radiative decay rate of the excited state into each ground state.
    pub gamma_r: f64,
    /// Decay rate of the ground-state coherence (dephasing).
    pub gamma0: f64,
    /// Population exchange rate between the two ground states.
    pub gamma0_r: f64,
    /// One-photon detuning of the drive from the optical transition.
    pub optical_detuning: f64,
    /// Zeeman splitting of the ground doublet; this is the signal.
    pub ground_splitting: f64,
    /// Detuning of the far-off-resonant shift beam from its own transition.
    /// Large values make the shift beam a clean dephasing source.
    pub shift_detuning: f64,
    /// Medium coupling constant (atom density times cross-section scale).
    /// Lengths are measured in `1/kappa`, so the default is 1.0.
    pub kappa: f64,
}

impl AtomicParams {
    /// Alkali-vapour-like default set: radiatively broadened optical line,
    /// ground relaxation a thousand times slower, shift beam detuned a
    /// thousand linewidths away.
    pub fn default_set() -> Self {
        AtomicParams {
            gamma: 1.0,
            gamma_r: 1.0,
            gamma0: 1e-3,
            gamma0_r: 1e-4,
            optical_detuning: 0.0,
            ground_splitting: 1e-3,
            shift_detuning: 1e3,
            kappa: 1.0,
        }
    }

    /// Check hard invariants and collect soft warnings.
    ///
    /// Errors on non-finite or negative rates (`gamma` and `kappa` must be
    /// strictly positive). Returns the list of [`ModelWarning`]s for regimes
    /// where the closed-form expressions lose accuracy: ground relaxation
    /// within a factor of ten of the optical linewidth, or a shift detuning
    /// below ten linewidths.
    pub fn validate(&self) -> Result<Vec<ModelWarning>> {
        use crate::error::CoreError::InvalidParameter;

        let positive = [
            ("gamma", self.gamma),
            ("kappa", self.kappa),
        ];
        for (name, v) in positive {
            if !v.is_finite() || v <= 0.0 {
                return Err(InvalidParameter {
                    name,
                    reason: format!("must be finite and > 0, got {v}"),
                });
            }
        }
        let nonnegative = [
            ("gamma_r", self.gamma_r),
            ("gamma0", self.gamma0),
            ("gamma0_r", self.gamma0_r),
        ];
        for (name, v) in nonnegative {
            if !v.is_finite() || v < 0.0 {
                return Err(InvalidParameter {
                    name,
                    reason: format!("must be finite and >= 0, got {v}"),
                });
            }
        }
        let finite = [
            ("optical_detuning", self.optical_detuning),
            ("ground_splitting", self.ground_splitting),
            ("shift_detuning", self.shift_detuning),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(InvalidParameter {
                    name,
                    reason: format!("must be finite, got {v}"),
                });
            }
        }

        let mut warnings = Vec::new();
        if self.gamma0.max(self.gamma0_r) * 10.0 >= self.gamma {
            warnings.push(ModelWarning::GroundDecayComparable);
        }
        if self.shift_detuning.abs() < 10.0 * self.gamma {
            warnings.push(ModelWarning::StarkDetuningSmall);
        }
        Ok(warnings)
    }

    /// Combined ground-state relaxation rate (dephasing plus exchange).
    pub fn ground_relaxation(&self) -> f64 {
        self.gamma0 + self.gamma0_r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_set_is_clean() {
        let p = AtomicParams::default_set();
        let warnings = p.validate().expect("default set must validate");
        assert!(warnings.is_empty(), "default set should carry no warnings: {warnings:?}");
    }

    #[test]
    fn slow_ground_decay_passes_quietly() {
        let mut p = AtomicParams::default_set();
        p.gamma0 = 1e-2;
        p.gamma0_r = 1e-2;
        assert!(p.validate().unwrap().is_empty());
    }

    #[test]
    fn comparable_ground_decay_warns() {
        let mut p = AtomicParams::default_set();
        p.gamma0 = 0.5;
        let w = p.validate().unwrap();
        assert!(w.contains(&ModelWarning::GroundDecayComparable));
    }

    #[test]
    fn small_shift_detuning_warns() {
        let mut p = AtomicParams::default_set();
        p.shift_detuning = 2.0;
        let w = p.validate().unwrap();
        assert!(w.contains(&ModelWarning::StarkDetuningSmall));
    }

    #[test]
    fn negative_rate_is_rejected() {
        let mut p = AtomicParams::default_set();
        p.gamma_r = -0.1;
        assert!(p.validate().is_err());
    }

    #[test]
    fn zero_gamma_is_rejected() {
        let mut p = AtomicParams::default_set();
        p.gamma = 0.0;
        assert!(p.validate().is_err());
    }
}
