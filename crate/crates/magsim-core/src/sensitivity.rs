//! Detection statistics and sensitivity limits of the rotation measurement.
//!
//! A balanced polarimeter converts the relative phase of the circular
//! components into a count difference `eta n_in sin(phi)`. Its variance has
//! a vacuum (shot) part and a light-shift part that grows with beam power,
//! so the signal-to-noise ratio has a single interior optimum in power: the
//! point where the two noise sources balance. At that point the minimum
//! detectable ground-state splitting takes a closed form, a power-
//! independent quantum limit times a geometry factor `f(eta)` of order one.
//! This module carries the whole chain: counts, noise bracket, SNR, the
//! closed-form optimum, the quantum-limit factors for coherent and squeezed
//! input light, power sweeps for curve generation, and a schematic model of
//! an optical-pumping magnetometer for comparison.
//!
//! Beam powers are quoted as the dimensionless ratio `P / P0`, where `P0`
//! is the power carrying `8 pi A / lambda^2` photons per ground-state
//! coherence time. See [`power_to_rabi_sq`] for the mapping derivation.

use crate::error::{CoreError, Result};
use crate::numeric::{bisect, golden_min};
use crate::params::AtomicParams;
use crate::stark::NoiseBudget;
use rayon::prelude::*;

/// Which noise source dominates at an operating point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Shot noise dominates; sensitivity improves with more power.
    ShotLimited,
    /// Light-shift and shot noise are comparable; near the optimum.
    Optimum,
    /// Light-shift noise dominates; more power hurts.
    StarkLimited,
}

impl Regime {
    /// Stable lower-case label for output files.
    pub fn label(&self) -> &'static str {
        match self {
            Regime::ShotLimited => "shot_limited",
            Regime::Optimum => "optimum",
            Regime::StarkLimited => "stark_limited",
        }
    }

    /// Classifies an operating point by the ratio of light-shift to shot
    /// phase variance: below 1/2 counts as shot limited, above 2 as
    /// light-shift limited, in between as near the optimum (the two
    /// contributions are equal at the best drive intensity).
    pub fn from_stark_to_shot(ratio: f64) -> Self {
        if ratio < 0.5 {
            Regime::ShotLimited
        } else if ratio > 2.0 {
            Regime::StarkLimited
        } else {
            Regime::Optimum
        }
    }
}

/// One operating point of a sensitivity sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityPoint {
    /// Input power in units of the reference power.
    pub power_ratio: f64,
    /// Minimum detectable ground-state splitting (SNR = 1).
    pub min_delta0: f64,
    /// Dominant noise source at this point.
    pub regime: Regime,
}

/// A full sweep at fixed transmission.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityCurve {
    /// Transmission the cell length is tuned to.
    pub eta: f64,
    /// Points in the order of the input power grid.
    pub points: Vec<SensitivityPoint>,
}

impl SensitivityCurve {
    /// Index and value of the best (smallest `min_delta0`) point.
    pub fn best_point(&self) -> (usize, &SensitivityPoint) {
        self.points
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.min_delta0.total_cmp(&b.1.min_delta0))
            .expect("curve is never empty")
    }
}

/// Conversion constants between beam power and detected photon number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonBudget {
    /// Measurement time in units of the ground coherence time,
    /// `gamma0 * t_m`.
    pub gamma0_tm: f64,
    /// Squared wavelength over beam area, the diffraction-limited solid
    /// angle of the mode.
    pub lambda_sq_over_a: f64,
}

impl PhotonBudget {
    /// Validate both ratios positive and finite.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("gamma0_tm", self.gamma0_tm),
            ("lambda_sq_over_a", self.lambda_sq_over_a),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(CoreError::InvalidParameter {
                    name,
                    reason: format!("must be finite and > 0, got {v}"),
                });
            }
        }
        Ok(())
    }

    /// Photons entering the cell during one measurement at input power
    /// `power_ratio * P0`: the reference power carries `8 pi A / lambda^2`
    /// photons per ground coherence time, so
    /// `n_in = power_ratio * gamma0_tm * 8 pi / (lambda^2 / A)`.
    pub fn photons_in(&self, power_ratio: f64) -> f64 {
        power_ratio * self.gamma0_tm * 8.0 * std::f64::consts::PI / self.lambda_sq_over_a
    }
}

/// Drive intensity at input power `power_ratio * P0`.
///
/// Derivation of the mapping: a beam of power `P` in area `A` carries the
/// photon flux `P / (hbar nu0) = 2 eps0 c A E^2 / (hbar nu0)` for field
/// amplitude `E`. The squared Rabi frequency is `(d E / hbar)^2`;
/// eliminating the dipole moment `d` through the radiative width
/// `gamma_r = d^2 nu0^3 / (3 pi eps0 hbar c^3)` and the wavelength through
/// `lambda = 2 pi c / nu0` gives, for the reference power
/// `P0 = hbar nu0 (8 pi A / lambda^2) gamma0`,
///
/// `|Omega(0)|^2 = 3 gamma_r gamma0 * (P / P0)`.
pub fn power_to_rabi_sq(p: &AtomicParams, power_ratio: f64) -> f64 {
    3.0 * p.gamma_r * p.gamma0 * power_ratio
}

/// Outcome of one photon-counting measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionResult {
    /// Mean count difference of the balanced detector.
    pub mean_counts: f64,
    /// Count-difference variance (never below the vacuum level
    /// `eta * n_in`).
    pub count_variance: f64,
    /// `mean_counts / sqrt(count_variance)`; the sign follows the sign of
    /// the signal phase.
    pub snr: f64,
}

fn check_eta_n(eta: f64, photons_in: f64) -> Result<()> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(CoreError::DegenerateEta { eta });
    }
    if !(photons_in >= 0.0) || !photons_in.is_finite() {
        return Err(CoreError::InvalidParameter {
            name: "photons_in",
            reason: format!("must be finite and >= 0, got {photons_in}"),
        });
    }
    Ok(())
}

/// Mean count difference of the balanced polarimeter:
/// `eta * n_in * sin(phi_sig)`. Linear in the phase for small rotations.
///
/// # Errors
/// [`CoreError::DegenerateEta`] outside `eta` in `(0, 1]`;
/// [`CoreError::InvalidParameter`] for a negative photon number.
pub fn faraday_counts(eta: f64, photons_in: f64, phi_sig: f64) -> Result<f64> {
    check_eta_n(eta, photons_in)?;
    Ok(eta * photons_in * phi_sig.sin())
}

/// Count-difference variance: shot noise on the detected photons plus the
/// light-shift phase noise scaled to count units,
/// `eta n_in + (eta n_in)^2 phase_variance`.
pub fn count_variance(eta: f64, photons_in: f64, phase_variance: f64) -> Result<f64> {
    check_eta_n(eta, photons_in)?;
    if !(phase_variance >= 0.0) {
        return Err(CoreError::InvalidParameter {
            name: "phase_variance",
            reason: format!("must be >= 0, got {phase_variance}"),
        });
    }
    let detected = eta * photons_in;
    Ok(detected + detected * detected * phase_variance)
}

/// Assemble counts, variance and their ratio for one operating point.
pub fn detection_result(
    eta: f64,
    photons_in: f64,
    phi_sig: f64,
    phase_variance: f64,
) -> Result<DetectionResult> {
    let mean_counts = faraday_counts(eta, photons_in, phi_sig)?;
    let count_variance = count_variance(eta, photons_in, phase_variance)?;
    Ok(DetectionResult {
        mean_counts,
        count_variance,
        snr: mean_counts / count_variance.sqrt(),
    })
}

fn check_eta_open(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(CoreError::DegenerateEta { eta });
    }
    Ok(())
}

/// The noise bracket: total phase noise relative to pure shot noise,
/// `1 + (|Omega(0)|^2 / (shift_detuning gamma0))^2 eta (1 - eta) ln(1/eta)`,
/// for a cell tuned to transmission `eta` in the linear-absorption regime.
///
/// Exactly 2 at the optimal drive intensity.
pub fn noise_bracket(p: &AtomicParams, omega0_sq: f64, eta: f64) -> Result<f64> {
    check_eta_open(eta)?;
    let scaled = omega0_sq / (p.shift_detuning * p.gamma0);
    Ok(1.0 + scaled * scaled * eta * (1.0 - eta) * (1.0 / eta).ln())
}

/// Phase-noise budget of one operating point in the linear-absorption
/// regime: shot term `1/(eta n_in)` and light-shift term
/// `(omega0_sq / (shift_detuning gamma0))^2 (1 - eta) ln(1/eta) / n_in`.
pub fn phase_noise_budget(
    p: &AtomicParams,
    omega0_sq: f64,
    eta: f64,
    photons_in: f64,
) -> Result<NoiseBudget> {
    check_eta_open(eta)?;
    let scaled = omega0_sq / (p.shift_detuning * p.gamma0);
    let stark = scaled * scaled * (1.0 - eta) * (1.0 / eta).ln() / photons_in;
    NoiseBudget::new(eta, photons_in, stark)
}

/// Signal-to-noise ratio of the splitting measurement, signed like the
/// splitting:
/// `SNR = sign(delta0) sqrt(delta0^2/gamma0^2 * n_in eta ln^2(1/eta) / bracket)`.
pub fn snr(
    p: &AtomicParams,
    omega0_sq: f64,
    eta: f64,
    photons_in: f64,
    delta0: f64,
) -> Result<f64> {
    check_eta_n(eta, photons_in)?;
    let bracket = noise_bracket(p, omega0_sq, eta)?;
    let log = (1.0 / eta).ln();
    let magnitude =
        ((delta0 / p.gamma0).powi(2) * photons_in * eta * log * log / bracket).sqrt();
    Ok(delta0.signum() * magnitude)
}

/// Smallest splitting detectable with unit SNR:
/// `gamma0 sqrt(bracket / (n_in eta ln^2(1/eta)))`.
pub fn min_detectable_splitting(
    p: &AtomicParams,
    omega0_sq: f64,
    eta: f64,
    photons_in: f64,
) -> Result<f64> {
    check_eta_n(eta, photons_in)?;
    if photons_in == 0.0 {
        return Err(CoreError::InvalidParameter {
            name: "photons_in",
            reason: "need a positive photon number for a finite limit".into(),
        });
    }
    let bracket = noise_bracket(p, omega0_sq, eta)?;
    let log = (1.0 / eta).ln();
    Ok(p.gamma0 * (bracket / (photons_in * eta * log * log)).sqrt())
}

/// Drive intensity that balances shot and light-shift noise:
/// `|Omega(0)|^2_opt = shift_detuning gamma0 / sqrt(eta (1 - eta) ln(1/eta))`.
pub fn optimal_rabi_sq(p: &AtomicParams, eta: f64) -> Result<f64> {
    check_eta_open(eta)?;
    Ok(p.shift_detuning * p.gamma0 / (eta * (1.0 - eta) * (1.0 / eta).ln()).sqrt())
}

/// Transmission that minimises the quantum-limit factor `f`: the root of
/// `ln(1/eta) = 3 (1 - eta)`, close to 6% transmission.
pub fn optimal_transmission() -> f64 {
    bisect(
        |eta: f64| (1.0 / eta).ln() - 3.0 * (1.0 - eta),
        1e-3,
        0.5,
        1e-12,
    )
    .expect("the bracket [1e-3, 0.5] always straddles the root")
}

/// Geometry factor of the quantum limit for coherent input light:
/// `f = [(1 - eta) / (eta ln^3(1/eta))]^{1/4}`.
///
/// Stays within a factor of ~2 of unity across all practical transmissions
/// and dips slightly below 1 around its minimum near 6%.
pub fn sql_factor_f(eta: f64) -> Result<f64> {
    check_eta_open(eta)?;
    let log = (1.0 / eta).ln();
    Ok(((1.0 - eta) / (eta * log.powi(3))).powf(0.25))
}

/// Geometry factor with amplitude-squeezed input light:
/// `f_tilde = [(1 - eta)(ln(1/eta) + eta - 1) / (eta ln^4(1/eta))]^{1/4}`.
/// Approaches `f` for strong absorption of a weakly absorbed beam
/// (`eta -> 1` end of the integrand) and never exceeds it.
pub fn sql_factor_f_tilde(eta: f64) -> Result<f64> {
    check_eta_open(eta)?;
    let log = (1.0 / eta).ln();
    Ok(((1.0 - eta) * (log + eta - 1.0) / (eta * log.powi(4))).powf(0.25))
}

/// The power-independent quantum limit of the splitting measurement:
/// `gamma0 f(eta) sqrt((gamma_r / shift_detuning) (3 / 8 pi)
/// (lambda^2/A) / (gamma0 t_m))`.
///
/// The full-chain minimum [`min_detectable_splitting`] evaluated at
/// [`optimal_rabi_sq`] equals `sqrt(2)` times this value: the balanced
/// optimum pays equal shares of shot and light-shift noise.
pub fn sql_min_shift(p: &AtomicParams, eta: f64, budget: &PhotonBudget) -> Result<f64> {
    budget.validate()?;
    let f = sql_factor_f(eta)?;
    let inner = (p.gamma_r / p.shift_detuning)
        * (3.0 / (8.0 * std::f64::consts::PI))
        * budget.lambda_sq_over_a
        / budget.gamma0_tm;
    Ok(p.gamma0 * f * inner.sqrt())
}

/// Outcome of optimising the generic quantum limit over the photon-number
/// variance of the probe state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuantumLimitOptimum {
    /// An interior optimum exists at `n_var_opt = 1/beta`.
    Interior {
        /// Photon-number variance at the optimum.
        n_var_opt: f64,
        /// Minimum detectable shift there, `sqrt(2 beta) / chi_ratio`.
        min_shift: f64,
    },
    /// With no intensity-phase coupling the limit falls monotonically with
    /// photon-number variance; there is no interior optimum.
    ShotNoiseLimited,
}

fn check_quantum_limit_args(chi_ratio: f64, beta: f64) -> Result<()> {
    if !(chi_ratio > 0.0) || !chi_ratio.is_finite() {
        return Err(CoreError::InvalidParameter {
            name: "chi_ratio",
            reason: format!("dispersion-to-absorption ratio must be > 0, got {chi_ratio}"),
        });
    }
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(CoreError::InvalidParameter {
            name: "beta",
            reason: format!("intensity-phase coupling must be >= 0, got {beta}"),
        });
    }
    Ok(())
}

/// Generic interferometric limit on a resonance-shift measurement with a
/// probe of photon-number variance `n_var`, dispersion-to-absorption ratio
/// `chi_ratio` (units of time) and intensity-phase coupling `beta`:
/// `shift_min = sqrt(1/n_var + beta^2 n_var) / chi_ratio`.
pub fn generic_quantum_limit(chi_ratio: f64, beta: f64, n_var: f64) -> Result<f64> {
    check_quantum_limit_args(chi_ratio, beta)?;
    if !(n_var > 0.0) {
        return Err(CoreError::InvalidParameter {
            name: "n_var",
            reason: format!("photon-number variance must be > 0, got {n_var}"),
        });
    }
    Ok((1.0 / n_var + beta * beta * n_var).sqrt() / chi_ratio)
}

/// Optimise [`generic_quantum_limit`] over the photon-number variance.
///
/// With `chi_ratio = 1/gamma0` (the dispersion slope of the transparency
/// window) and `beta` read off the cell's accumulated intensity-phase
/// coupling, the interior optimum reproduces the structure of
/// [`sql_min_shift`] up to the geometry factor `f(eta)`.
pub fn generic_quantum_limit_optimum(chi_ratio: f64, beta: f64) -> Result<QuantumLimitOptimum> {
    check_quantum_limit_args(chi_ratio, beta)?;
    if beta == 0.0 {
        return Ok(QuantumLimitOptimum::ShotNoiseLimited);
    }
    Ok(QuantumLimitOptimum::Interior {
        n_var_opt: 1.0 / beta,
        min_shift: (2.0 * beta).sqrt() / chi_ratio,
    })
}

/// Evaluate one sweep point: intensity and photon number from the power
/// mapping, then the SNR = 1 splitting and the regime tag.
pub fn sensitivity_point(
    p: &AtomicParams,
    eta: f64,
    power_ratio: f64,
    budget: &PhotonBudget,
) -> Result<SensitivityPoint> {
    if !(power_ratio > 0.0) || !power_ratio.is_finite() {
        return Err(CoreError::InvalidParameter {
            name: "power_ratio",
            reason: format!("must be finite and > 0, got {power_ratio}"),
        });
    }
    budget.validate()?;
    let omega0_sq = power_to_rabi_sq(p, power_ratio);
    let photons_in = budget.photons_in(power_ratio);
    let min_delta0 = min_detectable_splitting(p, omega0_sq, eta, photons_in)?;
    let bracket = noise_bracket(p, omega0_sq, eta)?;
    Ok(SensitivityPoint {
        power_ratio,
        min_delta0,
        regime: Regime::from_stark_to_shot(bracket - 1.0),
    })
}

/// Sweep the minimum detectable splitting over a power grid for each
/// requested transmission. Points are computed in parallel; the output
/// order follows the input grids.
pub fn figure4_sweep(
    p: &AtomicParams,
    eta_list: &[f64],
    power_grid: &[f64],
    budget: &PhotonBudget,
) -> Result<Vec<SensitivityCurve>> {
    if eta_list.is_empty() || power_grid.is_empty() {
        return Err(CoreError::InvalidParameter {
            name: "power_grid",
            reason: "need at least one transmission and one power point".into(),
        });
    }
    eta_list
        .iter()
        .map(|&eta| {
            let points = power_grid
                .par_iter()
                .map(|&x| sensitivity_point(p, eta, x, budget))
                .collect::<Result<Vec<_>>>()?;
            Ok(SensitivityCurve { eta, points })
        })
        .collect()
}

/// Numerically locate the optimal power ratio for a given transmission by
/// golden-section search on the log-power axis; cross-checks the closed
/// form [`optimal_rabi_sq`].
pub fn numeric_optimal_power(
    p: &AtomicParams,
    eta: f64,
    budget: &PhotonBudget,
) -> Result<(f64, f64)> {
    check_eta_open(eta)?;
    budget.validate()?;
    let closed = optimal_rabi_sq(p, eta)? / (3.0 * p.gamma_r * p.gamma0);
    let objective = |ln_x: f64| {
        let x = ln_x.exp();
        sensitivity_point(p, eta, x, budget)
            .map(|pt| pt.min_delta0)
            .unwrap_or(f64::INFINITY)
    };
    let (ln_opt, _) = golden_min(
        objective,
        (closed / 50.0).ln(),
        (closed * 50.0).ln(),
        1e-9,
    );
    let x_opt = ln_opt.exp();
    let d_opt = sensitivity_point(p, eta, x_opt, budget)?.min_delta0;
    Ok((x_opt, d_opt))
}

/// One point of the optical-pumping-magnetometer comparison curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpmPoint {
    /// Input power in units of the reference power.
    pub power_ratio: f64,
    /// Minimum detectable splitting `width / sqrt(n_in)`.
    pub min_delta0: f64,
}

/// Schematic sensitivity of an absorption (optical-pumping) magnetometer:
/// resonance width `gamma0 + alpha |Omega| sqrt(gamma0 / gamma)` over the
/// shot-noise phase resolution `sqrt(n_in)`. Power broadening makes the
/// width grow like `sqrt(P)` once `|Omega|` exceeds `sqrt(gamma gamma0)`,
/// so the curve saturates at [`opm_plateau`] instead of improving.
pub fn opm_sensitivity_curve(
    p: &AtomicParams,
    alpha: f64,
    power_grid: &[f64],
    budget: &PhotonBudget,
) -> Result<Vec<OpmPoint>> {
    if power_grid.is_empty() {
        return Err(CoreError::InvalidParameter {
            name: "power_grid",
            reason: "need at least one power point".into(),
        });
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(CoreError::InvalidParameter {
            name: "alpha",
            reason: format!("broadening coefficient must be > 0, got {alpha}"),
        });
    }
    budget.validate()?;
    power_grid
        .par_iter()
        .map(|&x| {
            if !(x > 0.0) {
                return Err(CoreError::InvalidParameter {
                    name: "power_grid",
                    reason: format!("power ratios must be > 0, got {x}"),
                });
            }
            let omega = power_to_rabi_sq(p, x).sqrt();
            let width = p.gamma0 + alpha * omega * (p.gamma0 / p.gamma).sqrt();
            let n_in = budget.photons_in(x);
            Ok(OpmPoint {
                power_ratio: x,
                min_delta0: width / n_in.sqrt(),
            })
        })
        .collect()
}

/// High-power limit of the schematic absorption magnetometer:
/// `alpha gamma0 sqrt(3 (gamma_r / gamma) (lambda^2/A) / (8 pi gamma0 t_m))`,
/// independent of power because width and shot-noise resolution both grow
/// as `sqrt(P)`.
pub fn opm_plateau(p: &AtomicParams, alpha: f64, budget: &PhotonBudget) -> f64 {
    alpha
        * p.gamma0
        * (3.0 * (p.gamma_r / p.gamma) * budget.lambda_sq_over_a
            / (8.0 * std::f64::consts::PI * budget.gamma0_tm))
            .sqrt()
}
