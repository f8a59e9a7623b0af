//! Field propagation through the cell: intensity attenuation, component
//! phases, transmission, the polarisation-rotation signal phase, the bias
//! phase from a far-detuned beam, and the power-broadened lineshape.
//!
//! Inside the transparency window the medium absorbs only through the
//! residual ground-state dephasing, so the intensity obeys
//! `dI/dz = -(kappa gamma0 gamma_r / 2) I / (2 gamma gamma0 + I)`
//! in the symmetric (Faraday) configuration: linear, not exponential, decay
//! while `I` dominates the denominator, with transmission
//! `eta = 1 - alpha0 L` and `alpha0 = kappa gamma0 gamma_r / (2 I(0))`.
//! The circular components pick up phases whose difference, driven by the
//! ground splitting, is the measured rotation signal.

use crate::error::{CoreError, Result};
use crate::numeric::{bisect, cumtrapz, lin_spaced, rk4, simpson};
use crate::params::AtomicParams;
use num_complex::Complex64;

/// Default number of z-steps for intensity integration.
pub const DEFAULT_Z_STEPS: usize = 2048;
/// Default number of detuning samples for lineshape scans.
pub const DEFAULT_DETUNING_SAMPLES: usize = 4096;
/// Default relative tolerance for the step-doubling consistency check.
pub const DEFAULT_ODE_TOL: f64 = 1e-9;
/// Linear-absorption validity margin: the transmitted intensity must exceed
/// this multiple of `2 gamma gamma0` for the linear formula to be trusted.
const LINEAR_VALIDITY_FACTOR: f64 = 10.0;

/// Complex field amplitudes of the two circular components at one position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldState {
    /// Rabi amplitude of the plus component.
    pub omega_plus: Complex64,
    /// Rabi amplitude of the minus component.
    pub omega_minus: Complex64,
    /// Position inside the cell.
    pub z: f64,
}

impl FieldState {
    /// Total drive intensity `|omega_plus|^2 + |omega_minus|^2`.
    pub fn total_sq(&self) -> f64 {
        self.omega_plus.norm_sqr() + self.omega_minus.norm_sqr()
    }
}

/// Sampled total-intensity profile `I(z)` on a uniform z-grid.
///
/// `component_diff` records `|omega_plus|^2 - |omega_minus|^2`, which the
/// attenuation equation conserves exactly (both components lose intensity at
/// the same absolute rate); zero in the Faraday configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityProfile {
    /// Cell length.
    pub length: f64,
    /// Total intensity at the uniform grid `z_i = i * length / (len - 1)`.
    pub total: Vec<f64>,
    /// Conserved intensity imbalance between the circular components.
    pub component_diff: f64,
}

impl IntensityProfile {
    /// Intensity at the cell entrance.
    pub fn initial(&self) -> f64 {
        self.total[0]
    }

    /// Intensity at the cell exit.
    pub fn transmitted(&self) -> f64 {
        *self.total.last().expect("profile is never empty")
    }

    /// Transmission `I(L) / I(0)`.
    pub fn eta(&self) -> f64 {
        self.transmitted() / self.initial()
    }

    /// Grid spacing.
    pub fn dz(&self) -> f64 {
        self.length / (self.total.len() - 1) as f64
    }

    /// Linearly interpolated intensity at an arbitrary position.
    pub fn at(&self, z: f64) -> f64 {
        let n = self.total.len() - 1;
        let t = (z / self.length).clamp(0.0, 1.0) * n as f64;
        let i = (t.floor() as usize).min(n - 1);
        let frac = t - i as f64;
        self.total[i] * (1.0 - frac) + self.total[i + 1] * frac
    }

    /// Build a profile from a prescribed absorption model instead of the
    /// attenuation equation; used by the lineshape and noise quadratures.
    pub fn from_model(
        model: AbsorptionModel,
        initial: f64,
        length: f64,
        samples: usize,
    ) -> Result<Self> {
        if !(initial > 0.0) {
            return Err(CoreError::InvalidParameter {
                name: "initial",
                reason: format!("input intensity must be > 0, got {initial}"),
            });
        }
        if !(length > 0.0) || samples < 2 {
            return Err(CoreError::InvalidParameter {
                name: "length",
                reason: "need positive length and at least two samples".into(),
            });
        }
        model.validate()?;
        let total = lin_spaced(0.0, 1.0, samples)
            .into_iter()
            .map(|u| initial * model.relative_intensity(u))
            .collect();
        Ok(IntensityProfile {
            length,
            total,
            component_diff: 0.0,
        })
    }
}

/// Prescribed intensity profiles for scans where the absorption mechanism is
/// an input rather than a result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AbsorptionModel {
    /// No absorption: `I(z) = I(0)`.
    Constant,
    /// Linear decay losing `absorbed_fraction` of the input over the cell.
    Linear {
        /// Fraction of the input intensity absorbed at `z = L`; in `[0, 1)`.
        absorbed_fraction: f64,
    },
    /// Beer-Lambert decay `I(z) = I(0) exp(-optical_depth * z / L)`.
    Exponential {
        /// Total optical depth of the cell.
        optical_depth: f64,
    },
}

impl AbsorptionModel {
    fn validate(&self) -> Result<()> {
        match *self {
            AbsorptionModel::Constant => Ok(()),
            AbsorptionModel::Linear { absorbed_fraction } => {
                if (0.0..1.0).contains(&absorbed_fraction) {
                    Ok(())
                } else {
                    Err(CoreError::InvalidParameter {
                        name: "absorbed_fraction",
                        reason: format!("must lie in [0, 1), got {absorbed_fraction}"),
                    })
                }
            }
            AbsorptionModel::Exponential { optical_depth } => {
                if optical_depth >= 0.0 && optical_depth.is_finite() {
                    Ok(())
                } else {
                    Err(CoreError::InvalidParameter {
                        name: "optical_depth",
                        reason: format!("must be finite and >= 0, got {optical_depth}"),
                    })
                }
            }
        }
    }

    /// Intensity relative to the input at fractional position `u = z / L`.
    fn relative_intensity(&self, u: f64) -> f64 {
        match *self {
            AbsorptionModel::Constant => 1.0,
            AbsorptionModel::Linear { absorbed_fraction } => 1.0 - absorbed_fraction * u,
            AbsorptionModel::Exponential { optical_depth } => (-optical_depth * u).exp(),
        }
    }
}

/// Linear absorption coefficient `alpha0 = kappa gamma0 gamma_r / (2 I(0))`.
pub fn linear_absorption_coefficient(p: &AtomicParams, omega0_sq: f64) -> f64 {
    p.kappa * p.gamma0 * p.gamma_r / (2.0 * omega0_sq)
}

/// Cell length that gives transmission `eta` in the linear-absorption model.
pub fn length_for_transmission(p: &AtomicParams, omega0_sq: f64, eta: f64) -> Result<f64> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(CoreError::DegenerateEta { eta });
    }
    Ok((1.0 - eta) / linear_absorption_coefficient(p, omega0_sq))
}

/// Integrate the intensity attenuation equation for both circular
/// components with fixed-step RK4.
///
/// Each component obeys
/// `dI_pm/dz = -kappa gamma0 gamma_r (I_plus I_minus / I) / (2 gamma gamma0 + I)`,
/// so both lose intensity at the same absolute rate. The input is split
/// evenly between the components (Faraday configuration). A second pass at
/// doubled resolution guards the step size.
///
/// # Errors
/// * [`CoreError::StepTooCoarse`] if the `steps` and `2 * steps` results
///   disagree by more than `rel_tol` in relative terms.
/// * [`CoreError::IntensityUnderflow`] if the intensity reaches zero inside
///   the cell (the cell is longer than total absorption allows).
/// * [`CoreError::InvalidParameter`] for a non-positive input intensity or
///   length.
pub fn propagate_intensity_ode(
    p: &AtomicParams,
    omega0_sq: f64,
    length: f64,
    steps: usize,
    rel_tol: f64,
) -> Result<IntensityProfile> {
    if !(omega0_sq > 0.0) {
        return Err(CoreError::InvalidParameter {
            name: "omega0_sq",
            reason: format!("input intensity must be > 0, got {omega0_sq}"),
        });
    }
    if !(length > 0.0) || steps == 0 {
        return Err(CoreError::InvalidParameter {
            name: "length",
            reason: "need positive length and at least one step".into(),
        });
    }

    let strength = p.kappa * p.gamma0 * p.gamma_r;
    let saturation = 2.0 * p.gamma * p.gamma0;
    let rhs = move |_z: f64, y: &[f64; 2]| {
        let total = y[0] + y[1];
        let rate = -strength * (y[0] * y[1] / total) / (saturation + total);
        [rate, rate]
    };

    let y0 = [0.5 * omega0_sq, 0.5 * omega0_sq];
    let coarse = rk4(rhs, y0, 0.0, length, steps);
    let fine = rk4(rhs, y0, 0.0, length, 2 * steps);

    let dz = length / steps as f64;
    for (i, y) in coarse.iter().enumerate() {
        if !(y[0] > 0.0 && y[1] > 0.0) || !y[0].is_finite() || !y[1].is_finite() {
            return Err(CoreError::IntensityUnderflow { z: i as f64 * dz });
        }
    }

    let end_coarse = coarse.last().unwrap()[0] + coarse.last().unwrap()[1];
    let end_fine = fine.last().unwrap()[0] + fine.last().unwrap()[1];
    if !(end_fine > 0.0) {
        return Err(CoreError::IntensityUnderflow { z: length });
    }
    let residual = (end_coarse - end_fine).abs() / end_fine.abs();
    if residual > rel_tol {
        return Err(CoreError::StepTooCoarse {
            steps,
            residual,
            tol: rel_tol,
        });
    }

    Ok(IntensityProfile {
        length,
        total: coarse.iter().map(|y| y[0] + y[1]).collect(),
        component_diff: 0.0,
    })
}

/// Transmission from the implicit solution of the attenuation equation.
///
/// The equation integrates exactly to
/// `I + 2 gamma gamma0 ln I = I(0) + 2 gamma gamma0 ln I(0) - (kappa gamma0 gamma_r / 2) L`,
/// solved here by bisection; serves as the high-precision reference for the
/// RK4 path.
pub fn transmission_implicit(p: &AtomicParams, omega0_sq: f64, length: f64) -> Result<f64> {
    if !(omega0_sq > 0.0) {
        return Err(CoreError::InvalidParameter {
            name: "omega0_sq",
            reason: format!("input intensity must be > 0, got {omega0_sq}"),
        });
    }
    let c = 2.0 * p.gamma * p.gamma0;
    let a = p.kappa * p.gamma0 * p.gamma_r / 2.0;
    if a == 0.0 {
        return Ok(1.0); // no absorption channel at all
    }
    let target = omega0_sq + c * omega0_sq.ln() - a * length;
    let g = |i: f64| i + c * i.ln() - target;
    // g is strictly increasing in I; the exit intensity lies in (0, I(0)].
    if g(omega0_sq) <= 0.0 {
        return Ok(1.0);
    }
    let lo = 1e-300;
    let i_out = bisect(g, lo, omega0_sq, 1e-16 * omega0_sq)?;
    Ok(i_out / omega0_sq)
}

/// Transmission of the cell in the linear model and from the full equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmissionResult {
    /// Linear-absorption value `1 - alpha0 L`.
    pub eta_linear: f64,
    /// Value from integrating the full attenuation equation.
    pub eta_ode: f64,
    /// Whether the linear formula is trustworthy here: the transmitted
    /// intensity must stay well above the saturation scale `2 gamma gamma0`.
    pub in_linear_regime: bool,
}

impl TransmissionResult {
    /// Best available transmission: the linear value inside its validity
    /// window, the integrated value otherwise.
    pub fn eta(&self) -> f64 {
        if self.in_linear_regime {
            self.eta_linear
        } else {
            self.eta_ode
        }
    }
}

/// Compute the transmission both ways and flag the validity of the linear
/// formula.
///
/// # Errors
/// As [`propagate_intensity_ode`], which supplies the reference value.
pub fn transmission(
    p: &AtomicParams,
    omega0_sq: f64,
    length: f64,
    steps: usize,
) -> Result<TransmissionResult> {
    let eta_linear = 1.0 - linear_absorption_coefficient(p, omega0_sq) * length;
    let profile = propagate_intensity_ode(p, omega0_sq, length, steps, DEFAULT_ODE_TOL)?;
    let eta_ode = profile.eta();
    let in_linear_regime =
        eta_linear > 0.0 && eta_linear * omega0_sq >= LINEAR_VALIDITY_FACTOR * 2.0 * p.gamma * p.gamma0;
    Ok(TransmissionResult {
        eta_linear,
        eta_ode,
        in_linear_regime,
    })
}

/// Cumulative phases of the two circular components along the cell.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePair {
    /// Phase of the plus component at each profile grid point.
    pub plus: Vec<f64>,
    /// Phase of the minus component at each profile grid point.
    pub minus: Vec<f64>,
}

impl PhasePair {
    /// Relative phase `phi_plus - phi_minus` at the cell exit.
    pub fn relative_at_exit(&self) -> f64 {
        self.plus.last().unwrap() - self.minus.last().unwrap()
    }
}

/// Integrate the component phase equations on a sampled profile.
///
/// Each component advances as
/// `dphi_pm/dz = (kappa gamma_r / 2 gamma) [Delta gamma0 -+ gamma (delta0/2 +- shift_pm(z))] / (2 gamma gamma0 + I(z))`,
/// accumulated with the trapezoid rule on the profile grid. The one-photon
/// detuning enters both components identically and cancels from their
/// difference.
pub fn propagate_phases(
    p: &AtomicParams,
    profile: &IntensityProfile,
    shift_plus: impl Fn(f64) -> f64,
    shift_minus: impl Fn(f64) -> f64,
) -> PhasePair {
    let pref = p.kappa * p.gamma_r / (2.0 * p.gamma);
    let dz = profile.dz();
    let n = profile.total.len();
    let mut integrand_p = Vec::with_capacity(n);
    let mut integrand_m = Vec::with_capacity(n);
    for (i, &intensity) in profile.total.iter().enumerate() {
        let z = i as f64 * dz;
        let denom = 2.0 * p.gamma * p.gamma0 + intensity;
        let common = p.optical_detuning * p.gamma0;
        integrand_p.push(
            pref * (common - p.gamma * (0.5 * p.ground_splitting + shift_plus(z))) / denom,
        );
        integrand_m.push(
            pref * (common + p.gamma * (0.5 * p.ground_splitting - shift_minus(z))) / denom,
        );
    }
    PhasePair {
        plus: cumtrapz(&integrand_p, dz),
        minus: cumtrapz(&integrand_m, dz),
    }
}

/// Relative phase accumulated through the cell by quadrature.
///
/// The difference of the component phase equations reduces to
/// `dphi/dz = -(kappa gamma_r / 2) (delta0 + shift_plus - shift_minus) / I(z)`;
/// with position-independent shifts this is integrated here with Simpson's
/// rule on the profile grid. In the Faraday configuration the shifts are
/// equal and only the ground splitting drives the rotation.
pub fn relative_phase(
    p: &AtomicParams,
    profile: &IntensityProfile,
    shift_plus: f64,
    shift_minus: f64,
) -> Result<f64> {
    if profile.total.iter().any(|&i| i <= 0.0) {
        return Err(CoreError::ProfileNonPositive);
    }
    let two_photon = p.ground_splitting + shift_plus - shift_minus;
    let pref = -p.kappa * p.gamma_r / 2.0 * two_photon;
    let integrand: Vec<f64> = profile.total.iter().map(|&i| pref / i).collect();
    Ok(simpson(&integrand, profile.dz()))
}

/// Closed-form relative phase between entrance and exit intensities.
///
/// Combining the relative-phase equation with the attenuation equation and
/// integrating in the intensity variable gives
/// `phi = -(delta0/gamma0) [ln(I0/IL) + 2 gamma gamma0 (1/IL - 1/I0)]`,
/// exact for the full (not just linear) attenuation.
pub fn relative_phase_exact(p: &AtomicParams, i_in: f64, i_out: f64) -> f64 {
    let c = 2.0 * p.gamma * p.gamma0;
    -(p.ground_splitting / p.gamma0) * ((i_in / i_out).ln() + c * (1.0 / i_out - 1.0 / i_in))
}

/// Signal phase of the rotation measurement in the linear-absorption regime.
///
/// `phi_sig = -(delta0 / gamma0) ln(1/eta)` with `eta = 1 - alpha0 L`; the
/// logarithmic gain in `1/eta` is what rewards strong (but not total)
/// absorption.
///
/// # Errors
/// [`CoreError::DegenerateEta`] when the linear transmission leaves `(0, 1]`.
pub fn signal_phase(p: &AtomicParams, omega0_sq: f64, length: f64) -> Result<f64> {
    let eta = 1.0 - linear_absorption_coefficient(p, omega0_sq) * length;
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(CoreError::DegenerateEta { eta });
    }
    Ok(-(p.ground_splitting / p.gamma0) * (1.0 / eta).ln())
}

/// Bias phase a far-detuned beam imprints in an asymmetric configuration.
///
/// By quadrature: `integral dz I(z) / shift_detuning`. In the symmetric
/// Faraday configuration the mean shifts of the two legs are equal and
/// cancel from the relative phase, so the bias is exactly zero there.
pub fn bias_light_shift_phase(
    profile: &IntensityProfile,
    shift_detuning: f64,
    faraday_symmetric: bool,
) -> f64 {
    if faraday_symmetric {
        return 0.0;
    }
    let integrand: Vec<f64> = profile.total.iter().map(|&i| i / shift_detuning).collect();
    simpson(&integrand, profile.dz())
}

/// Full propagation result for one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationSolution {
    /// Transmission, linear and integrated.
    pub transmission: TransmissionResult,
    /// Relative (signal) phase at the exit, from quadrature on the profile.
    pub phi_sig: f64,
    /// Bias phase (zero in the Faraday configuration).
    pub phi_bias: f64,
    /// The sampled intensity profile.
    pub profile: IntensityProfile,
    /// Component phases along the cell.
    pub phases: PhasePair,
}

impl PropagationSolution {
    /// Field amplitudes at profile grid point `i` (moduli from the intensity
    /// split, phases from the accumulated component phases).
    pub fn field_state(&self, i: usize) -> FieldState {
        let total = self.profile.total[i];
        let plus_sq = 0.5 * (total + self.profile.component_diff);
        let minus_sq = 0.5 * (total - self.profile.component_diff);
        FieldState {
            omega_plus: Complex64::from_polar(plus_sq.max(0.0).sqrt(), self.phases.plus[i]),
            omega_minus: Complex64::from_polar(minus_sq.max(0.0).sqrt(), self.phases.minus[i]),
            z: i as f64 * self.profile.dz(),
        }
    }
}

/// Propagate intensity and phases through the cell in the Faraday
/// configuration with equal constant light shifts on both legs.
pub fn propagate(
    p: &AtomicParams,
    omega0_sq: f64,
    length: f64,
    steps: usize,
    shift: f64,
) -> Result<PropagationSolution> {
    let profile = propagate_intensity_ode(p, omega0_sq, length, steps, DEFAULT_ODE_TOL)?;
    let eta_linear = 1.0 - linear_absorption_coefficient(p, omega0_sq) * length;
    let in_linear_regime =
        eta_linear > 0.0 && eta_linear * omega0_sq >= LINEAR_VALIDITY_FACTOR * 2.0 * p.gamma * p.gamma0;
    let transmission = TransmissionResult {
        eta_linear,
        eta_ode: profile.eta(),
        in_linear_regime,
    };
    let phases = propagate_phases(p, &profile, |_| shift, |_| shift);
    let phi_sig = relative_phase(p, &profile, shift, shift)?;
    let phi_bias = bias_light_shift_phase(&profile, p.shift_detuning, true);
    Ok(PropagationSolution {
        transmission,
        phi_sig,
        phi_bias,
        profile,
        phases,
    })
}

/// Length-averaged absorption spectrum of a shifted resonance.
///
/// For each detuning on `grid`, returns
/// `(1/L) integral dz gamma0 / (gamma0^2 + (detuning + I(z)/shift_detuning)^2)`:
/// a resonance whose centre is dragged along z by the local light shift.
/// With constant intensity this is a pure displacement; an absorbed profile
/// smears the line over the range of shifts, broadening it in proportion to
/// the input intensity.
pub fn broadened_lineshape(
    p: &AtomicParams,
    omega0_sq: f64,
    grid: &[f64],
    model: AbsorptionModel,
    z_samples: usize,
) -> Result<Vec<f64>> {
    let shifts = shift_samples(p, omega0_sq, model, z_samples)?;
    Ok(grid
        .iter()
        .map(|&d| lineshape_value(p.gamma0, &shifts, d))
        .collect())
}

/// Local light shifts at z midpoints for a prescribed absorption model.
fn shift_samples(
    p: &AtomicParams,
    omega0_sq: f64,
    model: AbsorptionModel,
    z_samples: usize,
) -> Result<Vec<f64>> {
    if z_samples < 2 {
        return Err(CoreError::InvalidParameter {
            name: "z_samples",
            reason: "need at least two z samples".into(),
        });
    }
    model.validate()?;
    Ok((0..z_samples)
        .map(|j| {
            let u = (j as f64 + 0.5) / z_samples as f64;
            omega0_sq * model.relative_intensity(u) / p.shift_detuning
        })
        .collect())
}

fn lineshape_value(gamma0: f64, shifts: &[f64], detuning: f64) -> f64 {
    let sum: f64 = shifts
        .iter()
        .map(|&s| gamma0 / (gamma0 * gamma0 + (detuning + s) * (detuning + s)))
        .sum();
    sum / shifts.len() as f64
}

/// Full width at half maximum of the broadened lineshape, found by scanning
/// a detuning grid spanning the shift range and refining the half-maximum
/// crossings by bisection.
///
/// # Errors
/// [`CoreError::GridTooCoarse`] if fewer than four grid spacings separate
/// the half-maximum crossings at the requested resolution.
pub fn lineshape_fwhm(
    p: &AtomicParams,
    omega0_sq: f64,
    model: AbsorptionModel,
    z_samples: usize,
    detuning_samples: usize,
) -> Result<f64> {
    let shifts = shift_samples(p, omega0_sq, model, z_samples)?;
    let max_shift = shifts.iter().cloned().fold(f64::MIN, f64::max);
    let min_shift = shifts.iter().cloned().fold(f64::MAX, f64::min);
    // The resonance lives where detuning + shift ~ 0; pad by many linewidths.
    let lo = -max_shift - 12.0 * p.gamma0;
    let hi = -min_shift + 12.0 * p.gamma0;
    let grid = lin_spaced(lo, hi, detuning_samples);
    let values: Vec<f64> = grid
        .iter()
        .map(|&d| lineshape_value(p.gamma0, &shifts, d))
        .collect();

    let (peak_idx, &peak) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("grid is non-empty");
    let half = 0.5 * peak;
    let s = |d: f64| lineshape_value(p.gamma0, &shifts, d) - half;

    // Nearest grid points below half maximum on each side of the peak.
    let left_idx = (0..peak_idx)
        .rev()
        .find(|&i| values[i] < half)
        .ok_or(CoreError::GridTooCoarse)?;
    let right_idx = (peak_idx + 1..values.len())
        .find(|&i| values[i] < half)
        .ok_or(CoreError::GridTooCoarse)?;

    let dx = grid[1] - grid[0];
    let left = bisect(&s, grid[left_idx], grid[left_idx + 1], 1e-14 * dx.abs())?;
    let right = bisect(&s, grid[right_idx - 1], grid[right_idx], 1e-14 * dx.abs())?;
    let width = right - left;
    if width < 4.0 * dx {
        return Err(CoreError::GridTooCoarse);
    }
    Ok(width)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    /// Parameter set used by the transmission reference tests.
    fn thin_params(gamma0: f64) -> AtomicParams {
        AtomicParams {
            gamma: 1.0,
            gamma_r: 1.0,
            gamma0,
            gamma0_r: 0.0,
            optical_detuning: 0.0,
            ground_splitting: 0.0,
            shift_detuning: 1e3,
            kappa: 1.0,
        }
    }

    #[test]
    fn no_dephasing_means_no_absorption() {
        let p = thin_params(0.0);
        let profile = propagate_intensity_ode(&p, 0.4, 10.0, 64, 1e-12).unwrap();
        for &i in &profile.total {
            assert_relative_eq!(i, 0.4, max_relative = 1e-15);
        }
    }

    #[test]
    fn rk4_matches_implicit_solution_to_high_precision() {
        // Frozen reference: gamma0 = 1e-6, I(0) = 1, L chosen so the linear
        // model gives eta = 0.06. The implicit solution of the attenuation
        // equation is the oracle.
        let p = thin_params(1e-6);
        let length = 0.94 / linear_absorption_coefficient(&p, 1.0);
        let profile =
            propagate_intensity_ode(&p, 1.0, length, DEFAULT_Z_STEPS, DEFAULT_ODE_TOL).unwrap();
        let eta_impl = transmission_implicit(&p, 1.0, length).unwrap();
        assert_relative_eq!(eta_impl, 6.000562663388791e-2, max_relative = 1e-12);
        assert_relative_eq!(profile.eta(), eta_impl, max_relative = 1e-12);
    }

    #[test]
    fn rk4_convergence_order_is_at_least_3_5() {
        // Coarse grids on a strongly saturated case; the implicit solution
        // is exact, so the error ratio measures the integrator order.
        let p = thin_params(0.1);
        let i_exact = transmission_implicit(&p, 1.0, 30.0).unwrap();
        let err = |steps: usize| {
            let prof = propagate_intensity_ode(&p, 1.0, 30.0, steps, 1.0).unwrap();
            (prof.eta() - i_exact).abs()
        };
        let order = (err(8) / err(16)).log2();
        assert!(order >= 3.5, "measured order {order:.2}");
    }

    #[test]
    fn step_too_coarse_is_reported() {
        let p = thin_params(0.1);
        let r = propagate_intensity_ode(&p, 1.0, 30.0, 4, 1e-12);
        assert!(matches!(r, Err(CoreError::StepTooCoarse { .. })));
    }

    #[test]
    fn overlong_cell_underflows() {
        let p = thin_params(1e-2);
        // Linear estimate eats the full intensity after L = 2/gamma0; go far
        // beyond so even the log-slowed tail crosses machine range.
        let r = propagate_intensity_ode(&p, 1.0, 1e4, 512, 1.0);
        assert!(matches!(r, Err(CoreError::IntensityUnderflow { .. })));
    }

    #[test]
    fn zero_input_rejected() {
        let p = thin_params(1e-3);
        assert!(propagate_intensity_ode(&p, 0.0, 1.0, 16, 1e-9).is_err());
        assert!(transmission_implicit(&p, 0.0, 1.0).is_err());
    }

    #[test]
    fn empty_cell_transmits_everything() {
        let p = thin_params(1e-3);
        let t = transmission(&p, 1.0, 1e-9, 16).unwrap();
        assert_relative_eq!(t.eta_linear, 1.0, max_relative = 1e-9);
        assert_relative_eq!(t.eta_ode, 1.0, max_relative = 1e-9);
        assert!(t.in_linear_regime);
    }

    #[test]
    fn linear_and_ode_transmission_agree_deep_in_validity() {
        // |Omega(L)|^2 = eta * I0 >> 2 gamma gamma0 by six orders: the
        // linear formula should hold to ~1e-4 absolute.
        let p = thin_params(1e-7);
        let length = length_for_transmission(&p, 1.0, 0.5).unwrap();
        let t = transmission(&p, 1.0, length, DEFAULT_Z_STEPS).unwrap();
        assert!(t.in_linear_regime);
        assert_abs_diff_eq!(t.eta_linear, t.eta_ode, epsilon = 1e-4);
    }

    #[test]
    fn linear_validity_flag_trips_near_saturation() {
        // eta * I0 = 0.06 * 20 * gamma gamma0: below the factor-10 margin.
        let p = thin_params(0.05);
        let i0 = 1.0; // I0 = 20 gamma gamma0
        let length = length_for_transmission(&p, i0, 0.06).unwrap();
        let t = transmission(&p, i0, length, DEFAULT_Z_STEPS).unwrap();
        assert!(!t.in_linear_regime);
        assert_eq!(t.eta(), t.eta_ode);
    }

    #[test]
    fn relative_phase_quadrature_matches_exact_form() {
        // Frozen reference: gamma0 = 1e-3, splitting = 1e-2 gamma0, I0 = 1,
        // L for linear eta = 0.06.
        let mut p = thin_params(1e-3);
        p.ground_splitting = 1e-5;
        let length = 0.94 / linear_absorption_coefficient(&p, 1.0);
        let profile =
            propagate_intensity_ode(&p, 1.0, length, 4096, DEFAULT_ODE_TOL).unwrap();
        let phi_quad = relative_phase(&p, &profile, 0.0, 0.0).unwrap();
        let phi_exact = relative_phase_exact(&p, profile.initial(), profile.transmitted());
        assert_relative_eq!(phi_exact, -2.754981582512e-2, max_relative = 1e-10);
        assert_relative_eq!(phi_quad, phi_exact, max_relative = 1e-10);
        // The linear-regime formula is off by the saturation correction here
        // (about 2%), by construction of this near-saturated point.
        let phi_lin = signal_phase(&p, 1.0, length).unwrap();
        assert_relative_eq!(phi_lin, -2.813410716760e-2, max_relative = 1e-10);
    }

    #[test]
    fn signal_phase_reference_value() {
        // eta = 0.06 at splitting = 1e-2 gamma0: phi = -0.01 ln(1/0.06).
        let mut p = thin_params(1e-3);
        p.ground_splitting = 1e-5;
        let length = length_for_transmission(&p, 1.0, 0.06).unwrap();
        let phi = signal_phase(&p, 1.0, length).unwrap();
        assert_relative_eq!(phi, -1e-2 * (1.0f64 / 0.06).ln(), max_relative = 1e-12);
        assert!(phi < 0.0);
    }

    #[test]
    fn signal_phase_is_linear_and_odd_in_splitting() {
        let mut p = thin_params(1e-3);
        let length = length_for_transmission(&p, 1.0, 0.3).unwrap();
        p.ground_splitting = 2e-5;
        let phi2 = signal_phase(&p, 1.0, length).unwrap();
        p.ground_splitting = -1e-5;
        let phi_neg = signal_phase(&p, 1.0, length).unwrap();
        assert_relative_eq!(phi2, -2.0 * phi_neg, max_relative = 1e-12);
        p.ground_splitting = 0.0;
        assert_eq!(signal_phase(&p, 1.0, length).unwrap(), 0.0);
    }

    #[test]
    fn component_phases_cancel_detuning_dependence() {
        let mut p = thin_params(1e-3);
        p.ground_splitting = 1e-5;
        let length = length_for_transmission(&p, 1.0, 0.3).unwrap();
        let profile = propagate_intensity_ode(&p, 1.0, length, 512, 1e-9).unwrap();
        p.optical_detuning = 0.0;
        let rel0 = propagate_phases(&p, &profile, |_| 0.0, |_| 0.0).relative_at_exit();
        p.optical_detuning = 0.25;
        let phases = propagate_phases(&p, &profile, |_| 0.0, |_| 0.0);
        let rel = phases.relative_at_exit();
        // The detuning moves each phase but not their difference.
        assert_relative_eq!(rel, rel0, max_relative = 1e-12);
        assert!(phases.plus.last().unwrap().abs() > 1e-6);
    }

    #[test]
    fn symmetric_shifts_produce_no_relative_phase_without_splitting() {
        let p = thin_params(1e-3); // splitting zero
        let length = length_for_transmission(&p, 1.0, 0.3).unwrap();
        let profile = propagate_intensity_ode(&p, 1.0, length, 256, 1e-9).unwrap();
        let pair = propagate_phases(&p, &profile, |_| 3e-4, |_| 3e-4);
        assert_abs_diff_eq!(pair.relative_at_exit(), 0.0, epsilon = 1e-15);
        let phi = relative_phase(&p, &profile, 3e-4, 3e-4).unwrap();
        assert_abs_diff_eq!(phi, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn bias_phase_vanishes_in_faraday_mode() {
        let p = thin_params(1e-3);
        let profile =
            IntensityProfile::from_model(AbsorptionModel::Constant, 0.5, 2.0, 64).unwrap();
        assert_eq!(bias_light_shift_phase(&profile, p.shift_detuning, true), 0.0);
    }

    #[test]
    fn bias_phase_constant_profile() {
        let profile =
            IntensityProfile::from_model(AbsorptionModel::Constant, 0.5, 2.0, 64).unwrap();
        let bias = bias_light_shift_phase(&profile, 1e3, false);
        assert_relative_eq!(bias, 0.5 * 2.0 / 1e3, max_relative = 1e-12);
    }

    #[test]
    fn bias_phase_linear_profile() {
        // integral of I0 (1 - 0.5 z/L) over the cell = I0 L (1 + eta) / 2.
        let profile = IntensityProfile::from_model(
            AbsorptionModel::Linear { absorbed_fraction: 0.5 },
            0.8,
            3.0,
            257,
        )
        .unwrap();
        let bias = bias_light_shift_phase(&profile, 2e3, false);
        assert_relative_eq!(bias, 0.8 * 3.0 * 0.75 / 2e3, max_relative = 1e-10);
    }

    #[test]
    fn lineshape_unshifted_is_bare_lorentzian() {
        let p = thin_params(1e-3);
        let values = broadened_lineshape(
            &p,
            0.0,
            &[0.0, 1e-3, -1e-3, 2e-3],
            AbsorptionModel::Constant,
            64,
        )
        .unwrap();
        // Height 1/gamma0 at centre, half that one linewidth away.
        assert_relative_eq!(values[0], 1.0 / p.gamma0, max_relative = 1e-12);
        assert_relative_eq!(values[1], 0.5 / p.gamma0, max_relative = 1e-12);
        assert_relative_eq!(values[2], values[1], max_relative = 1e-12);
        // The half-maximum reference is the grid-sampled peak, which can sit
        // half a spacing off the true maximum; that biases the width by
        // about (dx/2)^2 / gamma0^2 relative, here ~9e-6.
        let fwhm = lineshape_fwhm(&p, 0.0, AbsorptionModel::Constant, 64, 4096).unwrap();
        assert_relative_eq!(fwhm, 2.0 * p.gamma0, max_relative = 5e-5);
    }

    #[test]
    fn constant_intensity_only_shifts_the_line() {
        let p = thin_params(1e-3);
        let i0 = 0.3;
        let centre = -i0 / p.shift_detuning;
        let values = broadened_lineshape(
            &p,
            i0,
            &[centre, centre + p.gamma0, centre - p.gamma0],
            AbsorptionModel::Constant,
            64,
        )
        .unwrap();
        assert_relative_eq!(values[0], 1.0 / p.gamma0, max_relative = 1e-12);
        assert_relative_eq!(values[1], 0.5 / p.gamma0, max_relative = 1e-12);
        // Same grid-peak bias allowance as the unshifted case.
        let fwhm = lineshape_fwhm(&p, i0, AbsorptionModel::Constant, 64, 4096).unwrap();
        assert_relative_eq!(fwhm, 2.0 * p.gamma0, max_relative = 5e-5);
    }

    #[test]
    fn lineshape_fwhm_reference_values() {
        // Frozen references: gamma0 = 1e-3, shift detuning 1e3, linear model
        // with 50% absorption, input powers {30, 100, 300} in units of
        // shift_detuning * gamma0.
        let p = thin_params(1e-3);
        let model = AbsorptionModel::Linear { absorbed_fraction: 0.5 };
        let unit = p.shift_detuning * p.gamma0;
        let f30 = lineshape_fwhm(&p, 30.0 * unit, model, 2048, 4096).unwrap();
        let f100 = lineshape_fwhm(&p, 100.0 * unit, model, 2048, 4096).unwrap();
        let f300 = lineshape_fwhm(&p, 300.0 * unit, model, 2048, 4096).unwrap();
        assert_relative_eq!(f30, 1.513275e-2, max_relative = 1e-5);
        assert_relative_eq!(f100, 5.003998e-2, max_relative = 1e-5);
        assert_relative_eq!(f300, 1.500133e-1, max_relative = 1e-5);
    }

    #[test]
    fn coarse_detuning_grid_is_rejected() {
        let p = thin_params(1e-3);
        let r = lineshape_fwhm(&p, 0.0, AbsorptionModel::Constant, 64, 8);
        assert!(matches!(r, Err(CoreError::GridTooCoarse)));
    }

    #[test]
    fn from_model_rejects_full_absorption() {
        let r = IntensityProfile::from_model(
            AbsorptionModel::Linear { absorbed_fraction: 1.0 },
            1.0,
            1.0,
            16,
        );
        assert!(r.is_err());
    }

    #[test]
    fn propagate_assembles_consistent_solution() {
        let mut p = thin_params(1e-3);
        p.ground_splitting = 1e-5;
        let length = length_for_transmission(&p, 1.0, 0.3).unwrap();
        let sol = propagate(&p, 1.0, length, 512, 2e-4).unwrap();
        assert_eq!(sol.phi_bias, 0.0);
        assert!(sol.transmission.in_linear_regime);
        // Quadrature signal phase against the exact closed form.
        let exact = relative_phase_exact(&p, sol.profile.initial(), sol.profile.transmitted());
        assert_relative_eq!(sol.phi_sig, exact, max_relative = 1e-6);
        // Field states carry the Faraday split.
        let fs = sol.field_state(0);
        assert_relative_eq!(fs.omega_plus.norm_sqr(), 0.5, max_relative = 1e-12);
        assert_relative_eq!(fs.total_sq(), 1.0, max_relative = 1e-12);
    }

    proptest! {
        #[test]
        fn prop_intensity_profile_is_monotone(
            gamma0 in 1e-6f64..1e-2,
            i0 in 1e-3f64..2.0,
            absorbed in 0.05f64..0.9,
        ) {
            let p = thin_params(gamma0);
            let length = length_for_transmission(&p, i0, 1.0 - absorbed).unwrap();
            let profile = propagate_intensity_ode(&p, i0, length, 256, 1e-6).unwrap();
            prop_assert!(profile.total.windows(2).all(|w| w[1] <= w[0] + 1e-15));
            prop_assert!(profile.eta() > 0.0 && profile.eta() <= 1.0);
            // The full equation absorbs slightly less than the linear model.
            prop_assert!(profile.eta() >= 1.0 - absorbed - 1e-12);
        }

        #[test]
        fn prop_transmission_decreases_with_length(
            gamma0 in 1e-6f64..1e-3,
            scale in 0.2f64..0.8,
        ) {
            let p = thin_params(gamma0);
            let l1 = length_for_transmission(&p, 1.0, 0.5).unwrap() * scale;
            let e1 = transmission_implicit(&p, 1.0, l1).unwrap();
            let e2 = transmission_implicit(&p, 1.0, l1 * 1.5).unwrap();
            prop_assert!(e2 < e1);
        }

        #[test]
        fn prop_signal_phase_slope_matches_quadrature(
            split_scale in 0.1f64..1.0,
            eta_t in 0.2f64..0.9,
        ) {
            // phi from quadrature is linear in the splitting and its slope
            // matches the exact closed form.
            let mut p = thin_params(1e-3);
            p.ground_splitting = split_scale * 1e-5;
            let length = length_for_transmission(&p, 1.0, eta_t).unwrap();
            let profile = propagate_intensity_ode(&p, 1.0, length, 512, 1e-7).unwrap();
            let phi = relative_phase(&p, &profile, 0.0, 0.0).unwrap();
            let exact = relative_phase_exact(&p, profile.initial(), profile.transmitted());
            prop_assert!((phi / exact - 1.0).abs() < 1e-6);
        }
    }
}
