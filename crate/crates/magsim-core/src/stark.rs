//! Phase noise from intensity fluctuations of the far-detuned shift beam.
//!
//! A beam detuned far from any resonance still moves the ground levels
//! through its light shift, `I / (2 shift_detuning)` per leg. Its intensity
//! noise therefore writes a fluctuating differential phase onto the two
//! circular components. Over a measurement time long against the noise
//! correlation time the fluctuations act as white noise, and the accumulated
//! phase variance collapses to a single quadrature over the cell weighted by
//! `1 / I(z)`: the dimmer the local field, the stronger the imprint.
//!
//! The coupling strength enters through one dimensionless number, the
//! `coupling_ratio`, fixed either directly or through the photon budget of
//! the measurement (input intensity, measurement time, cell length, photons
//! spent). In the symmetric Faraday configuration the common-mode part of
//! the noise shifts both legs together and cancels from the relative phase
//! exactly; only the differential part survives. A Monte Carlo sampler of
//! the same cell-by-cell noise model cross-checks the quadrature and the
//! cancellation.

use crate::error::{CoreError, Result};
use crate::numeric::simpson;
use crate::params::AtomicParams;
use crate::propagation::IntensityProfile;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

/// Smallest Monte Carlo sample count that gives meaningful moment errors.
pub const MIN_MC_SAMPLES: u64 = 10_000;

/// Decomposition of the phase-readout noise into its two sources, both in
/// phase-variance units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseBudget {
    /// Vacuum (shot) contribution `1 / (eta n_in)`: the phase equivalent of
    /// counting noise on the detected photons.
    pub shot_term: f64,
    /// Light-shift noise contribution, the accumulated [`phase_variance`].
    pub stark_term: f64,
}

impl NoiseBudget {
    /// Build from the detected-photon budget and the accumulated
    /// light-shift phase variance.
    ///
    /// # Errors
    /// [`CoreError::InvalidParameter`] unless `eta` is in `(0, 1]`,
    /// `photons_in > 0`, and `stark_phase_variance >= 0`.
    pub fn new(eta: f64, photons_in: f64, stark_phase_variance: f64) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(CoreError::InvalidParameter {
                name: "eta",
                reason: format!("transmission must lie in (0, 1], got {eta}"),
            });
        }
        if !(photons_in > 0.0) || !photons_in.is_finite() {
            return Err(CoreError::InvalidParameter {
                name: "photons_in",
                reason: format!("must be finite and > 0, got {photons_in}"),
            });
        }
        if !(stark_phase_variance >= 0.0) {
            return Err(CoreError::InvalidParameter {
                name: "stark_phase_variance",
                reason: format!("must be >= 0, got {stark_phase_variance}"),
            });
        }
        Ok(NoiseBudget {
            shot_term: 1.0 / (eta * photons_in),
            stark_term: stark_phase_variance,
        })
    }

    /// Total phase variance seen by the readout: shot plus light-shift.
    pub fn phase_variance(&self) -> f64 {
        self.shot_term + self.stark_term
    }

    /// Ratio of light-shift to shot noise; `1` marks the balanced optimum.
    pub fn stark_to_shot(&self) -> f64 {
        self.stark_term / self.shot_term
    }
}

/// Coupling of the far-detuned beam to the ground coherence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StarkModel {
    /// Detuning of the shift beam from its resonance; sets the size of the
    /// light shift per unit intensity.
    pub shift_detuning: f64,
    /// Dimensionless noise coupling; via the photon budget this is
    /// `I(0) * t_m * L / n_in`.
    pub coupling_ratio: f64,
}

impl StarkModel {
    /// Build from an explicit coupling ratio.
    ///
    /// # Errors
    /// [`CoreError::InvalidParameter`] when the detuning is zero or either
    /// argument is not finite, or the coupling is negative.
    pub fn new(shift_detuning: f64, coupling_ratio: f64) -> Result<Self> {
        if shift_detuning == 0.0 || !shift_detuning.is_finite() {
            return Err(CoreError::InvalidParameter {
                name: "shift_detuning",
                reason: format!("must be finite and nonzero, got {shift_detuning}"),
            });
        }
        if !(coupling_ratio >= 0.0) || !coupling_ratio.is_finite() {
            return Err(CoreError::InvalidParameter {
                name: "coupling_ratio",
                reason: format!("must be finite and >= 0, got {coupling_ratio}"),
            });
        }
        Ok(StarkModel {
            shift_detuning,
            coupling_ratio,
        })
    }

    /// Build from the photon budget of one measurement: the coupling ratio
    /// is `omega0_sq * measurement_time * length / photons_in`, i.e. the
    /// beam intensity expressed per detected photon.
    pub fn from_photon_budget(
        shift_detuning: f64,
        omega0_sq: f64,
        measurement_time: f64,
        length: f64,
        photons_in: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("omega0_sq", omega0_sq),
            ("measurement_time", measurement_time),
            ("length", length),
            ("photons_in", photons_in),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(CoreError::InvalidParameter {
                    name,
                    reason: format!("must be finite and > 0, got {v}"),
                });
            }
        }
        Self::new(
            shift_detuning,
            omega0_sq * measurement_time * length / photons_in,
        )
    }

    /// Mean light shift of one ground leg under total intensity `omega_sq`:
    /// `omega_sq / (2 shift_detuning)`.
    pub fn mean_stark_shift(&self, omega_sq: f64) -> f64 {
        omega_sq / (2.0 * self.shift_detuning)
    }

    /// Displacement of the two-photon resonance when the legs shift in
    /// opposite directions: twice the per-leg shift,
    /// `omega_sq / shift_detuning`. This is the shift the broadened
    /// lineshape scan tracks.
    pub fn resonance_light_shift(&self, omega_sq: f64) -> f64 {
        omega_sq / self.shift_detuning
    }

    /// White-noise density (per unit length and time) of the relative shift
    /// fluctuation at local intensity `intensity`:
    /// `coupling_ratio / (4 shift_detuning^2 intensity)`.
    ///
    /// Precondition: `intensity > 0`.
    pub fn relative_shift_variance_density(&self, intensity: f64) -> f64 {
        self.coupling_ratio / (4.0 * self.shift_detuning * self.shift_detuning * intensity)
    }
}

fn check_time_and_profile(profile: &IntensityProfile, measurement_time: f64) -> Result<()> {
    if !(measurement_time > 0.0) || !measurement_time.is_finite() {
        return Err(CoreError::InvalidParameter {
            name: "measurement_time",
            reason: format!("must be finite and > 0, got {measurement_time}"),
        });
    }
    if profile.total.iter().any(|&i| !(i > 0.0)) {
        return Err(CoreError::ProfileNonPositive);
    }
    Ok(())
}

/// Variance of the relative phase accumulated over one measurement with
/// coherent (shot-limited) intensity noise on the shift beam:
/// `(kappa gamma_r)^2 / t_m * integral dz density(I(z))`.
///
/// # Errors
/// [`CoreError::ProfileNonPositive`] if the profile touches zero;
/// [`CoreError::InvalidParameter`] for a non-positive measurement time.
pub fn phase_variance(
    model: &StarkModel,
    p: &AtomicParams,
    profile: &IntensityProfile,
    measurement_time: f64,
) -> Result<f64> {
    check_time_and_profile(profile, measurement_time)?;
    let pref = (p.kappa * p.gamma_r).powi(2) / measurement_time;
    let integrand: Vec<f64> = profile
        .total
        .iter()
        .map(|&i| model.relative_shift_variance_density(i))
        .collect();
    Ok(pref * simpson(&integrand, profile.dz()))
}

/// Same as [`phase_variance`] with amplitude-squeezed light on the shift
/// beam: the local noise density carries the extra factor `1 - I(z)/I(0)`,
/// so only the absorbed (and thus re-randomised) part of the beam
/// contributes.
pub fn phase_variance_squeezed(
    model: &StarkModel,
    p: &AtomicParams,
    profile: &IntensityProfile,
    measurement_time: f64,
) -> Result<f64> {
    check_time_and_profile(profile, measurement_time)?;
    let i0 = profile.initial();
    let pref = (p.kappa * p.gamma_r).powi(2) / measurement_time;
    let integrand: Vec<f64> = profile
        .total
        .iter()
        .map(|&i| model.relative_shift_variance_density(i) * (1.0 - i / i0).max(0.0))
        .collect();
    Ok(pref * simpson(&integrand, profile.dz()))
}

/// Monte Carlo sampler configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    /// Number of independent measurement realisations; at least
    /// [`MIN_MC_SAMPLES`].
    pub samples: u64,
    /// Base RNG seed. Results are reproducible for a fixed
    /// `(seed, block_size)` pair regardless of thread count.
    pub seed: u64,
    /// Number of cells the profile is coarsened to (midpoint values).
    pub cells: usize,
    /// Amplitude of an extra common-mode fluctuation added to both legs,
    /// relative to the per-cell differential noise. The relative phase must
    /// not feel it.
    pub common_mode_amplitude: f64,
    /// Sample the squeezed-beam statistics instead of coherent ones.
    pub squeezed: bool,
    /// Samples per parallel block; each block runs its own RNG stream.
    pub block_size: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            samples: 1_000_000,
            seed: 42,
            cells: 256,
            common_mode_amplitude: 0.0,
            squeezed: false,
            block_size: 8192,
        }
    }
}

/// Empirical moments of the sampled phase noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McMoments {
    /// Realisations actually drawn.
    pub samples: u64,
    /// Empirical mean of the relative phase (zero in expectation).
    pub mean: f64,
    /// Standard error of the mean.
    pub mean_se: f64,
    /// Empirical second moment of the relative phase.
    pub second_moment: f64,
    /// Standard error of the second moment.
    pub second_moment_se: f64,
    /// Exact expectation of the sampler's second moment on the coarsened
    /// grid; differs from the quadrature only by the coarsening error.
    pub discrete_second_moment: f64,
    /// Empirical second moment of the common-mode phase functional.
    pub common_second_moment: f64,
}

#[derive(Clone, Copy, Default)]
struct BlockSums {
    s1: f64,
    s2: f64,
    s4: f64,
    c2: f64,
}

/// Sample the cell-by-cell noise model and return empirical moments of the
/// relative-phase functional.
///
/// The profile is coarsened to `cells` midpoint intensities; each
/// realisation draws independent per-cell, per-leg fractional intensity
/// fluctuations with variance `2 coupling_ratio / (t_m I_j dz)` (times
/// `1 - I_j/I(0)` for squeezed light) plus an optional common-mode term
/// shared by both legs. The common-mode draw happens unconditionally so
/// switching it on does not perturb the differential noise stream: the
/// relative-phase moments are bit-identical for any
/// `common_mode_amplitude`, which is the cancellation statement in its
/// sharpest form.
///
/// # Errors
/// [`CoreError::InvalidParameter`] for too few samples, fewer than 4 cells,
/// or a zero block size, plus the [`phase_variance`] preconditions.
pub fn montecarlo_stark_oracle(
    model: &StarkModel,
    p: &AtomicParams,
    profile: &IntensityProfile,
    measurement_time: f64,
    cfg: &McConfig,
) -> Result<McMoments> {
    check_time_and_profile(profile, measurement_time)?;
    if cfg.samples < MIN_MC_SAMPLES {
        return Err(CoreError::InvalidParameter {
            name: "samples",
            reason: format!("need at least {MIN_MC_SAMPLES}, got {}", cfg.samples),
        });
    }
    if cfg.cells < 4 {
        return Err(CoreError::InvalidParameter {
            name: "cells",
            reason: format!("need at least 4 cells, got {}", cfg.cells),
        });
    }
    if cfg.block_size == 0 {
        return Err(CoreError::InvalidParameter {
            name: "block_size",
            reason: "block size must be positive".into(),
        });
    }

    let dz = profile.length / cfg.cells as f64;
    let i0 = profile.initial();
    let sigma: Vec<f64> = (0..cfg.cells)
        .map(|j| {
            let z = (j as f64 + 0.5) * dz;
            let i = profile.at(z);
            let mut var = 2.0 * model.coupling_ratio / (measurement_time * i * dz);
            if cfg.squeezed {
                var *= (1.0 - i / i0).max(0.0);
            }
            var.sqrt()
        })
        .collect();

    let pref = -p.kappa * p.gamma_r / (4.0 * model.shift_detuning) * dz;
    let discrete_second_moment = pref * pref * 2.0 * sigma.iter().map(|s| s * s).sum::<f64>();

    let blocks = cfg.samples.div_ceil(cfg.block_size);
    let sums: Vec<BlockSums> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(1 + b);
            let count = cfg.block_size.min(cfg.samples - b * cfg.block_size);
            let mut sums = BlockSums::default();
            for _ in 0..count {
                let mut rel = 0.0;
                let mut com = 0.0;
                for &s in &sigma {
                    let xp: f64 = rng.sample::<f64, _>(StandardNormal) * s;
                    let xm: f64 = rng.sample::<f64, _>(StandardNormal) * s;
                    let zeta: f64 =
                        rng.sample::<f64, _>(StandardNormal) * s * cfg.common_mode_amplitude;
                    rel += xp - xm;
                    com += xp + xm + 2.0 * zeta;
                }
                let rel = pref * rel;
                let com = pref * com;
                sums.s1 += rel;
                sums.s2 += rel * rel;
                sums.s4 += rel * rel * rel * rel;
                sums.c2 += com * com;
            }
            sums
        })
        .collect();

    // Merge in block order so the result is independent of thread schedule.
    let total = sums.iter().fold(BlockSums::default(), |acc, b| BlockSums {
        s1: acc.s1 + b.s1,
        s2: acc.s2 + b.s2,
        s4: acc.s4 + b.s4,
        c2: acc.c2 + b.c2,
    });

    let n = cfg.samples as f64;
    let mean = total.s1 / n;
    let second_moment = total.s2 / n;
    let variance = (second_moment - mean * mean).max(0.0);
    let second_spread = (total.s4 / n - second_moment * second_moment).max(0.0);
    Ok(McMoments {
        samples: cfg.samples,
        mean,
        mean_se: (variance / n).sqrt(),
        second_moment,
        second_moment_se: (second_spread / n).sqrt(),
        discrete_second_moment,
        common_second_moment: total.c2 / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagation::{length_for_transmission, AbsorptionModel};
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn stark_params(gamma0: f64) -> AtomicParams {
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

    /// Linear profile losing `1 - eta` of the input, at the length the
    /// linear absorption model assigns to that transmission.
    fn linear_profile(p: &AtomicParams, i0: f64, eta: f64, samples: usize) -> IntensityProfile {
        let length = length_for_transmission(p, i0, eta).unwrap();
        IntensityProfile::from_model(
            AbsorptionModel::Linear {
                absorbed_fraction: 1.0 - eta,
            },
            i0,
            length,
            samples,
        )
        .unwrap()
    }

    fn reference_case() -> (AtomicParams, StarkModel, IntensityProfile, f64) {
        let p = stark_params(1e-3);
        let i0 = 2.5;
        let profile = linear_profile(&p, i0, 0.06, 4097);
        let t_m = 1e5;
        let model =
            StarkModel::from_photon_budget(p.shift_detuning, i0, t_m, profile.length, 1e6)
                .unwrap();
        (p, model, profile, t_m)
    }

    #[test]
    fn noise_budget_totals_and_guards() {
        let b = NoiseBudget::new(0.5, 1e6, 3e-6).unwrap();
        assert_relative_eq!(b.shot_term, 2e-6, max_relative = 1e-15);
        assert_relative_eq!(b.phase_variance(), 5e-6, max_relative = 1e-15);
        assert_relative_eq!(b.stark_to_shot(), 1.5, max_relative = 1e-15);
        assert!(NoiseBudget::new(0.0, 1e6, 0.0).is_err());
        assert!(NoiseBudget::new(1.1, 1e6, 0.0).is_err());
        assert!(NoiseBudget::new(0.5, 0.0, 0.0).is_err());
        assert!(NoiseBudget::new(0.5, 1e6, -1.0).is_err());
    }

    #[test]
    fn constructor_rejects_bad_input() {
        assert!(StarkModel::new(0.0, 1.0).is_err());
        assert!(StarkModel::new(f64::NAN, 1.0).is_err());
        assert!(StarkModel::new(1e3, -1.0).is_err());
        assert!(StarkModel::from_photon_budget(1e3, 0.0, 1.0, 1.0, 1.0).is_err());
        assert!(StarkModel::from_photon_budget(1e3, 1.0, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn photon_budget_sets_coupling() {
        let m = StarkModel::from_photon_budget(1e3, 2.5, 1e5, 4700.0, 1e6).unwrap();
        assert_relative_eq!(m.coupling_ratio, 2.5 * 1e5 * 4700.0 / 1e6, max_relative = 1e-15);
    }

    #[test]
    fn mean_shift_values() {
        let m = StarkModel::new(1e3, 1.0).unwrap();
        assert_relative_eq!(m.mean_stark_shift(0.5), 0.5 / 2e3, max_relative = 1e-15);
        assert_relative_eq!(
            m.resonance_light_shift(0.5),
            2.0 * m.mean_stark_shift(0.5),
            max_relative = 1e-15
        );
        // Negative detuning flips the shift sign.
        let m = StarkModel::new(-1e3, 1.0).unwrap();
        assert!(m.mean_stark_shift(0.5) < 0.0);
    }

    #[test]
    fn density_scales_inversely_with_intensity() {
        let m = StarkModel::new(1e3, 8.0).unwrap();
        let d1 = m.relative_shift_variance_density(0.5);
        let d2 = m.relative_shift_variance_density(1.0);
        assert_relative_eq!(d1, 2.0 * d2, max_relative = 1e-15);
        assert_relative_eq!(d2, 8.0 / (4.0 * 1e6), max_relative = 1e-15);
    }

    #[test]
    fn phase_variance_matches_closed_form_on_linear_profile() {
        // Frozen reference: I0 = 2.5, gamma0 = 1e-3, shift detuning 1e3,
        // eta = 0.06, 1e6 photons. Closed form:
        // (I0 / (shift_detuning gamma0))^2 (1 - eta) ln(1/eta) / photons.
        let (p, model, profile, t_m) = reference_case();
        let v = phase_variance(&model, &p, &profile, t_m).unwrap();
        assert_relative_eq!(v, 1.65287879609652156e-5, max_relative = 1e-9);
    }

    #[test]
    fn measurement_time_scaling_is_exact_for_fixed_coupling() {
        let (p, _, profile, _) = reference_case();
        let model = StarkModel::new(1e3, 1175.0).unwrap();
        let v1 = phase_variance(&model, &p, &profile, 1e4).unwrap();
        let v2 = phase_variance(&model, &p, &profile, 2e4).unwrap();
        assert_relative_eq!(v1, 2.0 * v2, max_relative = 1e-15);
    }

    #[test]
    fn detuning_scaling_is_exact() {
        let (p, _, profile, t_m) = reference_case();
        let m1 = StarkModel::new(1e3, 1175.0).unwrap();
        let m2 = StarkModel::new(2e3, 1175.0).unwrap();
        let v1 = phase_variance(&m1, &p, &profile, t_m).unwrap();
        let v2 = phase_variance(&m2, &p, &profile, t_m).unwrap();
        assert_relative_eq!(v1, 4.0 * v2, max_relative = 1e-15);
    }

    #[test]
    fn photon_normalised_variance_depends_only_on_shape_parameters() {
        // n_in * variance is a function of (I0 / (shift_detuning gamma0), eta)
        // alone. Two parameter sets sharing those two numbers must agree.
        let eta = 0.06;
        let n_in = 1e6;
        let t_m = 1e5;

        let pa = stark_params(1e-3);
        let ia = 2.5;
        let prof_a = linear_profile(&pa, ia, eta, 2049);
        let ma =
            StarkModel::from_photon_budget(pa.shift_detuning, ia, t_m, prof_a.length, n_in)
                .unwrap();
        let va = phase_variance(&ma, &pa, &prof_a, t_m).unwrap();

        let mut pb = stark_params(2e-3);
        pb.shift_detuning = 2.5e3;
        // Same I0 / (shift_detuning gamma0) = 2.5 requires I0 = 12.5.
        let ib = 12.5;
        let prof_b = linear_profile(&pb, ib, eta, 2049);
        let mb =
            StarkModel::from_photon_budget(pb.shift_detuning, ib, t_m, prof_b.length, n_in)
                .unwrap();
        let vb = phase_variance(&mb, &pb, &prof_b, t_m).unwrap();

        assert_relative_eq!(n_in * va, n_in * vb, max_relative = 1e-12);
    }

    #[test]
    fn squeezed_variance_reference_ratio() {
        // (ln(1/eta) + eta - 1) / ln(1/eta) at eta = 0.06.
        let (p, model, profile, t_m) = reference_case();
        let coherent = phase_variance(&model, &p, &profile, t_m).unwrap();
        let squeezed = phase_variance_squeezed(&model, &p, &profile, t_m).unwrap();
        assert!(squeezed < coherent);
        assert_relative_eq!(
            squeezed / coherent,
            0.66588596737751904,
            max_relative = 1e-9
        );
    }

    #[test]
    fn squeezed_variance_vanishes_without_absorption() {
        let p = stark_params(1e-3);
        let profile =
            IntensityProfile::from_model(AbsorptionModel::Constant, 1.0, 10.0, 65).unwrap();
        let model = StarkModel::new(1e3, 5.0).unwrap();
        let v = phase_variance_squeezed(&model, &p, &profile, 1e4).unwrap();
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-30);
    }

    #[test]
    fn nonpositive_profile_is_rejected() {
        let (p, model, _, t_m) = reference_case();
        let bad = IntensityProfile {
            length: 1.0,
            total: vec![1.0, 0.5, 0.0],
            component_diff: 0.0,
        };
        assert!(matches!(
            phase_variance(&model, &p, &bad, t_m),
            Err(CoreError::ProfileNonPositive)
        ));
        let cfg = McConfig::default();
        assert!(montecarlo_stark_oracle(&model, &p, &bad, t_m, &cfg).is_err());
    }

    #[test]
    fn montecarlo_validates_the_quadrature() {
        let (p, model, profile, t_m) = reference_case();
        let cfg = McConfig {
            samples: 50_000,
            seed: 1,
            cells: 64,
            block_size: 4096,
            ..McConfig::default()
        };
        let mc = montecarlo_stark_oracle(&model, &p, &profile, t_m, &cfg).unwrap();
        let analytic = phase_variance(&model, &p, &profile, t_m).unwrap();
        // The sampler's exact expectation differs from the quadrature only
        // by the 64-cell coarsening of the 1/I weight.
        assert_relative_eq!(mc.discrete_second_moment, analytic, max_relative = 2e-3);
        // The empirical moment fluctuates with relative SE sqrt(2/N) = 0.63%.
        assert_relative_eq!(
            mc.second_moment,
            mc.discrete_second_moment,
            max_relative = 0.035
        );
        assert!(mc.mean.abs() < 5.0 * mc.mean_se);
        // With no extra common-mode noise the symmetric functional has the
        // same variance as the antisymmetric one.
        assert_relative_eq!(
            mc.common_second_moment,
            mc.second_moment,
            max_relative = 0.05
        );
    }

    #[test]
    fn common_mode_noise_cancels_exactly() {
        let (p, model, profile, t_m) = reference_case();
        let base = McConfig {
            samples: 20_000,
            seed: 7,
            cells: 32,
            block_size: 1024,
            ..McConfig::default()
        };
        let quiet = montecarlo_stark_oracle(&model, &p, &profile, t_m, &base).unwrap();
        let loud_cfg = McConfig {
            common_mode_amplitude: 3.0,
            ..base
        };
        let loud = montecarlo_stark_oracle(&model, &p, &profile, t_m, &loud_cfg).unwrap();
        // Bit-identical relative moments: the common-mode term never enters
        // the differential functional.
        assert_eq!(quiet.second_moment, loud.second_moment);
        assert_eq!(quiet.mean, loud.mean);
        // But the common-mode functional feels it: variance grows by
        // 1 + 2 * amplitude^2 = 19.
        assert_relative_eq!(
            loud.common_second_moment / quiet.common_second_moment,
            19.0,
            max_relative = 0.1
        );
    }

    #[test]
    fn montecarlo_squeezed_statistics() {
        let (p, model, profile, t_m) = reference_case();
        let cfg = McConfig {
            samples: 50_000,
            seed: 3,
            cells: 64,
            squeezed: true,
            block_size: 4096,
            ..McConfig::default()
        };
        let mc = montecarlo_stark_oracle(&model, &p, &profile, t_m, &cfg).unwrap();
        let squeezed = phase_variance_squeezed(&model, &p, &profile, t_m).unwrap();
        assert_relative_eq!(mc.discrete_second_moment, squeezed, max_relative = 5e-3);
        assert_relative_eq!(
            mc.second_moment,
            mc.discrete_second_moment,
            max_relative = 0.035
        );
    }

    #[test]
    fn montecarlo_is_deterministic_across_runs() {
        let (p, model, profile, t_m) = reference_case();
        // Sample count deliberately not a multiple of the block size.
        let cfg = McConfig {
            samples: 20_500,
            seed: 11,
            cells: 16,
            block_size: 4096,
            ..McConfig::default()
        };
        let a = montecarlo_stark_oracle(&model, &p, &profile, t_m, &cfg).unwrap();
        let b = montecarlo_stark_oracle(&model, &p, &profile, t_m, &cfg).unwrap();
        assert_eq!(a.second_moment, b.second_moment);
        assert_eq!(a.mean, b.mean);
        assert_eq!(a.common_second_moment, b.common_second_moment);
        assert_eq!(a.samples, 20_500);
    }

    #[test]
    fn montecarlo_rejects_undersized_runs() {
        let (p, model, profile, t_m) = reference_case();
        let small = McConfig {
            samples: 9_999,
            ..McConfig::default()
        };
        assert!(montecarlo_stark_oracle(&model, &p, &profile, t_m, &small).is_err());
        let coarse = McConfig {
            cells: 3,
            ..McConfig::default()
        };
        assert!(montecarlo_stark_oracle(&model, &p, &profile, t_m, &coarse).is_err());
    }

    proptest! {
        #[test]
        fn prop_variance_positive_and_squeezing_helps(
            i0 in 0.5f64..5.0,
            eta in 0.05f64..0.9,
            coupling in 1.0f64..1e4,
        ) {
            let p = stark_params(1e-3);
            let profile = linear_profile(&p, i0, eta, 513);
            let model = StarkModel::new(1e3, coupling).unwrap();
            let coherent = phase_variance(&model, &p, &profile, 1e5).unwrap();
            let squeezed = phase_variance_squeezed(&model, &p, &profile, 1e5).unwrap();
            prop_assert!(coherent > 0.0);
            prop_assert!(squeezed >= 0.0);
            prop_assert!(squeezed < coherent);
        }

        #[test]
        fn prop_photon_scaling_is_inverse(
            n_scale in 1.0f64..100.0,
        ) {
            let (p, _, profile, t_m) = reference_case();
            let m1 = StarkModel::from_photon_budget(1e3, 2.5, t_m, profile.length, 1e6).unwrap();
            let m2 = StarkModel::from_photon_budget(1e3, 2.5, t_m, profile.length, 1e6 * n_scale).unwrap();
            let v1 = phase_variance(&m1, &p, &profile, t_m).unwrap();
            let v2 = phase_variance(&m2, &p, &profile, t_m).unwrap();
            prop_assert!((v1 / v2 / n_scale - 1.0).abs() < 1e-12);
        }
    }
}
