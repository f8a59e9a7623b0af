//! Simulation library for a transparency-window optical magnetometer.
//!
//! The model: a vapour of three-level Lambda atoms probed by a single
//! linearly polarised beam whose circular components drive the two legs, a
//! magnetic field splitting the ground doublet (the signal), and an optional
//! far-detuned beam whose intensity fluctuations dephase the ground
//! coherence. The crate computes the stationary atomic response, propagates
//! intensity and polarisation through the cell, builds the photon-counting
//! noise budget, and evaluates the resulting magnetic sensitivity limits.
//!
//! Modules are layered bottom-up:
//!
//! * [`numeric`]: fixed-grid integration, quadrature, root finding.
//! * [`params`]: model parameters and validation.
//! * [`bloch`]: stationary density matrix of a single atom, exact and
//!   closed-form solvers.
//! * [`propagation`]: intensity attenuation and polarisation rotation
//!   through the cell.
//! * [`stark`]: statistics of the light-shift noise imprinted by the
//!   far-detuned beam, with a Monte Carlo cross-check.
//! * [`sensitivity`]: photon-counting signal-to-noise and the optimised
//!   minimum detectable splitting.
//!
//! All rates are measured in units of the optical coherence decay rate and
//! lengths in units of the inverse medium coupling; see
//! [`params::AtomicParams`].

pub mod bloch;
pub mod error;
pub mod numeric;
pub mod params;
pub mod propagation;
pub mod sensitivity;
pub mod stark;

pub use bloch::{
    eit_susceptibility, ground_coherence_rate, optical_coherence_rate, power_broadened_width,
    solve_bloch_exact, solve_bloch_perturbative, symmetric_components, Sign, SteadyState,
};
pub use error::{CoreError, ModelWarning, Result};
pub use params::AtomicParams;
pub use propagation::{
    bias_light_shift_phase, broadened_lineshape, length_for_transmission,
    linear_absorption_coefficient, lineshape_fwhm, propagate, propagate_intensity_ode,
    propagate_phases, relative_phase, relative_phase_exact, signal_phase, transmission,
    transmission_implicit, AbsorptionModel, FieldState, IntensityProfile, PhasePair,
    PropagationSolution, TransmissionResult,
};
pub use sensitivity::{
    count_variance, detection_result, faraday_counts, figure4_sweep, generic_quantum_limit,
    generic_quantum_limit_optimum, min_detectable_splitting, noise_bracket, numeric_optimal_power,
    opm_plateau, opm_sensitivity_curve, optimal_rabi_sq, optimal_transmission,
    phase_noise_budget, power_to_rabi_sq, sensitivity_point, snr, sql_factor_f,
    sql_factor_f_tilde, sql_min_shift, DetectionResult, OpmPoint, PhotonBudget,
    QuantumLimitOptimum, Regime, SensitivityCurve, SensitivityPoint,
};
pub use stark::{
    montecarlo_stark_oracle, phase_variance, phase_variance_squeezed, McConfig, McMoments,
    NoiseBudget, StarkModel,
};
