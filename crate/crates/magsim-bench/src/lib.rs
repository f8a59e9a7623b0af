//! Shared fixtures for the criterion benchmarks in `benches/`.

use magsim_core::AtomicParams;

/// Weak-dephasing operating point used across the benchmarks.
pub fn bench_params(gamma0: f64) -> AtomicParams {
    AtomicParams {
        gamma: 1.0,
        gamma_r: 1.0,
        gamma0,
        gamma0_r: 0.0,
        optical_detuning: 0.0,
        ground_splitting: 1e-2 * gamma0,
        shift_detuning: 1e3,
        kappa: 1.0,
    }
}
