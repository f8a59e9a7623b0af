//! Steady state of the driven three-level Lambda system.
//!
//! Two ground states `|b->` and `|b+>` couple to a common excited state `|a>`
//! through the two circular components of the drive, with Rabi frequencies
//! `omega_minus` and `omega_plus`. The module offers two solvers for the
//! stationary density matrix:
//!
//! * [`solve_bloch_exact`]: direct solution of the full linear system for the
//!   nine density-matrix components (one population equation traded for the
//!   trace constraint). Valid for any parameter values; used as the reference.
//! * [`solve_bloch_perturbative`]: closed form obtained by adiabatically
//!   eliminating the optical coherences at leading order in the small ratios
//!   (ground relaxation and detunings over the optical scales). Its error is
//!   linear in those ratios and it is orders of magnitude cheaper.
//!
//! Also hosts the weak-probe susceptibility of the transparency window and
//! the power-broadened linewidth used for the scalar-magnetometer comparison.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::params::AtomicParams;

/// Condition-number ceiling above which the exact solve is rejected.
const COND_LIMIT: f64 = 1e12;

/// Which circular drive component an optical coherence belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    /// The `|b+> -> |a>` leg.
    Plus,
    /// The `|b-> -> |a>` leg.
    Minus,
}

/// Complex relaxation rate of the optical coherence on one leg.
///
/// Real part: optical decay plus half the ground exchange rate. Imaginary
/// part: total detuning of that leg, i.e. the one-photon detuning shifted by
/// the external light shift `shift` and by half the ground splitting (with
/// the sign of the leg).
pub fn optical_coherence_rate(p: &AtomicParams, sign: Sign, shift: f64) -> Complex64 {
    let half_split = match sign {
        Sign::Plus => 0.5 * p.ground_splitting,
        Sign::Minus => -0.5 * p.ground_splitting,
    };
    Complex64::new(
        p.gamma + 0.5 * p.gamma0_r,
        p.optical_detuning + shift + half_split,
    )
}

/// Complex relaxation rate of the ground-state coherence `|b-><b+|`.
///
/// Real part: dephasing plus exchange. Imaginary part: the full two-photon
/// detuning, i.e. ground splitting plus the differential light shift.
pub fn ground_coherence_rate(p: &AtomicParams, shift_plus: f64, shift_minus: f64) -> Complex64 {
    Complex64::new(
        p.gamma0 + p.gamma0_r,
        p.ground_splitting + shift_plus - shift_minus,
    )
}

/// Stationary density-matrix components of the driven Lambda system.
///
/// Populations are ordered `[pi_minus, pi_plus, pi_excited]` and sum to one.
/// `ground_coherence` is the `|b-><b+|` component whose magnitude approaches
/// one half in a perfect dark state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState {
    /// Optical coherence on the `|b+>` leg, `<|a><b+|>`.
    pub coherence_plus: Complex64,
    /// Optical coherence on the `|b->` leg, `<|a><b-|>`.
    pub coherence_minus: Complex64,
    /// Ground-state coherence `<|b-><b+|>`.
    pub ground_coherence: Complex64,
    /// Populations `[pi_minus, pi_plus, pi_excited]`.
    pub populations: [f64; 3],
}

impl SteadyState {
    /// Population left in the excited state.
    pub fn excited_population(&self) -> f64 {
        self.populations[2]
    }
}

/// Indices into the 9-component state vector
/// `[mm, pp, aa, ab-, b-a, ab+, b+a, -+, +-]`.
mod idx {
    pub const MM: usize = 0;
    pub const PP: usize = 1;
    pub const AA: usize = 2;
    pub const ABM: usize = 3;
    pub const BMA: usize = 4;
    pub const ABP: usize = 5;
    pub const BPA: usize = 6;
    pub const MP: usize = 7;
    pub const PM: usize = 8;
}

/// Solve the full stationary system for the density matrix.
///
/// Builds the 9x9 generator over the components listed in [`idx`], replaces
/// the redundant excited-population row with the trace constraint, and
/// solves by LU decomposition. `shift_plus` / `shift_minus` are external
/// light shifts applied to the respective legs.
///
/// # Errors
/// [`CoreError::SingularSystem`] when the factorisation fails or the
/// one-norm condition estimate exceeds `1e12` (e.g. both drives off with no
/// ground-state exchange to pin the populations).
pub fn solve_bloch_exact(
    p: &AtomicParams,
    omega_plus: Complex64,
    omega_minus: Complex64,
    shift_plus: f64,
    shift_minus: f64,
) -> Result<SteadyState> {
    let i = Complex64::i();
    let g_m = optical_coherence_rate(p, Sign::Minus, shift_minus);
    let g_p = optical_coherence_rate(p, Sign::Plus, shift_plus);
    let g_mp = ground_coherence_rate(p, shift_plus, shift_minus);
    let (g0r, gr) = (p.gamma0_r, p.gamma_r);
    let (op, om) = (omega_plus, omega_minus);

    let mut a = DMatrix::<Complex64>::zeros(9, 9);
    let re = |x: f64| Complex64::new(x, 0.0);

    // d<mm>/dt: exchange with pp, feeding from aa, drive on the minus leg.
    a[(idx::MM, idx::MM)] = re(-g0r);
    a[(idx::MM, idx::PP)] = re(g0r);
    a[(idx::MM, idx::AA)] = re(gr);
    a[(idx::MM, idx::ABM)] = -i * om;
    a[(idx::MM, idx::BMA)] = i * om.conj();

    // d<pp>/dt: mirror image on the plus leg.
    a[(idx::PP, idx::MM)] = re(g0r);
    a[(idx::PP, idx::PP)] = re(-g0r);
    a[(idx::PP, idx::AA)] = re(gr);
    a[(idx::PP, idx::ABP)] = -i * op;
    a[(idx::PP, idx::BPA)] = i * op.conj();

    // d<aa>/dt row is linearly dependent on the other populations; use the
    // trace instead so the system pins the normalisation.
    a[(idx::AA, idx::MM)] = re(1.0);
    a[(idx::AA, idx::PP)] = re(1.0);
    a[(idx::AA, idx::AA)] = re(1.0);

    // d<ab->/dt and its conjugate.
    a[(idx::ABM, idx::ABM)] = -g_m;
    a[(idx::ABM, idx::MM)] = -i * om.conj();
    a[(idx::ABM, idx::AA)] = i * om.conj();
    a[(idx::ABM, idx::PM)] = -i * op.conj();

    a[(idx::BMA, idx::BMA)] = -g_m.conj();
    a[(idx::BMA, idx::MM)] = i * om;
    a[(idx::BMA, idx::AA)] = -i * om;
    a[(idx::BMA, idx::MP)] = i * op;

    // d<ab+>/dt and its conjugate.
    a[(idx::ABP, idx::ABP)] = -g_p;
    a[(idx::ABP, idx::PP)] = -i * op.conj();
    a[(idx::ABP, idx::AA)] = i * op.conj();
    a[(idx::ABP, idx::MP)] = -i * om.conj();

    a[(idx::BPA, idx::BPA)] = -g_p.conj();
    a[(idx::BPA, idx::PP)] = i * op;
    a[(idx::BPA, idx::AA)] = -i * op;
    a[(idx::BPA, idx::PM)] = i * om;

    // Ground coherence and its conjugate close the system.
    a[(idx::MP, idx::MP)] = -g_mp;
    a[(idx::MP, idx::ABP)] = -i * om;
    a[(idx::MP, idx::BMA)] = i * op.conj();

    a[(idx::PM, idx::PM)] = -g_mp.conj();
    a[(idx::PM, idx::BPA)] = i * om.conj();
    a[(idx::PM, idx::ABM)] = -i * op;

    let mut b = DVector::<Complex64>::zeros(9);
    b[idx::AA] = re(1.0);

    let norm_a = one_norm(&a);
    let lu = a.lu();
    let x = lu
        .solve(&b)
        .ok_or(CoreError::SingularSystem { cond: f64::INFINITY })?;
    let inv = lu
        .try_inverse()
        .ok_or(CoreError::SingularSystem { cond: f64::INFINITY })?;
    let cond = norm_a * one_norm(&inv);
    if !cond.is_finite() || cond > COND_LIMIT {
        return Err(CoreError::SingularSystem { cond });
    }

    Ok(SteadyState {
        coherence_plus: x[idx::ABP],
        coherence_minus: x[idx::ABM],
        ground_coherence: x[idx::MP],
        populations: [x[idx::MM].re, x[idx::PP].re, x[idx::AA].re],
    })
}

fn one_norm(m: &DMatrix<Complex64>) -> f64 {
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Closed-form steady state from adiabatic elimination of the optical
/// coherences.
///
/// Approximates the optical relaxation rates by `gamma + i * detuning`,
/// which drops corrections of relative order `ground rates / gamma` and
/// `detunings / gamma`; the ground-state sector (populations plus ground
/// coherence) is then solved exactly, so the result stays uniformly accurate
/// from the weak-drive limit through saturation.
///
/// # Errors
/// [`CoreError::ZeroField`] when both drive components vanish.
pub fn solve_bloch_perturbative(
    p: &AtomicParams,
    omega_plus: Complex64,
    omega_minus: Complex64,
    shift_plus: f64,
    shift_minus: f64,
) -> Result<SteadyState> {
    let int_m = omega_minus.norm_sqr();
    let int_p = omega_plus.norm_sqr();
    if int_m + int_p == 0.0 {
        return Err(CoreError::ZeroField);
    }

    // Adiabatically eliminated optical response of one leg: 1 / (gamma + i Delta).
    let f = Complex64::new(p.gamma, p.optical_detuning).inv();
    let rf = f.re;

    // Ground-coherence equation: rate of the coherence plus the light-induced
    // couplings through both optical legs.
    let two_photon = p.ground_splitting + shift_plus - shift_minus;
    let z = Complex64::new(p.ground_relaxation(), two_photon) + int_m * f + int_p * f.conj();

    // The scaled ground coherence is linear in the three populations:
    // sigma = c_m pi_m + c_p pi_p + c_a pi_a.
    let c_p = -f / z;
    let c_m = -f.conj() / z;
    let c_a = (f + f.conj()) / z;

    // Population balance on each ground state, with the excited population
    // eliminated through the trace. rfs/rfsb are the real projections the
    // scattering terms pick out of the ground coherence.
    let rfs = |c: Complex64| (f * c).re;
    let rfsb = |c: Complex64| (f * c.conj()).re;
    let cross = 2.0 * int_m * int_p;

    let a00 = -p.gamma0_r - p.gamma_r - 4.0 * int_m * rf - cross * (rfsb(c_m) - rfsb(c_a));
    let a01 = p.gamma0_r - p.gamma_r - 2.0 * int_m * rf - cross * (rfsb(c_p) - rfsb(c_a));
    let b0 = -(p.gamma_r + 2.0 * int_m * rf - cross * rfsb(c_a));

    let a10 = p.gamma0_r - p.gamma_r - 2.0 * int_p * rf - cross * (rfs(c_m) - rfs(c_a));
    let a11 = -p.gamma0_r - p.gamma_r - 4.0 * int_p * rf - cross * (rfs(c_p) - rfs(c_a));
    let b1 = -(p.gamma_r + 2.0 * int_p * rf - cross * rfs(c_a));

    let det = a00 * a11 - a01 * a10;
    let pi_m = (b0 * a11 - a01 * b1) / det;
    let pi_p = (a00 * b1 - b0 * a10) / det;
    let pi_a = 1.0 - pi_m - pi_p;

    let sigma = c_m * pi_m + c_p * pi_p + c_a * pi_a;
    let ground = omega_minus * omega_plus.conj() * sigma;

    let i = Complex64::i();
    let r_m = -i * f * (omega_minus.conj() * (pi_m - pi_a) + omega_plus.conj() * ground.conj());
    let r_p = -i * f * (omega_plus.conj() * (pi_p - pi_a) + omega_minus.conj() * ground);

    Ok(SteadyState {
        coherence_plus: r_p,
        coherence_minus: r_m,
        ground_coherence: ground,
        populations: [pi_m, pi_p, pi_a],
    })
}

/// Split a total drive intensity into equal circular components with zero
/// phase, the configuration of a linearly polarised probe.
pub fn symmetric_components(total_sq: f64) -> (Complex64, Complex64) {
    let amp = (0.5 * total_sq).sqrt();
    (Complex64::new(amp, 0.0), Complex64::new(amp, 0.0))
}

/// Weak-probe susceptibility of the transparency window.
///
/// For a probe detuned by `probe_detuning` from two-photon resonance inside
/// a window held open by a drive of intensity `drive_sq`, the linear
/// response is `kappa * gamma_r * (-detuning + i gamma0) / (drive_sq +
/// gamma * gamma0)`. Its dispersion-to-absorption ratio has slope exactly
/// `-1/gamma0` at line centre, which is what makes the window a good
/// frequency discriminator.
pub fn eit_susceptibility(p: &AtomicParams, drive_sq: f64, probe_detuning: f64) -> Complex64 {
    let denom = drive_sq + p.gamma * p.gamma0;
    p.kappa * p.gamma_r * Complex64::new(-probe_detuning, p.gamma0) / denom
}

/// Effective linewidth of a power-broadened single-resonance magnetometer.
///
/// The bare width `gamma0` grows linearly with the drive amplitude once the
/// optical pumping rate passes the ground relaxation, with crossover at
/// `|omega|^2 = gamma * gamma0`; `alpha` is the order-unity broadening
/// coefficient of the specific scheme.
pub fn power_broadened_width(p: &AtomicParams, omega_abs: f64, alpha: f64) -> f64 {
    p.gamma0 + alpha * omega_abs * (p.gamma0 / p.gamma).sqrt()
}
