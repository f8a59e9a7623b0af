//! Small numerical kernels: fixed-step RK4, quadrature, root bracketing,
//! scalar minimisation and a least-squares slope.
//!
//! These are deliberately simple fixed-grid routines; the physics layers
//! validate their own grids (step-halving checks, grid-resolution errors)
//! instead of relying on adaptive black boxes.

use crate::error::{CoreError, Result};

/// Integrate `dy/dx = f(x, y)` with classical fourth-order Runge-Kutta on a
/// uniform grid of `steps` intervals from `x0` to `x1`.
///
/// Returns all `steps + 1` states including the initial one. `N` is the
/// state dimension.
pub fn rk4<const N: usize>(
    f: impl Fn(f64, &[f64; N]) -> [f64; N],
    y0: [f64; N],
    x0: f64,
    x1: f64,
    steps: usize,
) -> Vec<[f64; N]> {
    assert!(steps > 0, "rk4 needs at least one step");
    let h = (x1 - x0) / steps as f64;
    let mut out = Vec::with_capacity(steps + 1);
    let mut y = y0;
    out.push(y);
    for i in 0..steps {
        let x = x0 + i as f64 * h;
        let k1 = f(x, &y);
        let y2 = add_scaled(&y, &k1, h / 2.0);
        let k2 = f(x + h / 2.0, &y2);
        let y3 = add_scaled(&y, &k2, h / 2.0);
        let k3 = f(x + h / 2.0, &y3);
        let y4 = add_scaled(&y, &k3, h);
        let k4 = f(x + h, &y4);
        for j in 0..N {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        out.push(y);
    }
    out
}

fn add_scaled<const N: usize>(y: &[f64; N], k: &[f64; N], s: f64) -> [f64; N] {
    let mut out = *y;
    for j in 0..N {
        out[j] += s * k[j];
    }
    out
}

/// Composite Simpson rule over uniformly spaced samples.
///
/// Needs at least three samples. An odd number of intervals is handled by
/// closing the last interval with a trapezoid, which keeps the routine
/// second-order there; callers that care use even interval counts.
pub fn simpson(values: &[f64], dx: f64) -> f64 {
    assert!(values.len() >= 3, "simpson needs at least three samples");
    let intervals = values.len() - 1;
    let even_intervals = intervals - (intervals % 2);
    let mut acc = 0.0;
    let mut i = 0;
    while i < even_intervals {
        acc += dx / 3.0 * (values[i] + 4.0 * values[i + 1] + values[i + 2]);
        i += 2;
    }
    if intervals % 2 == 1 {
        acc += dx / 2.0 * (values[intervals - 1] + values[intervals]);
    }
    acc
}

/// Cumulative trapezoid integral of uniformly spaced samples.
///
/// Output has the same length as the input, starting at zero.
pub fn cumtrapz(values: &[f64], dx: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in values.windows(2) {
        acc += dx / 2.0 * (w[0] + w[1]);
        out.push(acc);
    }
    out
}

/// Bisection root find on `[a, b]` down to an interval width of `tol`.
///
/// Errors with [`CoreError::NoBracket`] when `f(a)` and `f(b)` do not have
/// opposite signs. An exact zero at either endpoint is returned directly.
pub fn bisect(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let (mut flo, fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(CoreError::NoBracket { a: lo, b: hi });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break; // interval at floating-point resolution
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Golden-section minimisation of a unimodal function on `[a, b]`.
///
/// Shrinks the bracket until its width falls below `rel_tol` times the scale
/// of the abscissa. Returns the midpoint of the final bracket and the
/// function value there.
pub fn golden_min(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let scale = lo.abs().max(hi.abs()).max(1e-300);
    while hi - lo > rel_tol * scale {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
        if x1 >= x2 {
            break; // bracket exhausted at floating-point resolution
        }
    }
    let xm = 0.5 * (lo + hi);
    (xm, f(xm))
}

/// Least-squares slope of `log10(y)` against `log10(x)`.
///
/// All samples must be strictly positive; pairs are taken index-wise.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len(), "loglog_slope needs paired samples");
    assert!(xs.len() >= 2, "loglog_slope needs at least two points");
    let n = xs.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        assert!(x > 0.0 && y > 0.0, "loglog_slope needs positive data");
        let lx = x.log10();
        let ly = y.log10();
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Logarithmically spaced grid from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo, "log_spaced needs 0 < lo < hi");
    assert!(count >= 2, "log_spaced needs at least two points");
    let llo = lo.ln();
    let lhi = hi.ln();
    (0..count)
        .map(|i| (llo + (lhi - llo) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// Linearly spaced grid from `lo` to `hi` inclusive.
pub fn lin_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2, "lin_spaced needs at least two points");
    (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect()
}
