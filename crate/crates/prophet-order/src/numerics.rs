//! Small numeric kernels: adaptive quadrature, bisection, compensated sums.
//!
//! Everything here is deliberately boring. The integrands in this crate are
//! smooth away from endpoints (callers cap their domains), so adaptive
//! Simpson with a depth limit is accurate and fast, and plain bisection is
//! the right root finder for the monotone crossings we solve.

use thiserror::Error;

/// Raised when a root bracket does not actually straddle a sign change.
#[derive(Debug, Error)]
#[error("no sign change on [{lo}, {hi}]: f(lo) = {flo:.6e}, f(hi) = {fhi:.6e}")]
pub struct NoSignChange {
    pub lo: f64,
    pub hi: f64,
    pub flo: f64,
    pub fhi: f64,
}

/// A converged bisection: the root estimate and the final certified bracket.
#[derive(Debug, Clone, Copy)]
pub struct Bisection {
    pub root: f64,
    pub bracket: (f64, f64),
    pub iterations: u32,
}

/// Bisect `f` on `[lo, hi]` down to a bracket of width `xtol`.
///
/// Requires a sign change on the initial bracket; works for increasing or
/// decreasing `f`. The returned bracket always straddles the sign change.
pub fn bisect(
    mut f: impl FnMut(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    xtol: f64,
) -> Result<Bisection, NoSignChange> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(Bisection { root: lo, bracket: (lo, lo), iterations: 0 });
    }
    if fhi == 0.0 {
        return Ok(Bisection { root: hi, bracket: (hi, hi), iterations: 0 });
    }
    if flo.signum() == fhi.signum() || flo.is_nan() || fhi.is_nan() {
        return Err(NoSignChange { lo, hi, flo, fhi });
    }
    let mut iterations = 0;
    while hi - lo > xtol && iterations < 200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fmid = f(mid);
        iterations += 1;
        if fmid == 0.0 {
            return Ok(Bisection { root: mid, bracket: (mid, mid), iterations });
        }
        if fmid.signum() == flo.signum() {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    Ok(Bisection { root: 0.5 * (lo + hi), bracket: (lo, hi), iterations })
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance
/// `tol`, with Richardson extrapolation on accepted panels.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    let whole = simpson(a, b, fa, fm, fb);
    adaptive(&f, a, b, fa, fm, fb, whole, tol, 48)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + adaptive(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Kahan compensated accumulator for long scalar sums.
#[derive(Debug, Default, Clone, Copy)]
pub struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Linear interpolation of a tabulated function at `x`.
///
/// `xs` must be sorted ascending; values outside the table clamp to the
/// nearest endpoint.
pub fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[xs.len() - 1] {
        return ys[ys.len() - 1];
    }
    let hi = xs.partition_point(|&v| v <= x);
    let lo = hi - 1;
    let span = xs[hi] - xs[lo];
    if span <= 0.0 {
        return ys[hi];
    }
    let w = (x - xs[lo]) / span;
    ys[lo] + w * (ys[hi] - ys[lo])
}
