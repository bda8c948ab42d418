//! Adaptive Simpson quadrature on finite intervals.

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 60;
const MAX_EVALS: u64 = 20_000_000;
/// Floor on the relative accuracy requested of each panel.
const REL_TOL: f64 = 1e-13;

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`, or to relative
/// accuracy about `1e-13` when that is looser.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Quadrature(format!("infinite interval [{a}, {b}]")));
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let fa = f(lo);
    let fb = f(hi);
    let m = 0.5 * (lo + hi);
    let fm = f(m);
    let whole = simpson(lo, hi, fa, fm, fb);
    let mut evals = 3u64;
    let v = recurse(&f, lo, hi, fa, fm, fb, whole, tol, MAX_DEPTH, &mut evals)?;
    if !v.is_finite() {
        return Err(Error::Quadrature(format!("non-finite value on [{lo}, {hi}]")));
    }
    Ok(sign * v)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    evals: &mut u64,
) -> Result<f64> {
    *evals += 2;
    if *evals > MAX_EVALS {
        return Err(Error::Quadrature(format!("evaluation budget exhausted near [{a}, {b}]")));
    }
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol.max(REL_TOL * (left + right).abs()) || (b - a) < 1e-15 * (1.0 + a.abs()) {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::Quadrature(format!(
            "no convergence on [{a}, {b}] (error estimate {delta:e})"
        )));
    }
    Ok(recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1, evals)?
        + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1, evals)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_and_transcendentals() {
        assert!((integrate(|x| x * x, 0.0, 3.0, 1e-12).unwrap() - 9.0).abs() < 1e-12);
        assert!((integrate(f64::sin, 0.0, std::f64::consts::PI, 1e-12).unwrap() - 2.0).abs() < 1e-11);
        assert!((integrate(|x| x, 1.0, 0.0, 1e-12).unwrap() + 0.5).abs() < 1e-14);
        assert_eq!(integrate(|x| x, 2.0, 2.0, 1e-12).unwrap(), 0.0);
    }

    #[test]
    fn reports_non_convergence() {
        assert!(integrate(|x| 1.0 / x, 0.0, 1.0, 1e-12).is_err());
    }
}
