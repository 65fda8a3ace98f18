//! Airy function `Ai` and its derivative, on the half-line the phase-gate seeds need.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const AI0: f64 = 0.355_028_053_887_817_239_26;
const AIP0: f64 = -0.258_819_403_792_806_798_41;

/// Below this the Maclaurin series loses digits to cancellation.
const MIN_ARG: f64 = -6.0;
const SERIES_MAX: f64 = 2.0;

fn maclaurin(x: f64) -> (f64, f64) {
    // Ai = AI0 f + AIP0 g with f = sum q_k, g = x sum p_k
    let x3 = x * x * x;
    let (mut f, mut fp, mut g, mut gp) = (1.0, 0.0, x, 1.0);
    let (mut q, mut p) = (1.0, 1.0);
    for k in 1..200 {
        let kf = k as f64;
        q *= x3 / ((3.0 * kf - 1.0) * (3.0 * kf));
        p *= x3 / ((3.0 * kf) * (3.0 * kf + 1.0));
        f += q;
        // d/dx x^{3k} = 3k x^{3k-1}; q carries x^{3k}
        fp += 3.0 * kf * q / x;
        g += x * p;
        gp += (3.0 * kf + 1.0) * p;
        if q.abs() < 1e-18 * f.abs() && p.abs() < 1e-18 * g.abs().max(1e-300) {
            break;
        }
    }
    if x == 0.0 {
        fp = 0.0;
    }
    (AI0 * f + AIP0 * g, AI0 * fp + AIP0 * gp)
}

/// `e^z K_nu(z) = int_0^inf exp(-z (cosh t - 1)) cosh(nu t) dt` by the trapezoidal rule,
/// which converges geometrically for this analytic, even integrand.
fn scaled_bessel_k(nu: f64, z: f64) -> f64 {
    // the integrand has width ~ 1/sqrt(z) near t = 0
    let h = (0.3 / z.sqrt()).min(0.05);
    let mut sum = 0.5;
    let mut t = h;
    loop {
        let e = z * (t.cosh() - 1.0);
        if e > 45.0 {
            break;
        }
        sum += (-e).exp() * (nu * t).cosh();
        t += h;
    }
    sum * h
}

/// `(e^zeta Ai(x), e^zeta Ai'(x))` with `zeta = 2/3 x^{3/2}` for `x > 0` (`zeta = 0` otherwise).
///
/// Accurate to about 1e-14 relative for `x >= 0`; valid down to `x = -6` with a few digits less.
pub fn airy_scaled(x: f64) -> Result<(f64, f64)> {
    if !x.is_finite() || x < MIN_ARG {
        return Err(Error::InvalidParameter { name: "x", reason: format!("Airy argument {x} outside [{MIN_ARG}, inf)") });
    }
    if x <= SERIES_MAX {
        let (a, ap) = maclaurin(x);
        let s = if x > 0.0 { (2.0 / 3.0 * x.powf(1.5)).exp() } else { 1.0 };
        return Ok((a * s, ap * s));
    }
    let zeta = 2.0 / 3.0 * x.powf(1.5);
    let ai = (x / 3.0).sqrt() / PI * scaled_bessel_k(1.0 / 3.0, zeta);
    let aip = -x / (PI * 3f64.sqrt()) * scaled_bessel_k(2.0 / 3.0, zeta);
    Ok((ai, aip))
}

/// `(Ai(x), Ai'(x))`.
pub fn airy(x: f64) -> Result<(f64, f64)> {
    let (a, ap) = airy_scaled(x)?;
    let s = if x > 0.0 { (-2.0 / 3.0 * x.powf(1.5)).exp() } else { 1.0 };
    Ok((a * s, ap * s))
}
