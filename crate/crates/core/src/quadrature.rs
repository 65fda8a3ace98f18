//! Adaptive Gauss-Kronrod (7, 15) quadrature for complex integrands on finite intervals.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
// Gauss weights for the odd Kronrod nodes XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Tolerances and subdivision limit.
#[derive(Clone, Copy, Debug)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { abs_tol: 1e-15, rel_tol: 1e-13, max_intervals: 4000 }
    }
}

/// Value and error estimate of a converged integral.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult {
    pub value: C64,
    pub error: f64,
    pub intervals: usize,
}

fn kronrod<F: Fn(f64) -> C64>(f: &F, a: f64, b: f64) -> (C64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += s * WGK[j];
        if j % 2 == 1 {
            g += s * WG[j / 2];
        }
    }
    (k * h, ((k - g) * h).norm())
}

/// Integrates `f` over `[a, b]`, bisecting the interval with the largest error estimate.
pub fn integrate<F: Fn(f64) -> C64>(f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<QuadResult> {
    let (v, e) = kronrod(&f, a, b);
    let mut pieces = vec![(a, b, v, e)];
    loop {
        let value: C64 = pieces.iter().map(|p| p.2).sum();
        let error: f64 = pieces.iter().map(|p| p.3).sum();
        if !value.re.is_finite() || !value.im.is_finite() {
            return Err(Error::NonFiniteValue("quadrature integrand".into()));
        }
        let tol = opts.abs_tol.max(opts.rel_tol * value.norm());
        if error <= tol {
            return Ok(QuadResult { value, error, intervals: pieces.len() });
        }
        if pieces.len() >= opts.max_intervals {
            return Err(Error::QuadratureNonConvergence { estimate: error, tolerance: tol });
        }
        let worst = (0..pieces.len()).max_by(|&i, &j| pieces[i].3.total_cmp(&pieces[j].3)).unwrap();
        let (lo, hi, _, _) = pieces.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = kronrod(&f, lo, mid);
        let (v2, e2) = kronrod(&f, mid, hi);
        pieces.push((lo, mid, v1, e1));
        pieces.push((mid, hi, v2, e2));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let r = integrate(|x| C64::new(x.powi(6) - x, 2.0 * x), 0.0, 2.0, &QuadOptions::default()).unwrap();
        assert!((r.value - C64::new(128.0 / 7.0 - 2.0, 4.0)).norm() < 1e-13);
        assert_eq!(r.intervals, 1);
    }

    #[test]
    fn oscillatory_gaussian() {
        // int exp(-x^2 + i x) = sqrt(pi) exp(-1/4)
        let r = integrate(|x| C64::new(-x * x, x).exp(), -9.0, 9.0, &QuadOptions::default()).unwrap();
        let exact = std::f64::consts::PI.sqrt() * (-0.25_f64).exp();
        assert!((r.value - exact).norm() < 1e-14);
        assert!(r.error < 1e-12);
    }

    #[test]
    fn reports_non_convergence() {
        let opts = QuadOptions { max_intervals: 3, ..Default::default() };
        let err = integrate(|x| C64::new((1.0 / x).sin(), 0.0), 1e-3, 1.0, &opts).unwrap_err();
        assert!(matches!(err, Error::QuadratureNonConvergence { estimate, .. } if estimate > 0.0));
    }
}
