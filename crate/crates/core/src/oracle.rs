//! Independent reference computations used to validate the recurrences:
//! matrix exponentials of truncated generators and finite differences.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};

/// `exp(A)` by scaling and squaring with a Taylor kernel.
pub fn expm(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    let norm = a.rows().into_iter().map(|r| r.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
    let squarings = if norm > 0.25 { (norm / 0.25).log2().ceil() as u32 } else { 0 };
    let scaled = a.mapv(|z| z / 2f64.powi(squarings as i32));
    let mut result = linalg::identity(n);
    let mut term = linalg::identity(n);
    for k in 1..=24 {
        term = term.dot(&scaled).mapv(|z| z / k as f64);
        result = result + &term;
        if linalg::max_abs(&term) < 1e-18 * linalg::max_abs(&result) {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    result
}

/// Truncated annihilation operator `a` on `n` levels.
pub fn annihilation(n: usize) -> CMatrix {
    let mut a = CMatrix::from_elem((n, n), C64::new(0.0, 0.0));
    for k in 1..n {
        a[[k - 1, k]] = C64::new((k as f64).sqrt(), 0.0);
    }
    a
}

/// `D(gamma) R(phi) S(zeta)` from exponentials of generators truncated at `pad * cutoff`
/// levels, cut back to `cutoff`.
pub fn padded_single_mode_gaussian(gamma: C64, phi: f64, zeta: C64, cutoff: usize, pad: usize) -> Result<CMatrix> {
    if pad == 0 || cutoff == 0 {
        return Err(Error::InvalidParameter { name: "pad", reason: "padding and cutoff must be positive".into() });
    }
    let big = pad * cutoff;
    let a = annihilation(big);
    let ad = linalg::adjoint(&a);
    let d = expm(&(ad.mapv(|z| z * gamma) - a.mapv(|z| z * gamma.conj())));
    let r = linalg::diag(&(0..big).map(|k| C64::from_polar(1.0, phi * k as f64)).collect::<Vec<_>>());
    let a2 = a.dot(&a);
    let ad2 = ad.dot(&ad);
    let s = expm(&((a2.mapv(|z| z * zeta.conj()) - ad2.mapv(|z| z * zeta)) * C64::new(0.5, 0.0)));
    let full = d.dot(&r).dot(&s);
    Ok(full.slice(ndarray::s![..cutoff, ..cutoff]).to_owned())
}

/// Five-point central difference `(f(-2h) - 8f(-h) + 8f(h) - f(2h)) / 12h`, entrywise.
pub fn five_point<F>(f: F, x: f64, h: f64) -> Result<Vec<C64>>
where
    F: Fn(f64) -> Result<Vec<C64>>,
{
    let (m2, m1, p1, p2) = (f(x - 2.0 * h)?, f(x - h)?, f(x + h)?, f(x + 2.0 * h)?);
    Ok((0..m1.len()).map(|i| (m2[i] - m1[i] * 8.0 + p1[i] * 8.0 - p2[i]) / (12.0 * h)).collect())
}

/// [`five_point`] at `h` or `3h`, whichever agrees better with the next larger step
/// (`3h` or `10h`) in the relative metric of [`max_relative_error`]. A noisy small
/// step shows up as disagreement with its neighbour; the choice never looks at the
/// quantity under test.
pub fn five_point_stepped<F>(f: F, x: f64, h: f64, floor: f64) -> Result<Vec<C64>>
where
    F: Fn(f64) -> Result<Vec<C64>>,
{
    let d0 = five_point(&f, x, h)?;
    let d1 = five_point(&f, x, 3.0 * h)?;
    let d2 = five_point(&f, x, 10.0 * h)?;
    if max_relative_error(&d0, &d1, floor) <= max_relative_error(&d1, &d2, floor) { Ok(d0) } else { Ok(d1) }
}

/// Largest relative deviation `|a - b| / |a|` over entries of `a` larger than `floor`.
pub fn max_relative_error(analytic: &[C64], reference: &[C64], floor: f64) -> f64 {
    analytic
        .iter()
        .zip(reference)
        .filter(|(a, _)| a.norm() > floor)
        .map(|(a, b)| (a - b).norm() / a.norm())
        .fold(0.0, f64::max)
}
