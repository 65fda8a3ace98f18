//! Small dense complex matrices (mode-space sized, never Fock-space sized).

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type CMatrix = Array2<C64>;

/// Tolerance on `max |U^dag U - I|` for a matrix to count as unitary.
pub const UNITARITY_TOL: f64 = 1e-12;

pub fn identity(n: usize) -> CMatrix {
    Array2::from_shape_fn((n, n), |(i, j)| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
}

pub fn diag(entries: &[C64]) -> CMatrix {
    let n = entries.len();
    Array2::from_shape_fn((n, n), |(i, j)| if i == j { entries[i] } else { C64::new(0.0, 0.0) })
}

pub fn adjoint(m: &CMatrix) -> CMatrix {
    m.t().mapv(|z| z.conj())
}

pub fn transpose(m: &CMatrix) -> CMatrix {
    m.t().to_owned()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).fold(0.0_f64, |acc, (x, y)| acc.max((x - y).norm()))
}

/// `max |U^dag U - I|` entrywise.
pub fn unitarity_deviation(u: &CMatrix) -> f64 {
    let n = u.nrows();
    let prod = adjoint(u).dot(u);
    max_abs_diff(&prod, &identity(n))
}

pub fn check_unitary(name: &'static str, u: &CMatrix) -> Result<()> {
    if u.nrows() != u.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "`{name}` is {}x{}, expected square",
            u.nrows(),
            u.ncols()
        )));
    }
    if u.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite(name));
    }
    let deviation = unitarity_deviation(u);
    if deviation > UNITARITY_TOL {
        return Err(Error::NonUnitary { name, deviation, tolerance: UNITARITY_TOL });
    }
    Ok(())
}

/// The 2x2 unitary of the beamsplitter `B(theta, varphi)`:
/// `[[cos t, -e^{-i p} sin t], [e^{i p} sin t, cos t]]`.
pub fn beamsplitter_matrix(theta: f64, varphi: f64) -> CMatrix {
    let (s, c) = theta.sin_cos();
    let e = C64::from_polar(1.0, varphi);
    ndarray::arr2(&[[C64::new(c, 0.0), -e.conj() * s], [e * s, C64::new(c, 0.0)]])
}

/// `d/dtheta` of [`beamsplitter_matrix`].
pub fn beamsplitter_matrix_dtheta(theta: f64, varphi: f64) -> CMatrix {
    let (s, c) = theta.sin_cos();
    let e = C64::from_polar(1.0, varphi);
    ndarray::arr2(&[[C64::new(-s, 0.0), -e.conj() * c], [e * c, C64::new(-s, 0.0)]])
}

/// `d/dvarphi` of [`beamsplitter_matrix`].
pub fn beamsplitter_matrix_dvarphi(theta: f64, varphi: f64) -> CMatrix {
    let s = theta.sin();
    let e = C64::from_polar(1.0, varphi);
    let i = C64::i();
    ndarray::arr2(&[[C64::new(0.0, 0.0), i * e.conj() * s], [i * e * s, C64::new(0.0, 0.0)]])
}

pub fn phase_matrix(phis: &[f64]) -> CMatrix {
    let entries: Vec<C64> = phis.iter().map(|&p| C64::from_polar(1.0, p)).collect();
    diag(&entries)
}

/// Haar-random unitary via modified Gram-Schmidt on a complex Ginibre matrix.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let mut m = Array2::from_shape_fn((n, n), |_| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im) / std::f64::consts::SQRT_2
    });
    for j in 0..n {
        for k in 0..j {
            let proj: C64 = (0..n).map(|i| m[[i, k]].conj() * m[[i, j]]).sum();
            for i in 0..n {
                let mk = m[[i, k]];
                m[[i, j]] -= proj * mk;
            }
        }
        let norm = (0..n).map(|i| m[[i, j]].norm_sqr()).sum::<f64>().sqrt();
        for i in 0..n {
            m[[i, j]] /= norm;
        }
    }
    // second pass cleans up the residual orthogonality error of a single sweep
    for j in 0..n {
        for k in 0..j {
            let proj: C64 = (0..n).map(|i| m[[i, k]].conj() * m[[i, j]]).sum();
            for i in 0..n {
                let mk = m[[i, k]];
                m[[i, j]] -= proj * mk;
            }
        }
        let norm = (0..n).map(|i| m[[i, j]].norm_sqr()).sum::<f64>().sqrt();
        for i in 0..n {
            m[[i, j]] /= norm;
        }
    }
    m
}

/// Hermitian basis of `n x n` matrices: diagonal units, then for each `j < k`
/// the symmetric `E_jk + E_kj` and antisymmetric `i(E_kj - E_jk)` pair.
pub fn hermitian_basis(n: usize, include_diagonal: bool) -> Vec<CMatrix> {
    let zero = C64::new(0.0, 0.0);
    let mut out = Vec::new();
    if include_diagonal {
        for j in 0..n {
            let mut h = Array2::from_elem((n, n), zero);
            h[[j, j]] = C64::new(1.0, 0.0);
            out.push(h);
        }
    }
    for j in 0..n {
        for k in (j + 1)..n {
            let mut h = Array2::from_elem((n, n), zero);
            h[[j, k]] = C64::new(1.0, 0.0);
            h[[k, j]] = C64::new(1.0, 0.0);
            out.push(h);
            let mut a = Array2::from_elem((n, n), zero);
            a[[j, k]] = C64::new(0.0, -1.0);
            a[[k, j]] = C64::new(0.0, 1.0);
            out.push(a);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn haar_unitaries_are_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..6 {
            let u = haar_unitary(n, &mut rng);
            assert!(unitarity_deviation(&u) < 1e-14, "n = {n}");
        }
    }

    #[test]
    fn beamsplitter_matrix_derivatives_match_differences() {
        let (t, p, h) = (0.7, -0.3, 1e-6);
        let fd_t = (beamsplitter_matrix(t + h, p) - beamsplitter_matrix(t - h, p)) / C64::new(2.0 * h, 0.0);
        let fd_p = (beamsplitter_matrix(t, p + h) - beamsplitter_matrix(t, p - h)) / C64::new(2.0 * h, 0.0);
        assert!(max_abs_diff(&fd_t, &beamsplitter_matrix_dtheta(t, p)) < 1e-9);
        assert!(max_abs_diff(&fd_p, &beamsplitter_matrix_dvarphi(t, p)) < 1e-9);
    }

    #[test]
    fn non_unitary_is_rejected() {
        let mut m = identity(2);
        m[[0, 1]] = C64::new(1e-6, 0.0);
        assert!(matches!(check_unitary("m", &m), Err(Error::NonUnitary { .. })));
    }

    #[test]
    fn hermitian_basis_counts() {
        assert_eq!(hermitian_basis(3, true).len(), 9);
        assert_eq!(hermitian_basis(3, false).len(), 6);
        for h in hermitian_basis(3, true) {
            assert!(max_abs_diff(&h, &adjoint(&h)) == 0.0);
        }
    }
}
