//! Fock-basis tensors of Gaussian gates.
//!
//! Every builder seeds `G_0 = C` and raises one index at a time with
//! `G_{k+1_i} = (G_k mu_i - sum_l sqrt(k_l) G_{k-1_l} Sigma_il) / sqrt(k_i + 1)`,
//! treating indices outside the cutoff as zero. The specialized builders are
//! this recurrence with the structural zeros of their exponent removed.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::gaussian::{self, GeneratingExponent, Squeezing};
use crate::linalg::{self, CMatrix};
use crate::tensor::{dense_len, BuildOptions, GateTensor, SelectionRule};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

pub(crate) fn sqrt_table(n: usize) -> Vec<f64> {
    (0..=n).map(|k| (k as f64).sqrt()).collect()
}

fn check_cutoff(cutoff: usize) -> Result<()> {
    if cutoff == 0 {
        return Err(Error::InvalidParameter { name: "cutoff", reason: "cutoff must be at least 1".into() });
    }
    Ok(())
}

fn check_finite(name: &'static str, z: C64) -> Result<()> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(name))
    }
}

/// The axis to lower: the largest entry of `k`, the last one on ties. Dividing by the
/// largest `sqrt(k_i)` keeps rounding error from growing at large cutoffs.
fn largest_axis(k: &[usize]) -> usize {
    let mut best = 0;
    for (a, &v) in k.iter().enumerate() {
        if v >= k[best] {
            best = a;
        }
    }
    best
}

fn finish(t: GateTensor, what: &str) -> Result<GateTensor> {
    if t.all_finite() {
        Ok(t)
    } else {
        Err(Error::NonFiniteValue(format!("{what} tensor overflowed")))
    }
}

/// Tensor of an arbitrary Gaussian gate from its exponent, by the general recurrence.
pub fn general_gaussian_tensor(exp: &GeneratingExponent, modes: usize, cutoff: usize) -> Result<GateTensor> {
    general_gaussian_tensor_with(exp, modes, cutoff, &BuildOptions::default())
}

pub fn general_gaussian_tensor_with(
    exp: &GeneratingExponent,
    modes: usize,
    cutoff: usize,
    opts: &BuildOptions,
) -> Result<GateTensor> {
    check_cutoff(cutoff)?;
    let rank = 2 * modes;
    if modes == 0 || exp.mu.len() != rank || exp.sigma.dim() != (rank, rank) {
        return Err(Error::DimensionMismatch(format!(
            "exponent has mu of length {} and Sigma {:?}, expected {rank}",
            exp.mu.len(),
            exp.sigma.dim()
        )));
    }
    let total = dense_len(modes, cutoff);
    opts.check(total)?;
    let total = total as usize;
    let sq = sqrt_table(cutoff);
    let strides: Vec<usize> = (0..rank).map(|a| cutoff.pow((rank - 1 - a) as u32)).collect();
    let sigma: Vec<C64> = exp.sigma.iter().copied().collect();

    let mut g = vec![ZERO; total];
    g[0] = exp.c;
    let mut k = vec![0usize; rank];
    for f in 1..total {
        // odometer increment of k to match flat index f
        let mut a = rank - 1;
        loop {
            k[a] += 1;
            if k[a] < cutoff {
                break;
            }
            k[a] = 0;
            a -= 1;
        }
        let i = largest_axis(&k);
        let p = f - strides[i];
        let mut acc = g[p] * exp.mu[i];
        for l in 0..rank {
            let pl = if l == i { k[l] - 1 } else { k[l] };
            if pl > 0 {
                acc -= g[p - strides[l]] * sigma[i * rank + l] * sq[pl];
            }
        }
        g[f] = acc / sq[k[i]];
    }
    finish(GateTensor::dense_unchecked(modes, cutoff, g, SelectionRule::None), "general Gaussian")
}

/// `<m|D(gamma)|n>` for `D(gamma) = exp(gamma a^dag - conj(gamma) a)`.
///
/// The first column follows `D_{m+1,0} = gamma D_{m,0} / sqrt(m+1)`. Eliminating the
/// row relation `D_{m,n+1} = (-conj(gamma) D_{m,n} + sqrt(m) D_{m-1,n}) / sqrt(n+1)`
/// gives a three-term relation along each diagonal `m - n = a`, which stays stable at
/// large cutoffs where the row relation amplifies rounding error. The upper triangle
/// follows from `D_{n,m} = (-1)^{m+n} conj(D_{m,n})`.
pub fn displacement(gamma: C64, cutoff: usize) -> Result<GateTensor> {
    check_finite("gamma", gamma)?;
    check_cutoff(cutoff)?;
    let n = cutoff;
    let sq = sqrt_table(n);
    let x = gamma.norm_sqr();
    let mut d = vec![ZERO; n * n];
    d[0] = C64::new((-0.5 * x).exp(), 0.0);
    for m in 1..n {
        d[m * n] = gamma * d[(m - 1) * n] / sq[m];
    }
    for a in 0..n {
        // d_k = D_{k+a,k}: d_{k+1} = ((2k+a+1-x) d_k - sqrt(k(k+a)) d_{k-1}) / sqrt((k+1)(k+a+1))
        for k in 0..(n - a - 1) {
            let mut v = d[(k + a) * n + k] * (2.0 * k as f64 + a as f64 + 1.0 - x);
            if k > 0 {
                v -= d[(k + a - 1) * n + k - 1] * (sq[k] * sq[k + a]);
            }
            d[(k + a + 1) * n + k + 1] = v / (sq[k + 1] * sq[k + a + 1]);
        }
    }
    for m in 0..n {
        for j in (m + 1)..n {
            let v = d[j * n + m].conj();
            d[m * n + j] = if (m + j) % 2 == 0 { v } else { -v };
        }
    }
    finish(GateTensor::dense_unchecked(1, n, d, SelectionRule::None), "displacement")
}

/// `<m|S(zeta)|n>` for `S(zeta) = exp((conj(zeta) a^2 - zeta a^dag^2) / 2)`; odd `m + n` stay exactly zero.
pub fn squeezer(zeta: C64, cutoff: usize) -> Result<GateTensor> {
    check_finite("zeta", zeta)?;
    check_cutoff(cutoff)?;
    let sqz = Squeezing::from_complex(zeta)?;
    let n = cutoff;
    let sq = sqrt_table(n);
    let e = C64::from_polar(sqz.tanh(), sqz.delta());
    let ec = e.conj();
    let s = sqz.sech();
    let mut d = vec![ZERO; n * n];
    d[0] = C64::new(s.sqrt(), 0.0);
    for m in (2..n).step_by(2) {
        d[m * n] = -d[(m - 2) * n] * e * (sq[m - 1] / sq[m]);
    }
    for m in 0..n {
        for j in ((2 - m % 2)..n).step_by(2) {
            let v = if m > j {
                // lower the bra index
                let mut v = d[(m - 1) * n + j - 1] * (sq[j] * s);
                if m > 1 {
                    v -= d[(m - 2) * n + j] * e * sq[m - 1];
                }
                v / sq[m]
            } else {
                let mut v = ZERO;
                if m > 0 {
                    v += d[(m - 1) * n + j - 1] * (sq[m] * s);
                }
                if j > 1 {
                    v += d[m * n + j - 2] * ec * sq[j - 1];
                }
                v / sq[j]
            };
            d[m * n + j] = v;
        }
    }
    finish(GateTensor::dense_unchecked(1, n, d, SelectionRule::None), "squeezer")
}

/// Rank-2 tensor from an `l = 1` exponent: first column, then rows.
pub(crate) fn single_mode_from_exponent(exp: &GeneratingExponent, cutoff: usize) -> Result<GateTensor> {
    check_cutoff(cutoff)?;
    let n = cutoff;
    let sq = sqrt_table(n);
    let (mu0, mu1) = (exp.mu[0], exp.mu[1]);
    let (s00, s10, s11) = (exp.sigma[[0, 0]], exp.sigma[[1, 0]], exp.sigma[[1, 1]]);
    let mut d = vec![ZERO; n * n];
    d[0] = exp.c;
    for m in 1..n {
        let mut v = d[(m - 1) * n] * mu0;
        if m > 1 {
            v -= d[(m - 2) * n] * s00 * sq[m - 1];
        }
        d[m * n] = v / sq[m];
    }
    let s01 = exp.sigma[[0, 1]];
    for m in 0..n {
        let row = m * n;
        for j in 1..n {
            let v = if m > j {
                // lower the bra index
                let mut v = d[row - n + j] * mu0 - d[row - n + j - 1] * s01 * sq[j];
                if m > 1 {
                    v -= d[row - 2 * n + j] * s00 * sq[m - 1];
                }
                v / sq[m]
            } else {
                let mut v = d[row + j - 1] * mu1;
                if m > 0 {
                    v -= d[row - n + j - 1] * s10 * sq[m];
                }
                if j > 1 {
                    v -= d[row + j - 2] * s11 * sq[j - 1];
                }
                v / sq[j]
            };
            d[row + j] = v;
        }
    }
    finish(GateTensor::dense_unchecked(1, n, d, SelectionRule::None), "single-mode Gaussian")
}

/// `<m|D(gamma) R(phi) S(zeta)|n>`.
pub fn single_mode_gaussian(gamma: C64, phi: f64, zeta: C64, cutoff: usize) -> Result<GateTensor> {
    let exp = gaussian::build_single_mode(gamma, phi, zeta)?;
    single_mode_from_exponent(&exp, cutoff)
}

/// `<m,n|S2(zeta)|p,q>` for `S2(zeta) = exp(zeta a1^dag a2^dag - h.c.)`, on the band `m - n = p - q`.
pub fn two_mode_squeezer(zeta: C64, cutoff: usize) -> Result<GateTensor> {
    check_finite("zeta", zeta)?;
    check_cutoff(cutoff)?;
    let sqz = Squeezing::from_complex(zeta)?;
    let n = cutoff;
    let sq = sqrt_table(n);
    let t = C64::from_polar(sqz.tanh(), sqz.delta());
    let tc = t.conj();
    let s = sqz.sech();
    let at = |m: usize, nn: usize, p: usize| (m * n + nn) * n + p;
    let mut g = vec![ZERO; n * n * n];
    g[0] = C64::new(s, 0.0);
    for m in 0..n {
        for nn in 0..n {
            for p in 0..n {
                // q = p - m + nn must lie in [0, N)
                let Some(q) = (p + nn).checked_sub(m) else { continue };
                if q >= n || (m == 0 && nn == 0 && p == 0) {
                    continue;
                }
                // every neighbour below keeps m - nn = p - q
                let v = match largest_axis(&[m, nn, p, q]) {
                    0 => {
                        let mut v = ZERO;
                        if nn > 0 {
                            v += g[at(m - 1, nn - 1, p)] * t * sq[nn];
                        }
                        if p > 0 {
                            v += g[at(m - 1, nn, p - 1)] * (s * sq[p]);
                        }
                        v / sq[m]
                    }
                    1 => {
                        let mut v = ZERO;
                        if m > 0 {
                            v += g[at(m - 1, nn - 1, p)] * t * sq[m];
                        }
                        if q > 0 {
                            v += g[at(m, nn - 1, p)] * (s * sq[q]);
                        }
                        v / sq[nn]
                    }
                    2 => {
                        let mut v = ZERO;
                        if m > 0 {
                            v += g[at(m - 1, nn, p - 1)] * (s * sq[m]);
                        }
                        if q > 0 {
                            v -= g[at(m, nn, p - 1)] * tc * sq[q];
                        }
                        v / sq[p]
                    }
                    _ => {
                        let mut v = ZERO;
                        if nn > 0 {
                            v += g[at(m, nn - 1, p)] * (s * sq[nn]);
                        }
                        if p > 0 {
                            v -= g[at(m, nn, p - 1)] * tc * sq[p];
                        }
                        v / sq[q]
                    }
                };
                g[at(m, nn, p)] = v;
            }
        }
    }
    finish(GateTensor::banded_unchecked(n, SelectionRule::PairDifference, g), "two-mode squeezer")
}

/// `<m,n|B(theta, varphi)|p,q>` on the band `m + n = p + q`.
pub fn beamsplitter(theta: f64, varphi: f64, cutoff: usize) -> Result<GateTensor> {
    if !theta.is_finite() || !varphi.is_finite() {
        return Err(Error::NonFinite("beamsplitter angle"));
    }
    check_cutoff(cutoff)?;
    let v = linalg::beamsplitter_matrix(theta, varphi);
    banded_interferometer(&v, cutoff)
}

fn banded_interferometer(v: &CMatrix, cutoff: usize) -> Result<GateTensor> {
    let n = cutoff;
    let sq = sqrt_table(n);
    let (v11, v12, v21, v22) = (v[[0, 0]], v[[0, 1]], v[[1, 0]], v[[1, 1]]);
    let at = |m: usize, nn: usize, p: usize| (m * n + nn) * n + p;
    let mut g = vec![ZERO; n * n * n];
    g[0] = C64::new(1.0, 0.0);
    for m in 0..n {
        for nn in 0..n {
            let total = m + nn;
            if total == 0 {
                continue;
            }
            for p in total.saturating_sub(n - 1)..=total.min(n - 1) {
                let q = total - p;
                // every neighbour below has total photon number total - 1
                let v = match largest_axis(&[m, nn, p, q]) {
                    0 => {
                        let mut v = ZERO;
                        if p > 0 {
                            v += g[at(m - 1, nn, p - 1)] * v11 * sq[p];
                        }
                        if q > 0 {
                            v += g[at(m - 1, nn, p)] * v12 * sq[q];
                        }
                        v / sq[m]
                    }
                    1 => {
                        let mut v = ZERO;
                        if p > 0 {
                            v += g[at(m, nn - 1, p - 1)] * v21 * sq[p];
                        }
                        if q > 0 {
                            v += g[at(m, nn - 1, p)] * v22 * sq[q];
                        }
                        v / sq[nn]
                    }
                    2 => {
                        let mut v = ZERO;
                        if m > 0 {
                            v += g[at(m - 1, nn, p - 1)] * v11 * sq[m];
                        }
                        if nn > 0 {
                            v += g[at(m, nn - 1, p - 1)] * v21 * sq[nn];
                        }
                        v / sq[p]
                    }
                    _ => {
                        let mut v = ZERO;
                        if m > 0 {
                            v += g[at(m - 1, nn, p)] * v12 * sq[m];
                        }
                        if nn > 0 {
                            v += g[at(m, nn - 1, p)] * v22 * sq[nn];
                        }
                        v / sq[q]
                    }
                };
                g[at(m, nn, p)] = v;
            }
        }
    }
    finish(GateTensor::banded_unchecked(n, SelectionRule::ParticleConserving, g), "beamsplitter")
}

/// Tensor of the passive interferometer `U(V)`; only entries with `sum(m) == sum(n)` are nonzero.
pub fn interferometer_tensor(v: &CMatrix, cutoff: usize) -> Result<GateTensor> {
    interferometer_tensor_with(v, cutoff, &BuildOptions::default())
}

pub fn interferometer_tensor_with(v: &CMatrix, cutoff: usize, opts: &BuildOptions) -> Result<GateTensor> {
    linalg::check_unitary("V", v)?;
    check_cutoff(cutoff)?;
    let l = v.nrows();
    let rank = 2 * l;
    let total = dense_len(l, cutoff);
    opts.check(total)?;
    let total = total as usize;
    let sq = sqrt_table(cutoff);
    let strides: Vec<usize> = (0..rank).map(|a| cutoff.pow((rank - 1 - a) as u32)).collect();

    let mut g = vec![ZERO; total];
    g[0] = C64::new(1.0, 0.0);
    let mut k = vec![0usize; rank];
    for f in 1..total {
        let mut a = rank - 1;
        loop {
            k[a] += 1;
            if k[a] < cutoff {
                break;
            }
            k[a] = 0;
            a -= 1;
        }
        if k[..l].iter().sum::<usize>() != k[l..].iter().sum::<usize>() {
            continue;
        }
        // only the opposite block of Sigma = -[[0, V], [V^T, 0]] contributes
        let i = largest_axis(&k);
        let p = f - strides[i];
        let (others, offset) = if i < l { (l..rank, l) } else { (0..l, 0) };
        let mut acc = ZERO;
        for b in others {
            if k[b] > 0 {
                let vij = if i < l { v[[i, b - offset]] } else { v[[b, i - l]] };
                acc += g[p - strides[b]] * vij * sq[k[b]];
            }
        }
        g[f] = acc / sq[k[i]];
    }
    finish(GateTensor::dense_unchecked(l, cutoff, g, SelectionRule::ParticleConserving), "interferometer")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{build_interferometer, build_single_mode, build_two_mode_squeezer};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_3, FRAC_PI_4, PI};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn assert_identity(t: &GateTensor) {
        let dim = t.hilbert_dim();
        let m = t.to_matrix().unwrap();
        for i in 0..dim {
            for j in 0..dim {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((m[[i, j]] - c(expected, 0.0)).norm() < 1e-15, "({i},{j}) = {}", m[[i, j]]);
            }
        }
    }

    #[test]
    fn identity_exponent_gives_identity() {
        let exp = build_single_mode(c(0.0, 0.0), 0.0, c(0.0, 0.0)).unwrap();
        assert_identity(&general_gaussian_tensor(&exp, 1, 5).unwrap());
        assert_identity(&displacement(c(0.0, 0.0), 6).unwrap());
        assert_identity(&squeezer(c(0.0, 0.0), 6).unwrap());
        assert_identity(&single_mode_gaussian(c(0.0, 0.0), 0.0, c(0.0, 0.0), 6).unwrap());
        assert_identity(&two_mode_squeezer(c(0.0, 0.0), 5).unwrap());
        assert_identity(&beamsplitter(0.0, 0.7, 5).unwrap());
        assert_identity(&interferometer_tensor(&linalg::identity(3), 3).unwrap());
    }

    #[test]
    fn displayed_seed_values() {
        let d = displacement(c(1.0, 0.0), 4).unwrap();
        assert!((d.get(&[0, 0]).re - 0.6065306597126334).abs() < 1e-15);
        let s = squeezer(c(1.0, 0.0), 4).unwrap();
        assert!((s.get(&[0, 0]).re - (1.0 / 1.0_f64.cosh()).sqrt()).abs() < 1e-15);
        assert!((s.get(&[0, 0]).re - 0.8050181821945921).abs() < 1e-15);
        let s2 = two_mode_squeezer(c(0.5, 0.0), 4).unwrap();
        assert!((s2.get(&[0, 0, 0, 0]).re - 1.0 / 0.5_f64.cosh()).abs() < 1e-15);
    }

    #[test]
    fn squeezer_matches_general_and_is_checkerboard() {
        let zeta = C64::from_polar(0.5, 0.0);
        let exp = build_single_mode(c(0.0, 0.0), 0.0, zeta).unwrap();
        let a = squeezer(zeta, 10).unwrap();
        assert!(a.max_abs_diff(&general_gaussian_tensor(&exp, 1, 10).unwrap()).unwrap() < 1e-14);
        a.for_each(|idx, v| {
            if (idx[0] + idx[1]) % 2 == 1 {
                assert_eq!(v, c(0.0, 0.0));
            }
        });
        let zeta = C64::from_polar(0.7, FRAC_PI_3);
        let exp = build_single_mode(c(0.0, 0.0), 0.0, zeta).unwrap();
        let diff = squeezer(zeta, 14).unwrap().max_abs_diff(&general_gaussian_tensor(&exp, 1, 14).unwrap());
        assert!(diff.unwrap() < 1e-14);
    }

    #[test]
    fn displacement_matches_general() {
        let g = c(0.3, 0.4);
        let exp = build_single_mode(g, 0.0, c(0.0, 0.0)).unwrap();
        let diff = displacement(g, 12).unwrap().max_abs_diff(&general_gaussian_tensor(&exp, 1, 12).unwrap());
        assert!(diff.unwrap() < 1e-14);
        let diff = displacement(g, 12).unwrap().max_abs_diff(&single_mode_gaussian(g, 0.0, c(0.0, 0.0), 12).unwrap());
        assert!(diff.unwrap() < 1e-14);
    }

    #[test]
    fn rotation_is_diagonal_phase() {
        let phi = 0.83;
        let r = single_mode_gaussian(c(0.0, 0.0), phi, c(0.0, 0.0), 8).unwrap();
        r.for_each(|idx, v| {
            let expected = if idx[0] == idx[1] { C64::from_polar(1.0, phi * idx[0] as f64) } else { c(0.0, 0.0) };
            assert!((v - expected).norm() < 1e-14);
        });
    }

    #[test]
    fn two_mode_squeezer_matches_general() {
        let zeta = C64::from_polar(0.8, 1.1);
        let exp = build_two_mode_squeezer(zeta).unwrap();
        let a = two_mode_squeezer(zeta, 8).unwrap();
        let b = general_gaussian_tensor(&exp, 2, 8).unwrap();
        assert!(a.max_abs_diff(&b).unwrap() < 1e-13, "{}", a.max_abs_diff(&b).unwrap());
        assert_eq!(b.selection_violations(SelectionRule::PairDifference), 0);
    }

    #[test]
    fn beamsplitter_single_photon_block() {
        let b = beamsplitter(FRAC_PI_4, 0.0, 4).unwrap();
        assert!((b.get(&[1, 0, 0, 1]) - c(-FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        let v = linalg::beamsplitter_matrix(0.9, 0.4);
        let b = beamsplitter(0.9, 0.4, 5).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let mut idx = [0usize; 4];
                idx[i] += 1;
                idx[2 + j] += 1;
                assert!((b.get(&idx) - v[[i, j]]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn beamsplitter_blocks_are_unitary() {
        let n = 10;
        let b = beamsplitter(0.9, 0.4, n).unwrap();
        for total in 0..n {
            let states: Vec<(usize, usize)> = (0..=total).map(|p| (p, total - p)).collect();
            for &(p1, q1) in &states {
                for &(p2, q2) in &states {
                    let ip: C64 = states
                        .iter()
                        .map(|&(m, nn)| b.get(&[m, nn, p1, q1]).conj() * b.get(&[m, nn, p2, q2]))
                        .sum();
                    let expected = if (p1, q1) == (p2, q2) { 1.0 } else { 0.0 };
                    assert!((ip - c(expected, 0.0)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn specialized_two_mode_builders_match_general() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let (theta, varphi) = (rng.gen_range(-PI..PI), rng.gen_range(-PI..PI));
            let v = linalg::beamsplitter_matrix(theta, varphi);
            let b = beamsplitter(theta, varphi, 7).unwrap();
            let general = general_gaussian_tensor(&build_interferometer(&v).unwrap(), 2, 7).unwrap();
            assert!(b.max_abs_diff(&general).unwrap() < 1e-13);
            assert!(b.max_abs_diff(&interferometer_tensor(&v, 7).unwrap()).unwrap() < 1e-14);
        }
    }

    #[test]
    fn interferometer_single_photon_entries_are_v() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let v = linalg::haar_unitary(3, &mut rng);
        let u = interferometer_tensor(&v, 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut idx = [0usize; 6];
                idx[i] = 1;
                idx[3 + j] = 1;
                assert!((u.get(&idx) - v[[i, j]]).norm() < 1e-15);
            }
        }
        assert_eq!(u.selection_violations(SelectionRule::ParticleConserving), 0);
    }

    #[test]
    fn cutoff_one_is_the_constant() {
        let exp = build_single_mode(c(0.6, 0.1), 0.3, c(0.4, 0.2)).unwrap();
        let t = general_gaussian_tensor(&exp, 1, 1).unwrap();
        assert_eq!(t.dense_data().unwrap(), &[exp.c]);
        assert_eq!(single_mode_from_exponent(&exp, 1).unwrap().dense_data().unwrap(), &[exp.c]);
    }

    #[test]
    fn budget_breach_is_an_error() {
        let v = linalg::identity(3);
        let opts = BuildOptions { element_budget: 1000 };
        assert!(matches!(interferometer_tensor_with(&v, 4, &opts), Err(Error::BudgetExceeded { .. })));
        let exp = build_interferometer(&v).unwrap();
        assert!(matches!(general_gaussian_tensor_with(&exp, 3, 4, &opts), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn large_cutoff_displacement_is_finite() {
        let d = displacement(C64::from_polar(2.0, 0.7), 200).unwrap();
        assert!(d.all_finite());
        assert!(d.column_norms().unwrap().iter().all(|&x| x <= 1.0 + 1e-10));
    }
}
