//! Generating-function exponents `(C, mu, Sigma)` of Gaussian gates.
//!
//! For a gate `G` the coherent-state overlap, rescaled by
//! `exp((|alpha|^2 + |beta|^2) / 2)`, equals `C exp(mu^T nu - nu^T Sigma nu / 2)`
//! with `nu = [alpha; beta]`. Its Taylor coefficients are the Fock matrix
//! elements, which [`crate::gates`] recovers recursively.
//!
//! A general `l`-mode gate is parametrized as `D(gamma) U(W) S(zeta) U(V)`.

use ndarray::{s, Array2};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};

/// Squeezing `zeta = r e^{i delta}` in polar form with `r >= 0`, `delta in [0, 2pi)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Squeezing {
    r: f64,
    delta: f64,
}

impl Squeezing {
    pub const ZERO: Squeezing = Squeezing { r: 0.0, delta: 0.0 };

    pub fn new(r: f64, delta: f64) -> Result<Self> {
        if !r.is_finite() || !delta.is_finite() {
            return Err(Error::NonFinite("zeta"));
        }
        if r < 0.0 {
            return Err(Error::InvalidParameter {
                name: "r",
                reason: format!("squeezing magnitude must be non-negative, got {r}"),
            });
        }
        if r == 0.0 {
            return Ok(Self::ZERO);
        }
        Ok(Squeezing { r, delta: delta.rem_euclid(std::f64::consts::TAU) })
    }

    /// Normalizes a complex squeezing parameter; the phase of zero is taken as 0.
    pub fn from_complex(zeta: C64) -> Result<Self> {
        if !zeta.re.is_finite() || !zeta.im.is_finite() {
            return Err(Error::NonFinite("zeta"));
        }
        let (r, delta) = zeta.to_polar();
        Self::new(r, delta)
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn to_complex(&self) -> C64 {
        C64::from_polar(self.r, self.delta)
    }

    pub fn tanh(&self) -> f64 {
        self.r.tanh()
    }

    /// `sech r`, computed without forming `cosh r` so it stays finite for huge `r`.
    pub fn sech(&self) -> f64 {
        stable_sech(self.r)
    }

    pub fn log_cosh(&self) -> f64 {
        stable_log_cosh(self.r)
    }
}

pub(crate) fn stable_sech(r: f64) -> f64 {
    let e = (-r.abs()).exp();
    2.0 * e / (1.0 + e * e)
}

pub(crate) fn stable_log_cosh(r: f64) -> f64 {
    let a = r.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// Parameters `(gamma, W, zeta, V)` of an `l`-mode Gaussian unitary.
#[derive(Clone, Debug)]
pub struct GaussianSpec {
    gamma: Vec<C64>,
    w: CMatrix,
    zeta: Vec<Squeezing>,
    v: CMatrix,
}

impl GaussianSpec {
    pub fn new(gamma: Vec<C64>, w: CMatrix, zeta: Vec<Squeezing>, v: CMatrix) -> Result<Self> {
        let l = gamma.len();
        if l == 0 {
            return Err(Error::DimensionMismatch("a Gaussian gate needs at least one mode".into()));
        }
        if zeta.len() != l || w.dim() != (l, l) || v.dim() != (l, l) {
            return Err(Error::DimensionMismatch(format!(
                "gamma has {l} modes but zeta has {}, W is {:?} and V is {:?}",
                zeta.len(),
                w.dim(),
                v.dim()
            )));
        }
        if gamma.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("gamma"));
        }
        linalg::check_unitary("W", &w)?;
        linalg::check_unitary("V", &v)?;
        Ok(GaussianSpec { gamma, w, zeta, v })
    }

    /// The identity gate on `modes` modes.
    pub fn identity(modes: usize) -> Result<Self> {
        Self::new(
            vec![C64::new(0.0, 0.0); modes],
            linalg::identity(modes),
            vec![Squeezing::ZERO; modes],
            linalg::identity(modes),
        )
    }

    pub fn modes(&self) -> usize {
        self.gamma.len()
    }

    pub fn gamma(&self) -> &[C64] {
        &self.gamma
    }

    pub fn w(&self) -> &CMatrix {
        &self.w
    }

    pub fn zeta(&self) -> &[Squeezing] {
        &self.zeta
    }

    pub fn v(&self) -> &CMatrix {
        &self.v
    }
}

/// The triple `(C, mu, Sigma)` of a Gaussian generating function.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratingExponent {
    pub c: C64,
    pub mu: Vec<C64>,
    pub sigma: CMatrix,
}

impl GeneratingExponent {
    pub fn modes(&self) -> usize {
        self.mu.len() / 2
    }

    /// Largest entrywise deviation between two exponents of the same size.
    pub fn max_abs_diff(&self, other: &GeneratingExponent) -> f64 {
        let dc = (self.c - other.c).norm();
        let dmu = self.mu.iter().zip(&other.mu).fold(0.0_f64, |a, (x, y)| a.max((x - y).norm()));
        dc.max(dmu).max(linalg::max_abs_diff(&self.sigma, &other.sigma))
    }
}

fn symmetrize(m: &mut CMatrix) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = (m[[i, j]] + m[[j, i]]) * 0.5;
            m[[i, j]] = avg;
            m[[j, i]] = avg;
        }
    }
}

fn assemble_sigma(upper_left: &CMatrix, upper_right: &CMatrix, lower_right: &CMatrix) -> CMatrix {
    let l = upper_left.nrows();
    let mut sigma = Array2::from_elem((2 * l, 2 * l), C64::new(0.0, 0.0));
    sigma.slice_mut(s![..l, ..l]).assign(upper_left);
    sigma.slice_mut(s![..l, l..]).assign(upper_right);
    sigma.slice_mut(s![l.., ..l]).assign(&upper_right.t());
    sigma.slice_mut(s![l.., l..]).assign(lower_right);
    symmetrize(&mut sigma);
    sigma
}

/// Exponent of `D(gamma) U(W) S(zeta) U(V)`.
pub fn build_general(spec: &GaussianSpec) -> GeneratingExponent {
    let l = spec.modes();
    let (w, v) = (&spec.w, &spec.v);
    let squeeze_phase: Vec<C64> =
        spec.zeta.iter().map(|z| C64::from_polar(z.tanh(), z.delta())).collect();
    let squeeze_phase_conj: Vec<C64> = squeeze_phase.iter().map(|z| z.conj()).collect();
    let sech: Vec<C64> = spec.zeta.iter().map(|z| C64::new(z.sech(), 0.0)).collect();

    // M = W diag(e^{i delta} tanh r) W^T, X = W diag(sech r) V, Mc = V^T diag(e^{-i delta} tanh r) V
    let m = w.dot(&linalg::diag(&squeeze_phase)).dot(&w.t());
    let x = w.dot(&linalg::diag(&sech)).dot(v);
    let mc = v.t().dot(&linalg::diag(&squeeze_phase_conj)).dot(v);

    let gamma_conj: Vec<C64> = spec.gamma.iter().map(|g| g.conj()).collect();
    let gc = ndarray::Array1::from(gamma_conj.clone());
    let m_gc = m.dot(&gc);
    let xt_gc = x.t().dot(&gc);

    let norm_sq: f64 = spec.gamma.iter().map(|g| g.norm_sqr()).sum();
    let quad: C64 = gamma_conj.iter().zip(m_gc.iter()).map(|(a, b)| a * b).sum();
    let log_cosh: f64 = spec.zeta.iter().map(|z| z.log_cosh()).sum();
    let c = (-(C64::new(norm_sq, 0.0) + quad) * 0.5 - 0.5 * log_cosh).exp();

    let mut mu = Vec::with_capacity(2 * l);
    mu.extend(m_gc.iter().zip(&spec.gamma).map(|(a, g)| a + g));
    mu.extend(xt_gc.iter().map(|a| -a));

    GeneratingExponent { c, mu, sigma: assemble_sigma(&m, &(-x), &(-mc)) }
}

fn check_finite_c(name: &'static str, z: C64) -> Result<()> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(name))
    }
}

/// Exponent of the single-mode gate `D(gamma) R(phi) S(zeta)`, from its closed form.
pub fn build_single_mode(gamma: C64, phi: f64, zeta: C64) -> Result<GeneratingExponent> {
    check_finite_c("gamma", gamma)?;
    if !phi.is_finite() {
        return Err(Error::NonFinite("phi"));
    }
    let sq = Squeezing::from_complex(zeta)?;
    Ok(single_mode_exponent(gamma, phi, sq))
}

pub(crate) fn single_mode_exponent(gamma: C64, phi: f64, sq: Squeezing) -> GeneratingExponent {
    let (t, sech) = (sq.tanh(), sq.sech());
    let e = C64::from_polar(1.0, sq.delta() + 2.0 * phi);
    let rot = C64::from_polar(1.0, phi);
    let gc = gamma.conj();
    let c = (-(gamma.norm_sqr() + gc * gc * e * t) * 0.5 - 0.5 * sq.log_cosh()).exp();
    let mu = vec![gc * e * t + gamma, -gc * rot * sech];
    let off = -rot * sech;
    let sigma = ndarray::arr2(&[[e * t, off], [off, -C64::from_polar(t, -sq.delta())]]);
    GeneratingExponent { c, mu, sigma }
}

/// Parameters of `D(gamma) R(phi) B(theta', varphi') S(zeta) B(theta, varphi)`;
/// fourteen real numbers in total.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoModeSpec {
    pub gamma: [C64; 2],
    pub phi: [f64; 2],
    pub theta_w: f64,
    pub varphi_w: f64,
    pub zeta: [Squeezing; 2],
    pub theta_v: f64,
    pub varphi_v: f64,
}

impl TwoModeSpec {
    pub fn identity() -> Self {
        TwoModeSpec {
            gamma: [C64::new(0.0, 0.0); 2],
            phi: [0.0; 2],
            theta_w: 0.0,
            varphi_w: 0.0,
            zeta: [Squeezing::ZERO; 2],
            theta_v: 0.0,
            varphi_v: 0.0,
        }
    }

    /// The decomposition `B(-pi/4, 0) [S(zeta) x S(-zeta)] B(pi/4, 0)` of the two-mode squeezer.
    pub fn two_mode_squeezer(zeta: C64) -> Result<Self> {
        let mut spec = Self::identity();
        spec.theta_w = -std::f64::consts::FRAC_PI_4;
        spec.theta_v = std::f64::consts::FRAC_PI_4;
        spec.zeta = [Squeezing::from_complex(zeta)?, Squeezing::from_complex(-zeta)?];
        Ok(spec)
    }

    pub fn w(&self) -> CMatrix {
        linalg::phase_matrix(&self.phi).dot(&linalg::beamsplitter_matrix(self.theta_w, self.varphi_w))
    }

    pub fn v(&self) -> CMatrix {
        linalg::beamsplitter_matrix(self.theta_v, self.varphi_v)
    }

    pub fn to_general(&self) -> Result<GaussianSpec> {
        let reals = [self.phi[0], self.phi[1], self.theta_w, self.varphi_w, self.theta_v, self.varphi_v];
        if reals.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("two-mode angle"));
        }
        GaussianSpec::new(self.gamma.to_vec(), self.w(), self.zeta.to_vec(), self.v())
    }
}

pub fn build_two_mode(spec: &TwoModeSpec) -> Result<GeneratingExponent> {
    Ok(build_general(&spec.to_general()?))
}

/// Closed-form exponent of `S2(zeta) = exp(zeta a1^dag a2^dag - h.c.)`.
pub fn build_two_mode_squeezer(zeta: C64) -> Result<GeneratingExponent> {
    let sq = Squeezing::from_complex(zeta)?;
    let t = C64::from_polar(sq.tanh(), sq.delta());
    let s = C64::new(sq.sech(), 0.0);
    let z = C64::new(0.0, 0.0);
    let sigma = ndarray::arr2(&[
        [z, -t, -s, z],
        [-t, z, z, -s],
        [-s, z, z, t.conj()],
        [z, -s, t.conj(), z],
    ]);
    Ok(GeneratingExponent { c: s, mu: vec![z; 4], sigma })
}

/// Exponent of the passive transformation `U(V)`: `C = 1`, `mu = 0`,
/// `Sigma = -[[0, V], [V^T, 0]]`.
pub fn build_interferometer(v: &CMatrix) -> Result<GeneratingExponent> {
    linalg::check_unitary("V", v)?;
    let l = v.nrows();
    let zero = Array2::from_elem((l, l), C64::new(0.0, 0.0));
    Ok(GeneratingExponent {
        c: C64::new(1.0, 0.0),
        mu: vec![C64::new(0.0, 0.0); 2 * l],
        sigma: assemble_sigma(&zero, &(-v), &zero),
    })
}
