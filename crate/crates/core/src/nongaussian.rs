//! Kerr, cubic-phase and quartic-phase gates.
//!
//! The phase gate `V(eta) = exp(i eta q^k / (k hbar))` with `q = sqrt(hbar/2) (a + a^dag)`
//! satisfies `[a, V] = V c (a + a^dag)^{k-1}`, `c = i (eta/hbar) (hbar/2)^{k/2}`. Taking
//! `<m| . |n>` gives a relation that solves for `V_{m,n+k-1}` from entries of strictly
//! smaller `m + n`, so the upper triangle fills by antidiagonals and the lower one by
//! the symmetry `V_mn = V_nm`. The division by `eta` amplifies rounding for `|eta| <= 1`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{self, QuadOptions};
use crate::special;
use crate::tensor::{GateTensor, SelectionRule};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// `hbar` used when none is given, so that `q = a + a^dag`.
pub const DEFAULT_HBAR: f64 = 2.0;

/// Kerr gate `exp(i kappa n^2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KerrSpec {
    pub kappa: f64,
}

fn check_cutoff(cutoff: usize) -> Result<()> {
    if cutoff == 0 {
        return Err(Error::InvalidParameter { name: "cutoff", reason: "cutoff must be at least 1".into() });
    }
    Ok(())
}

fn diagonal(cutoff: usize, f: impl Fn(f64) -> C64) -> GateTensor {
    let mut data = vec![ZERO; cutoff * cutoff];
    for n in 0..cutoff {
        data[n * cutoff + n] = f(n as f64);
    }
    GateTensor::dense_unchecked(1, cutoff, data, SelectionRule::ParticleConserving)
}

/// Diagonal tensor with entries `e^{i kappa n^2}`.
pub fn kerr_diagonal(kappa: f64, cutoff: usize) -> Result<GateTensor> {
    check_cutoff(cutoff)?;
    if !kappa.is_finite() {
        return Err(Error::NonFinite("kappa"));
    }
    Ok(diagonal(cutoff, |n| C64::from_polar(1.0, kappa * n * n)))
}

/// `d/d kappa` of [`kerr_diagonal`]: entries `i n^2 e^{i kappa n^2}`.
pub fn kerr_gradient(kappa: f64, cutoff: usize) -> Result<GateTensor> {
    check_cutoff(cutoff)?;
    if !kappa.is_finite() {
        return Err(Error::NonFinite("kappa"));
    }
    Ok(diagonal(cutoff, |n| C64::new(0.0, n * n) * C64::from_polar(1.0, kappa * n * n)))
}

/// Phase gate of order 3 or 4.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseGateSpec {
    order: u32,
    eta: f64,
    hbar: f64,
    cutoff: usize,
}

impl PhaseGateSpec {
    pub fn new(order: u32, eta: f64, hbar: f64, cutoff: usize) -> Result<Self> {
        if order != 3 && order != 4 {
            return Err(Error::InvalidParameter { name: "order", reason: format!("order {order} is not 3 or 4") });
        }
        if !eta.is_finite() {
            return Err(Error::NonFinite("eta"));
        }
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::InvalidParameter { name: "hbar", reason: format!("hbar must be positive, got {hbar}") });
        }
        check_cutoff(cutoff)?;
        Ok(PhaseGateSpec { order, eta, hbar, cutoff })
    }

    pub fn cubic(eta: f64, cutoff: usize) -> Result<Self> {
        Self::new(3, eta, DEFAULT_HBAR, cutoff)
    }

    pub fn quartic(eta: f64, cutoff: usize) -> Result<Self> {
        Self::new(4, eta, DEFAULT_HBAR, cutoff)
    }

    pub fn with_hbar(self, hbar: f64) -> Result<Self> {
        Self::new(self.order, self.eta, hbar, self.cutoff)
    }

    pub fn with_cutoff(self, cutoff: usize) -> Result<Self> {
        Self::new(self.order, self.eta, self.hbar, cutoff)
    }

    pub fn with_eta(self, eta: f64) -> Result<Self> {
        Self::new(self.order, eta, self.hbar, self.cutoff)
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Coefficient `alpha` of `x^k` in the position-space phase `exp(i alpha x^k)`.
    fn alpha(&self) -> f64 {
        self.eta * self.hbar.powf(self.order as f64 / 2.0) / (self.hbar * self.order as f64)
    }

    /// Whether the recurrence is used for this strength.
    pub fn recurrence_stable(&self) -> bool {
        self.eta.abs() > 1.0
    }
}

struct Sym {
    n: usize,
    data: Vec<C64>,
}

impl Sym {
    fn get(&self, m: i64, j: i64) -> C64 {
        if m < 0 || j < 0 {
            return ZERO;
        }
        let (a, b) = if m <= j { (m as usize, j as usize) } else { (j as usize, m as usize) };
        if b >= self.n {
            return ZERO;
        }
        self.data[a * self.n + b]
    }

    fn set(&mut self, m: usize, j: usize, v: C64) {
        self.data[m * self.n + j] = v;
        self.data[j * self.n + m] = v;
    }
}

/// Fills `m <= j` by increasing `m + j`; entries with `j < lowest` are seeds.
///
/// A diagonal entry `(j, j)` refers to `(j + 1, .)`, so the work grid has one extra
/// level; only its corner is wrong and nothing inside the returned `n x n` block uses it.
fn fill(n: usize, lowest: usize, seeds: &[((usize, usize), C64)], rule: impl Fn(&Sym, i64, i64) -> C64) -> Vec<C64> {
    let out = n;
    let n = n + 1;
    let mut v = Sym { n, data: vec![ZERO; n * n] };
    for &((a, b), z) in seeds {
        if a < n && b < n {
            v.set(a, b, z);
        }
    }
    for s in 0..(2 * n).saturating_sub(1) {
        for m in 0..=s / 2 {
            let j = s - m;
            if j >= n || j < lowest {
                continue;
            }
            let z = rule(&v, m as i64, (j - lowest) as i64);
            v.set(m, j, z);
        }
    }
    let mut data = Vec::with_capacity(out * out);
    for m in 0..out {
        data.extend_from_slice(&v.data[m * n..m * n + out]);
    }
    data
}

fn finish(data: Vec<C64>, cutoff: usize, what: &str) -> Result<GateTensor> {
    if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFiniteValue(format!("{what} tensor overflowed")));
    }
    Ok(GateTensor::dense_unchecked(1, cutoff, data, SelectionRule::None))
}

fn conj_tensor(t: GateTensor) -> GateTensor {
    t.map_indexed(|_, v| v.conj())
}

/// Cubic phase gate by recurrence; requires `|eta| > 1`.
///
/// Negative strengths use `V(-eta) = conj(V(eta))`, which holds entrywise because the
/// Hermite functions are real.
pub fn cubic_phase(spec: &PhaseGateSpec) -> Result<GateTensor> {
    if spec.order != 3 {
        return Err(Error::InvalidParameter { name: "order", reason: "cubic_phase needs order 3".into() });
    }
    if !spec.recurrence_stable() {
        return Err(Error::UnstableRegime { order: 3, eta: spec.eta });
    }
    if spec.eta < 0.0 {
        return cubic_phase(&spec.with_eta(-spec.eta)?).map(conj_tensor);
    }
    let (eta, hbar, n) = (spec.eta, spec.hbar, spec.cutoff);
    let y = (1.0 / (hbar.sqrt() * eta)).cbrt();
    let (ai, aip) = special::airy_scaled(y.powi(4))?;
    let v00 = C64::new(2.0 * PI.sqrt() * y * ai, 0.0);
    let v11 = C64::new(-8.0 * PI.sqrt() * y.powi(5) * (aip + y * y * ai), 0.0);
    let v01 = v11 / C64::new(0.0, -2.0 * 2f64.sqrt() * y.powi(3));
    let c = C64::new(0.0, 2.0 * 2f64.sqrt() / (hbar.sqrt() * eta));
    let data = fill(n, 2, &[((0, 0), v00), ((0, 1), v01), ((1, 1), v11)], |v, m, k| {
        // (m, k + 2) from the relation at column k
        let kf = k as f64;
        let braces = v.get(m, k - 1) * kf.sqrt() - v.get(m + 1, k) * ((m + 1) as f64).sqrt();
        (c * braces - v.get(m, k) * (2.0 * kf + 1.0) - v.get(m, k - 2) * (kf * (kf - 1.0)).max(0.0).sqrt())
            / ((kf + 1.0) * (kf + 2.0)).sqrt()
    });
    finish(data, n, "cubic phase")
}

/// `f(w) = pi^{-1/2} int x^{2p} exp(-x^2 + i w x^4 / 4) dx` for `p = 0, 1, 2`, i.e.
/// `(-1)^p d^p/d lambda^p f(w, lambda)` at `lambda = 1`.
fn quartic_moments(w: f64) -> Result<[C64; 3]> {
    let mut out = [ZERO; 3];
    let opts = QuadOptions { abs_tol: 1e-16, rel_tol: 1e-14, max_intervals: 20000 };
    for (p, slot) in out.iter_mut().enumerate() {
        let r = quadrature::integrate(
            |x| {
                let x2 = x * x;
                C64::from_polar(x2.powi(p as i32) * (-x2).exp(), 0.25 * w * x2 * x2)
            },
            -9.0,
            9.0,
            &opts,
        )?;
        *slot = r.value / PI.sqrt();
    }
    Ok(out)
}

/// Quartic phase gate by recurrence; requires `|eta| > 1`.
pub fn quartic_phase(spec: &PhaseGateSpec) -> Result<GateTensor> {
    if spec.order != 4 {
        return Err(Error::InvalidParameter { name: "order", reason: "quartic_phase needs order 4".into() });
    }
    if !spec.recurrence_stable() {
        return Err(Error::UnstableRegime { order: 4, eta: spec.eta });
    }
    if spec.eta < 0.0 {
        return quartic_phase(&spec.with_eta(-spec.eta)?).map(conj_tensor);
    }
    let (eta, hbar, n) = (spec.eta, spec.hbar, spec.cutoff);
    let [m0, m1, m2] = quartic_moments(hbar * eta)?;
    let v00 = m0;
    let v11 = m1 * 2.0;
    let v02 = (v11 - v00) / 2f64.sqrt();
    let v22 = v00 * 0.5 - v11 + m2 * 2.0;
    let seeds = [((0, 0), v00), ((0, 1), ZERO), ((0, 2), v02), ((1, 1), v11), ((1, 2), ZERO), ((2, 2), v22)];
    let c = C64::new(0.0, 4.0 / (eta * hbar));
    let mut data = fill(n, 3, &seeds, |v, m, k| {
        // (m, k + 3) from the relation at column k
        let kf = k as f64;
        let braces = v.get(m, k - 1) * kf.sqrt() - v.get(m + 1, k) * ((m + 1) as f64).sqrt();
        (c * braces
            - v.get(m, k - 3) * (kf * (kf - 1.0) * (kf - 2.0)).max(0.0).sqrt()
            - v.get(m, k - 1) * (3.0 * kf.powf(1.5))
            - v.get(m, k + 1) * (3.0 * (kf + 1.0).powf(1.5)))
            / ((kf + 1.0) * (kf + 2.0) * (kf + 3.0)).sqrt()
    });
    // parity zeros are exact; the recurrence leaves rounding noise there
    for m in 0..n {
        for j in 0..n {
            if (m + j) % 2 == 1 {
                data[m * n + j] = ZERO;
            }
        }
    }
    finish(data, n, "quartic phase")
}

/// Which construction produced a phase-gate tensor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Recurrence,
    /// `|eta| <= 1`: the recurrence is unstable there, so every entry came from quadrature.
    FellBackToOracle,
}

#[derive(Clone, Debug)]
pub struct PhaseGateBuild {
    pub tensor: GateTensor,
    pub route: Route,
}

/// Phase-gate tensor by recurrence where stable, by quadrature otherwise.
pub fn phase_gate(spec: &PhaseGateSpec) -> Result<PhaseGateBuild> {
    if !spec.recurrence_stable() {
        return Ok(PhaseGateBuild { tensor: oracle_phase_tensor(spec)?, route: Route::FellBackToOracle });
    }
    let tensor = if spec.order == 3 { cubic_phase(spec)? } else { quartic_phase(spec)? };
    Ok(PhaseGateBuild { tensor, route: Route::Recurrence })
}

/// Normalized Hermite functions `psi_0..psi_{n}` at `x`, by the three-term recurrence
/// (no factorials, so no overflow).
fn hermite_functions(x: f64, n: usize, out: &mut Vec<f64>) {
    out.clear();
    out.push(PI.powf(-0.25) * (-0.5 * x * x).exp());
    if n >= 1 {
        out.push(2f64.sqrt() * x * out[0]);
    }
    for k in 1..n {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * x * out[k] - (kf / (kf + 1.0)).sqrt() * out[k - 1];
        out.push(next);
    }
}

/// Half-width beyond which `|psi_m psi_n|` is below 1e-18.
fn support(m: usize, n: usize) -> f64 {
    (2.0 * m.max(n) as f64 + 1.0).sqrt() + 6.5
}

/// `<m|V(eta)|n> = int psi_m psi_n exp(i alpha x^k) dx` by adaptive quadrature.
pub fn quadrature_oracle(order: u32, eta: f64, hbar: f64, m: usize, n: usize) -> Result<C64> {
    let spec = PhaseGateSpec::new(order, eta, hbar, m.max(n) + 1)?;
    oracle_entry(&spec, m, n)
}

fn oracle_entry(spec: &PhaseGateSpec, m: usize, n: usize) -> Result<C64> {
    let alpha = spec.alpha();
    let k = spec.order as i32;
    let top = m.max(n);
    let x_max = support(m, n);
    let opts = QuadOptions { abs_tol: 1e-14, rel_tol: 1e-12, max_intervals: 50000 };
    let r = quadrature::integrate(
        |x| {
            let mut psi = Vec::with_capacity(top + 1);
            hermite_functions(x, top, &mut psi);
            C64::from_polar(psi[m] * psi[n], alpha * x.powi(k))
        },
        -x_max,
        x_max,
        &opts,
    )?;
    Ok(r.value)
}

/// Full phase-gate tensor from [`quadrature_oracle`], using the symmetry.
pub fn oracle_phase_tensor(spec: &PhaseGateSpec) -> Result<GateTensor> {
    let n = spec.cutoff;
    let mut data = vec![ZERO; n * n];
    for m in 0..n {
        for j in m..n {
            let z = if spec.order == 4 && (m + j) % 2 == 1 { ZERO } else { oracle_entry(spec, m, j)? };
            data[m * n + j] = z;
            data[j * n + m] = z;
        }
    }
    finish(data, n, "oracle phase gate")
}

/// `<m|exp(i eta p^k / (k hbar))|n>` computed in momentum space: the momentum
/// wavefunctions are Fourier transforms of the Hermite functions, taken numerically.
///
/// Both integrals use the trapezoidal rule, which converges geometrically for these
/// entire, Gaussian-damped integrands.
pub fn momentum_oracle_tensor(spec: &PhaseGateSpec) -> Result<GateTensor> {
    let n = spec.cutoff;
    let alpha = spec.alpha();
    let k = spec.order as i32;
    let x_max = support(n, n);
    let hx = 0.02;
    let xs: Vec<f64> = (0..=((2.0 * x_max / hx) as usize)).map(|i| -x_max + i as f64 * hx).collect();
    let mut psi = Vec::new();
    let table: Vec<Vec<f64>> = xs
        .iter()
        .map(|&x| {
            hermite_functions(x, n, &mut psi);
            psi[..n].to_vec()
        })
        .collect();
    let hp = 0.01;
    let p_max = x_max;
    let mut acc = vec![ZERO; n * n];
    let steps = (2.0 * p_max / hp) as usize;
    for i in 0..=steps {
        let p = -p_max + i as f64 * hp;
        // phi_j(p) = (2 pi)^{-1/2} int psi_j(x) e^{-i p x} dx
        let mut phi = vec![ZERO; n];
        for (x, row) in xs.iter().zip(&table) {
            let e = C64::from_polar(1.0, -p * x);
            for j in 0..n {
                phi[j] += e * row[j];
            }
        }
        let scale = hx / (2.0 * PI).sqrt();
        let phase = C64::from_polar(hp, alpha * p.powi(k));
        for a in 0..n {
            let left = (phi[a] * scale).conj() * phase;
            for b in 0..n {
                acc[a * n + b] += left * phi[b] * scale;
            }
        }
    }
    finish(acc, n, "momentum oracle")
}

/// The momentum-space gate `exp(i eta p^k / (k hbar))` from the position-space tensor:
/// `<m|V~|n> = i^{m-n} V_mn`.
pub fn conjugate_phase_gate(v: &GateTensor) -> Result<GateTensor> {
    if v.modes() != 1 {
        return Err(Error::DimensionMismatch("phase gates act on one mode".into()));
    }
    let dense = GateTensor::from_dense(1, v.cutoff(), v.to_dense()?, SelectionRule::None)?;
    Ok(dense.map_indexed(|k, z| z * C64::i().powi(k[0] as i32 - k[1] as i32)))
}

/// `d/d eta` of the cubic phase gate from a tensor with three levels of headroom;
/// the result has cutoff `V3.cutoff() - 3`.
pub fn cubic_amplitude_gradient(v3: &GateTensor, eta: f64, hbar: f64) -> Result<GateTensor> {
    if v3.modes() != 1 || v3.cutoff() < 4 {
        return Err(Error::DimensionMismatch("expected a single-mode tensor with cutoff >= 4".into()));
    }
    if !eta.is_finite() {
        return Err(Error::NonFinite("eta"));
    }
    if !(hbar.is_finite() && hbar > 0.0) {
        return Err(Error::InvalidParameter { name: "hbar", reason: format!("hbar must be positive, got {hbar}") });
    }
    let big = v3.cutoff();
    let n = big - 3;
    let pref = C64::new(0.0, hbar.sqrt() / (3.0 * 2f64.powf(1.5)));
    let get = |m: usize, j: i64| if j < 0 { ZERO } else { v3.get(&[m, j as usize]) };
    let mut data = vec![ZERO; n * n];
    for m in 0..n {
        for j in 0..n {
            let jf = j as f64;
            let ji = j as i64;
            let sum = get(m, ji - 3) * (jf * (jf - 1.0) * (jf - 2.0)).max(0.0).sqrt()
                + get(m, ji - 1) * (3.0 * jf.powf(1.5))
                + get(m, ji + 1) * (3.0 * (jf + 1.0).powf(1.5))
                + get(m, ji + 3) * ((jf + 1.0) * (jf + 2.0) * (jf + 3.0)).sqrt();
            data[m * n + j] = pref * sum;
        }
    }
    Ok(GateTensor::dense_unchecked(1, n, data, SelectionRule::None))
}

/// `d/d eta` of the cubic phase gate at `spec`, building the headroom internally.
pub fn cubic_gradient(spec: &PhaseGateSpec) -> Result<GateTensor> {
    let big = phase_gate(&spec.with_cutoff(spec.cutoff + 3)?)?;
    cubic_amplitude_gradient(&big.tensor, spec.eta, spec.hbar)
}
