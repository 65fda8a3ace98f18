//! Analytic parameter derivatives of gate tensors.
//!
//! A derivative of the exponent, `(d log C, d mu, d Sigma)`, is turned into a
//! derivative of every matrix element by
//!
//! ```text
//! dG_k = dlogC G_k + sum_i dmu_i sqrt(k_i) G_{k-1_i}
//!        - sum_{i>j} dSigma_ij sqrt(k_i k_j) G_{k-1_i-1_j}
//!        - 1/2 sum_i dSigma_ii sqrt(k_i (k_i - 1)) G_{k-2_i}
//! ```
//!
//! which only looks at lower indices and is therefore exact under truncation.
//! Complex parameters are handled as Wirtinger pairs `(xi, conj(xi))`.

use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{self, GaussianSpec, GeneratingExponent, Squeezing, TwoModeSpec};
use crate::linalg::{self, CMatrix};
use crate::tensor::{GateTensor, SelectionRule};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// How a coordinate enters the gate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamKind {
    Real,
    /// Derivative with respect to a complex parameter `xi` at fixed `conj(xi)`.
    Holomorphic,
    /// Derivative with respect to `conj(xi)` at fixed `xi`.
    AntiHolomorphic,
}

/// Derivative of `(log C, mu, Sigma)` with respect to one coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct ExponentJacobian {
    pub label: String,
    pub kind: ParamKind,
    /// `d_xi C / C`.
    pub dlogc: C64,
    pub dmu: Vec<C64>,
    pub dsigma: CMatrix,
}

impl ExponentJacobian {
    pub fn zero(label: impl Into<String>, kind: ParamKind, modes: usize) -> Self {
        ExponentJacobian {
            label: label.into(),
            kind,
            dlogc: ZERO,
            dmu: vec![ZERO; 2 * modes],
            dsigma: Array2::from_elem((2 * modes, 2 * modes), ZERO),
        }
    }

    pub fn modes(&self) -> usize {
        self.dmu.len() / 2
    }

    /// Largest deviation from another jacobian of the same size.
    pub fn max_abs_diff(&self, other: &ExponentJacobian) -> f64 {
        let dmu = self.dmu.iter().zip(&other.dmu).fold(0.0_f64, |a, (x, y)| a.max((x - y).norm()));
        (self.dlogc - other.dlogc).norm().max(dmu).max(linalg::max_abs_diff(&self.dsigma, &other.dsigma))
    }

    /// Whether every term of the gradient relation keeps the sparsity of `rule`.
    fn preserves(&self, rule: SelectionRule) -> bool {
        let l = self.modes();
        let weight = |a: usize| -> i64 { if a < l { 1 } else { -1 } };
        let weight2 = |a: usize| -> i64 { [1, -1, -1, 1][a] };
        let w: Box<dyn Fn(usize) -> i64> = match rule {
            SelectionRule::None => return true,
            SelectionRule::ParticleConserving => Box::new(weight),
            SelectionRule::PairDifference if l == 2 => Box::new(weight2),
            SelectionRule::PairDifference => return false,
        };
        if self.dmu.iter().any(|z| *z != ZERO) {
            return false;
        }
        let n = 2 * l;
        (0..n).all(|i| (0..n).all(|j| self.dsigma[[i, j]] == ZERO || w(i) + w(j) == 0))
    }
}

fn symmetrized(mut m: CMatrix) -> CMatrix {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = (m[[i, j]] + m[[j, i]]) * 0.5;
            m[[i, j]] = avg;
            m[[j, i]] = avg;
        }
    }
    m
}

/// `dG/dxi` for the gate `g` whose exponent moves along `jac`.
///
/// A banded tensor stays banded when the jacobian keeps its selection rule; otherwise
/// the result is dense.
pub fn grad_from_jacobian(g: &GateTensor, jac: &ExponentJacobian) -> Result<GateTensor> {
    let l = g.modes();
    if jac.modes() != l || jac.dsigma.dim() != (2 * l, 2 * l) {
        return Err(Error::DimensionMismatch(format!(
            "jacobian describes {} modes, tensor has {l}",
            jac.modes()
        )));
    }
    let rank = 2 * l;
    let sq: Vec<f64> = (0..=g.cutoff()).map(|k| (k as f64).sqrt()).collect();
    let term = |k: &[usize], at: &dyn Fn(&[usize], usize, usize) -> C64| -> C64 {
        let mut acc = jac.dlogc * at(k, usize::MAX, usize::MAX);
        for i in 0..rank {
            if k[i] == 0 {
                continue;
            }
            if jac.dmu[i] != ZERO {
                acc += jac.dmu[i] * sq[k[i]] * at(k, i, usize::MAX);
            }
            for j in 0..i {
                let ds = jac.dsigma[[i, j]];
                if ds != ZERO && k[j] > 0 {
                    acc -= ds * (sq[k[i]] * sq[k[j]]) * at(k, i, j);
                }
            }
            let dd = jac.dsigma[[i, i]];
            if dd != ZERO && k[i] > 1 {
                acc -= dd * (0.5 * sq[k[i]] * sq[k[i] - 1]) * at(k, i, i);
            }
        }
        acc
    };

    if let Some(data) = g.dense_data() {
        let cutoff = g.cutoff();
        let strides: Vec<usize> = (0..rank).map(|a| cutoff.pow((rank - 1 - a) as u32)).collect();
        let mut out = Vec::with_capacity(data.len());
        let mut k = vec![0usize; rank];
        for f in 0..data.len() {
            let at = |_: &[usize], i: usize, j: usize| -> C64 {
                let mut idx = f;
                if i != usize::MAX {
                    idx -= strides[i];
                }
                if j != usize::MAX {
                    idx -= strides[j];
                }
                data[idx]
            };
            out.push(term(&k, &at));
            for a in (0..rank).rev() {
                k[a] += 1;
                if k[a] < cutoff {
                    break;
                }
                k[a] = 0;
            }
        }
        return Ok(GateTensor::dense_unchecked(l, cutoff, out, g.selection_rule()));
    }

    let at = |k: &[usize], i: usize, j: usize| -> C64 {
        let mut idx: Vec<i64> = k.iter().map(|&x| x as i64).collect();
        if i != usize::MAX {
            idx[i] -= 1;
        }
        if j != usize::MAX {
            idx[j] -= 1;
        }
        g.get_signed(&idx)
    };
    if jac.preserves(g.selection_rule()) {
        return Ok(g.map_indexed(|k, _| term(k, &at)));
    }
    let dense = g.to_dense()?;
    let mut out = Vec::with_capacity(dense.len());
    g.for_each(|k, _| out.push(term(k, &at)));
    Ok(GateTensor::dense_unchecked(l, g.cutoff(), out, SelectionRule::None))
}

fn single(label: &str, kind: ParamKind, dlogc: C64, dmu: [C64; 2], ds: [C64; 3]) -> ExponentJacobian {
    ExponentJacobian {
        label: label.into(),
        kind,
        dlogc,
        dmu: dmu.to_vec(),
        dsigma: ndarray::arr2(&[[ds[0], ds[1]], [ds[1], ds[2]]]),
    }
}

/// Wirtinger jacobians `(d/d gamma, d/d conj(gamma))` of `D(gamma) R(phi) S(zeta)`.
pub fn single_mode_displacement_jacobians(gamma: C64, phi: f64, zeta: C64) -> Result<(ExponentJacobian, ExponentJacobian)> {
    let j = single_mode_jacobians(gamma, phi, zeta)?;
    let [jg, jgc, ..] = j;
    Ok((jg, jgc))
}

/// Jacobians of `D(gamma) R(phi) S(zeta)` in the order `gamma, conj(gamma), phi, r, delta`.
pub fn single_mode_jacobians(gamma: C64, phi: f64, zeta: C64) -> Result<[ExponentJacobian; 5]> {
    gaussian::build_single_mode(gamma, phi, zeta)?;
    let sq = Squeezing::from_complex(zeta)?;
    single_mode_jacobians_polar(gamma, phi, sq.r(), sq.delta())
}

/// As [`single_mode_jacobians`] with the squeezing given as `(r, delta)`; unlike the
/// complex form this keeps the direction of `d/dr` at `r = 0`.
pub fn single_mode_jacobians_polar(gamma: C64, phi: f64, r: f64, delta: f64) -> Result<[ExponentJacobian; 5]> {
    if ![gamma.re, gamma.im, phi, r, delta].iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite("single-mode parameters"));
    }
    if r < 0.0 {
        return Err(Error::InvalidParameter { name: "r", reason: format!("squeezing amplitude {r} is negative") });
    }
    let (t, s) = (r.tanh(), gaussian::stable_sech(r));
    let e = C64::from_polar(1.0, delta + 2.0 * phi);
    let rot = C64::from_polar(1.0, phi);
    let back = C64::from_polar(1.0, -delta);
    let gc = gamma.conj();
    let i = C64::i();
    let z = ZERO;
    Ok([
        single("gamma", ParamKind::Holomorphic, -gc * 0.5, [C64::new(1.0, 0.0), z], [z; 3]),
        single("gamma*", ParamKind::AntiHolomorphic, -gamma * 0.5 - gc * e * t, [e * t, -rot * s], [z; 3]),
        single(
            "phi",
            ParamKind::Real,
            -i * gc * gc * e * t,
            [i * 2.0 * gc * e * t, -i * gc * rot * s],
            [i * 2.0 * e * t, -i * rot * s, z],
        ),
        single(
            "r",
            ParamKind::Real,
            -gc * gc * e * (0.5 * s * s) - 0.5 * t,
            [gc * e * (s * s), gc * rot * (s * t)],
            [e * (s * s), rot * (s * t), -back * (s * s)],
        ),
        single("delta", ParamKind::Real, -i * gc * gc * e * (0.5 * t), [i * gc * e * t, z], [i * e * t, z, i * back * t]),
    ])
}

/// Jacobians `(r, delta)` of the closed-form two-mode squeezer exponent.
pub fn two_mode_squeezer_jacobians(zeta: C64) -> Result<[ExponentJacobian; 2]> {
    let sq = Squeezing::from_complex(zeta)?;
    let (t, s) = (sq.tanh(), sq.sech());
    let e = C64::from_polar(1.0, sq.delta());
    let i = C64::i();
    let sigma = |tt: C64, ss: C64| {
        let z = ZERO;
        ndarray::arr2(&[[z, -tt, -ss, z], [-tt, z, z, -ss], [-ss, z, z, tt.conj()], [z, -ss, tt.conj(), z]])
    };
    // d/dr: tanh -> sech^2, sech -> -sech tanh; d/d delta only rotates the phase
    let dr = sigma(e * (s * s), C64::new(-s * t, 0.0));
    let mut dd = sigma(i * e * t, ZERO);
    dd[[2, 3]] = -i * e.conj() * t;
    dd[[3, 2]] = dd[[2, 3]];
    Ok([
        ExponentJacobian { label: "r".into(), kind: ParamKind::Real, dlogc: C64::new(-t, 0.0), dmu: vec![ZERO; 4], dsigma: dr },
        ExponentJacobian { label: "delta".into(), kind: ParamKind::Real, dlogc: ZERO, dmu: vec![ZERO; 4], dsigma: dd },
    ])
}

/// Jacobian of the interferometer exponent along a tangent `dV` of its unitary.
pub fn interferometer_jacobian(label: &str, dv: &CMatrix) -> ExponentJacobian {
    let l = dv.nrows();
    let mut ds = Array2::from_elem((2 * l, 2 * l), ZERO);
    for a in 0..l {
        for b in 0..l {
            ds[[a, l + b]] = -dv[[a, b]];
            ds[[l + b, a]] = -dv[[a, b]];
        }
    }
    ExponentJacobian { label: label.into(), kind: ParamKind::Real, dlogc: ZERO, dmu: vec![ZERO; 2 * l], dsigma: ds }
}

/// Jacobians `(theta, varphi)` of the beamsplitter exponent.
pub fn beamsplitter_jacobians(theta: f64, varphi: f64) -> [ExponentJacobian; 2] {
    [
        interferometer_jacobian("theta", &linalg::beamsplitter_matrix_dtheta(theta, varphi)),
        interferometer_jacobian("varphi", &linalg::beamsplitter_matrix_dvarphi(theta, varphi)),
    ]
}

/// A tangent direction in the parameter space of `D(gamma) U(W) S(zeta) U(V)`;
/// `gamma` and `conj(gamma)` move independently.
#[derive(Clone, Debug)]
pub struct SpecTangent {
    pub dgamma: Vec<C64>,
    pub dgamma_conj: Vec<C64>,
    pub dw: CMatrix,
    pub dr: Vec<f64>,
    pub ddelta: Vec<f64>,
    pub dv: CMatrix,
}

impl SpecTangent {
    pub fn zero(modes: usize) -> Self {
        SpecTangent {
            dgamma: vec![ZERO; modes],
            dgamma_conj: vec![ZERO; modes],
            dw: Array2::from_elem((modes, modes), ZERO),
            dr: vec![0.0; modes],
            ddelta: vec![0.0; modes],
            dv: Array2::from_elem((modes, modes), ZERO),
        }
    }
}

/// Exact directional derivative of [`gaussian::build_general`].
pub fn directional_jacobian(spec: &GaussianSpec, dir: &SpecTangent, label: &str, kind: ParamKind) -> Result<ExponentJacobian> {
    let l = spec.modes();
    let shapes_ok = dir.dgamma.len() == l
        && dir.dgamma_conj.len() == l
        && dir.dr.len() == l
        && dir.ddelta.len() == l
        && dir.dw.dim() == (l, l)
        && dir.dv.dim() == (l, l);
    if !shapes_ok {
        return Err(Error::DimensionMismatch(format!("tangent does not match a {l}-mode spec")));
    }
    let (w, v) = (spec.w(), spec.v());
    let zs = spec.zeta();
    let t: Vec<f64> = zs.iter().map(|z| z.tanh()).collect();
    let s: Vec<f64> = zs.iter().map(|z| z.sech()).collect();
    let ph: Vec<C64> = zs.iter().map(|z| C64::from_polar(1.0, z.delta())).collect();
    let i = C64::i();
    let dg = linalg::diag(&(0..l).map(|j| ph[j] * t[j]).collect::<Vec<_>>());
    let dc = linalg::diag(&(0..l).map(|j| ph[j].conj() * t[j]).collect::<Vec<_>>());
    let ds = linalg::diag(&s.iter().map(|&x| C64::new(x, 0.0)).collect::<Vec<_>>());
    let ddg = linalg::diag(
        &(0..l).map(|j| ph[j] * (i * dir.ddelta[j] * t[j] + s[j] * s[j] * dir.dr[j])).collect::<Vec<_>>(),
    );
    let ddc = linalg::diag(
        &(0..l).map(|j| ph[j].conj() * (-i * dir.ddelta[j] * t[j] + s[j] * s[j] * dir.dr[j])).collect::<Vec<_>>(),
    );
    let dds = linalg::diag(&(0..l).map(|j| C64::new(-s[j] * t[j] * dir.dr[j], 0.0)).collect::<Vec<_>>());

    let (dw, dv) = (&dir.dw, &dir.dv);
    let m = w.dot(&dg).dot(&w.t());
    let x = w.dot(&ds).dot(v);
    let dm = dw.dot(&dg).dot(&w.t()) + w.dot(&ddg).dot(&w.t()) + w.dot(&dg).dot(&dw.t());
    let dx = dw.dot(&ds).dot(v) + w.dot(&dds).dot(v) + w.dot(&ds).dot(dv);
    let dmc = dv.t().dot(&dc).dot(v) + v.t().dot(&ddc).dot(v) + v.t().dot(&dc).dot(dv);

    let gamma = ndarray::Array1::from(spec.gamma().to_vec());
    let gc = gamma.mapv(|z| z.conj());
    let dgam = ndarray::Array1::from(dir.dgamma.clone());
    let dgc = ndarray::Array1::from(dir.dgamma_conj.clone());
    let m_gc = m.dot(&gc);
    let dlogc = -0.5
        * (dgc.dot(&gamma) + gc.dot(&dgam) + dgc.dot(&m_gc) * 2.0 + gc.dot(&dm.dot(&gc)))
        - 0.5 * (0..l).map(|j| t[j] * dir.dr[j]).sum::<f64>();
    let dmu1 = dm.dot(&gc) + m.dot(&dgc) + &dgam;
    let dmu2 = -(dx.t().dot(&gc) + x.t().dot(&dgc));

    let mut dsigma = Array2::from_elem((2 * l, 2 * l), ZERO);
    dsigma.slice_mut(ndarray::s![..l, ..l]).assign(&dm);
    dsigma.slice_mut(ndarray::s![..l, l..]).assign(&(-&dx));
    dsigma.slice_mut(ndarray::s![l.., ..l]).assign(&(-dx.t().to_owned()));
    dsigma.slice_mut(ndarray::s![l.., l..]).assign(&(-dmc));
    Ok(ExponentJacobian {
        label: label.into(),
        kind,
        dlogc,
        dmu: dmu1.iter().chain(dmu2.iter()).copied().collect(),
        dsigma: symmetrized(dsigma),
    })
}

/// Local coordinates of a general spec: `2l^2 + 3l` real numbers.
///
/// `gamma` contributes `l` Wirtinger pairs, `zeta` its `(r, delta)` pairs, `W` moves
/// along `i H W` for all `l^2` Hermitian generators `H`, and `V` along `i H V` for the
/// `l^2 - l` off-diagonal ones only: a diagonal phase on the left of `V` is absorbed by
/// the phases of `W` and `delta`.
pub fn spec_tangents(spec: &GaussianSpec) -> Vec<(String, ParamKind, SpecTangent)> {
    let l = spec.modes();
    let mut out = Vec::with_capacity(2 * l * l + 3 * l);
    for j in 0..l {
        let mut d = SpecTangent::zero(l);
        d.dgamma[j] = C64::new(1.0, 0.0);
        out.push((format!("gamma[{j}]"), ParamKind::Holomorphic, d));
        let mut d = SpecTangent::zero(l);
        d.dgamma_conj[j] = C64::new(1.0, 0.0);
        out.push((format!("gamma*[{j}]"), ParamKind::AntiHolomorphic, d));
    }
    for (b, h) in linalg::hermitian_basis(l, true).into_iter().enumerate() {
        let mut d = SpecTangent::zero(l);
        d.dw = h.dot(spec.w()).mapv(|z| z * C64::i());
        out.push((format!("W[{b}]"), ParamKind::Real, d));
    }
    for j in 0..l {
        let mut d = SpecTangent::zero(l);
        d.dr[j] = 1.0;
        out.push((format!("r[{j}]"), ParamKind::Real, d));
        let mut d = SpecTangent::zero(l);
        d.ddelta[j] = 1.0;
        out.push((format!("delta[{j}]"), ParamKind::Real, d));
    }
    for (b, h) in linalg::hermitian_basis(l, false).into_iter().enumerate() {
        let mut d = SpecTangent::zero(l);
        d.dv = h.dot(spec.v()).mapv(|z| z * C64::i());
        out.push((format!("V[{b}]"), ParamKind::Real, d));
    }
    out
}

/// The parametrizations with a jacobian for every coordinate.
#[derive(Clone, Debug)]
pub enum Parametrization {
    General(GaussianSpec),
    TwoMode(TwoModeSpec),
}

impl Parametrization {
    pub fn modes(&self) -> usize {
        match self {
            Parametrization::General(s) => s.modes(),
            Parametrization::TwoMode(_) => 2,
        }
    }

    pub fn exponent(&self) -> Result<GeneratingExponent> {
        match self {
            Parametrization::General(s) => Ok(gaussian::build_general(s)),
            Parametrization::TwoMode(s) => gaussian::build_two_mode(s),
        }
    }
}

fn two_mode_tangents(spec: &TwoModeSpec) -> Result<Vec<(String, ParamKind, SpecTangent)>> {
    spec.to_general()?;
    let p = linalg::phase_matrix(&spec.phi);
    let bw = linalg::beamsplitter_matrix(spec.theta_w, spec.varphi_w);
    let mut out = Vec::with_capacity(14);
    for j in 0..2 {
        let mut d = SpecTangent::zero(2);
        d.dgamma[j] = C64::new(1.0, 0.0);
        out.push((format!("gamma[{j}]"), ParamKind::Holomorphic, d));
        let mut d = SpecTangent::zero(2);
        d.dgamma_conj[j] = C64::new(1.0, 0.0);
        out.push((format!("gamma*[{j}]"), ParamKind::AntiHolomorphic, d));
    }
    for j in 0..2 {
        let mut dp = Array2::from_elem((2, 2), ZERO);
        dp[[j, j]] = C64::i() * p[[j, j]];
        let mut d = SpecTangent::zero(2);
        d.dw = dp.dot(&bw);
        out.push((format!("phi[{j}]"), ParamKind::Real, d));
    }
    let mut d = SpecTangent::zero(2);
    d.dw = p.dot(&linalg::beamsplitter_matrix_dtheta(spec.theta_w, spec.varphi_w));
    out.push(("theta_w".into(), ParamKind::Real, d));
    let mut d = SpecTangent::zero(2);
    d.dw = p.dot(&linalg::beamsplitter_matrix_dvarphi(spec.theta_w, spec.varphi_w));
    out.push(("varphi_w".into(), ParamKind::Real, d));
    for j in 0..2 {
        let mut d = SpecTangent::zero(2);
        d.dr[j] = 1.0;
        out.push((format!("r[{j}]"), ParamKind::Real, d));
        let mut d = SpecTangent::zero(2);
        d.ddelta[j] = 1.0;
        out.push((format!("delta[{j}]"), ParamKind::Real, d));
    }
    let mut d = SpecTangent::zero(2);
    d.dv = linalg::beamsplitter_matrix_dtheta(spec.theta_v, spec.varphi_v);
    out.push(("theta_v".into(), ParamKind::Real, d));
    let mut d = SpecTangent::zero(2);
    d.dv = linalg::beamsplitter_matrix_dvarphi(spec.theta_v, spec.varphi_v);
    out.push(("varphi_v".into(), ParamKind::Real, d));
    Ok(out)
}

/// One jacobian per real coordinate of the parametrization (complex parameters as Wirtinger pairs).
pub fn jacobians_all_params(param: &Parametrization) -> Result<Vec<ExponentJacobian>> {
    let (spec, tangents) = match param {
        Parametrization::General(s) => (s.clone(), spec_tangents(s)),
        Parametrization::TwoMode(s) => (s.to_general()?, two_mode_tangents(s)?),
    };
    tangents.iter().map(|(label, kind, d)| directional_jacobian(&spec, d, label, *kind)).collect()
}

/// Upstream gradient `dL/d conj(G)` of a real loss, shaped like a gate tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct Cotangent {
    modes: usize,
    cutoff: usize,
    data: Vec<C64>,
}

impl Cotangent {
    pub fn new(modes: usize, cutoff: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() as u128 != crate::tensor::dense_len(modes, cutoff) {
            return Err(Error::DimensionMismatch(format!(
                "cotangent has {} entries, expected {modes} modes at cutoff {cutoff}",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFiniteValue("cotangent".into()));
        }
        Ok(Cotangent { modes, cutoff, data })
    }

    pub fn zeros_like(g: &GateTensor) -> Self {
        Cotangent { modes: g.modes(), cutoff: g.cutoff(), data: vec![ZERO; g.dense_len() as usize] }
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }
}

/// `dL/d conj(xi) = sum_k up_k conj(dG_k/dxi) + conj(up_k) dG_k/d conj(xi)` for a real loss.
///
/// For a real parameter pass the same tensor twice; the result is then real.
pub fn combine_upstream(up: &Cotangent, dg_dxi: &GateTensor, dg_dxi_conj: &GateTensor) -> Result<C64> {
    for g in [dg_dxi, dg_dxi_conj] {
        if g.modes() != up.modes || g.cutoff() != up.cutoff {
            return Err(Error::DimensionMismatch("cotangent and gradient shapes differ".into()));
        }
    }
    let mut acc = ZERO;
    match (dg_dxi.dense_data(), dg_dxi_conj.dense_data()) {
        (Some(a), Some(b)) => {
            for ((u, x), y) in up.data.iter().zip(a).zip(b) {
                acc += u * x.conj() + u.conj() * y;
            }
        }
        _ => {
            let mut f = 0;
            dg_dxi.for_each(|idx, x| {
                let u = up.data[f];
                acc += u * x.conj() + u.conj() * dg_dxi_conj.get(idx);
                f += 1;
            });
        }
    }
    Ok(acc)
}

/// Converts `dL/d conj(xi)` into derivatives along `xi = r e^{i phi}`; the phase
/// derivative is 0 at `xi = 0`.
pub fn polar_chain(dl_dxi_conj: C64, xi: C64) -> (f64, f64) {
    let phi = if xi == ZERO { 0.0 } else { xi.arg() };
    let dr = 2.0 * (dl_dxi_conj * C64::from_polar(1.0, -phi)).re;
    let dphi = -2.0 * (dl_dxi_conj * C64::i() * xi.conj()).re;
    (dr, dphi)
}

/// Derivative in the phase of a gate whose phase enters as `exp(i s (m_1 - n_1) eps)`:
/// `s = 1` for the displacement and two-mode squeezer, `1/2` for the squeezer, `-1`
/// for the beamsplitter.
pub fn phase_gradient_single_param(g: &GateTensor, s: f64) -> GateTensor {
    let l = g.modes();
    g.map_indexed(|k, v| v * C64::new(0.0, s * (k[0] as f64 - k[l] as f64)))
}

/// `d/dr` of the two-mode squeezer with phase `epsilon`, from a tensor built with one
/// extra level of headroom; the result has cutoff one lower than `s2`.
pub fn amplitude_gradient_two_mode_squeezer(s2: &GateTensor, epsilon: f64) -> Result<GateTensor> {
    if s2.modes() != 2 || s2.cutoff() < 2 {
        return Err(Error::DimensionMismatch("expected a two-mode tensor with cutoff >= 2".into()));
    }
    let n = s2.cutoff() - 1;
    let up = C64::from_polar(1.0, epsilon);
    let down = up.conj();
    let mut data = vec![ZERO; n * n * n * n];
    for m1 in 0..n {
        for m2 in 0..n {
            for n1 in 0..n {
                for n2 in 0..n {
                    let raise = ((n1 + 1) as f64 * (n2 + 1) as f64).sqrt() * s2.get(&[m1, m2, n1 + 1, n2 + 1]);
                    let lower = if n1 > 0 && n2 > 0 {
                        ((n1 * n2) as f64).sqrt() * s2.get(&[m1, m2, n1 - 1, n2 - 1])
                    } else {
                        ZERO
                    };
                    data[((m1 * n + m2) * n + n1) * n + n2] = up * raise - down * lower;
                }
            }
        }
    }
    Ok(GateTensor::dense_unchecked(2, n, data, SelectionRule::PairDifference))
}

/// Per-coordinate derivative tensors of one gate.
#[derive(Clone, Debug)]
pub struct GradientSet {
    pub entries: Vec<GradientEntry>,
}

#[derive(Clone, Debug)]
pub struct GradientEntry {
    pub label: String,
    pub kind: ParamKind,
    pub tensor: GateTensor,
}

#[derive(Serialize, Deserialize)]
struct ManifestEntry {
    label: String,
    kind: ParamKind,
    file: String,
}

impl GradientSet {
    /// Applies [`grad_from_jacobian`] for every jacobian.
    pub fn from_jacobians(g: &GateTensor, jacs: &[ExponentJacobian]) -> Result<Self> {
        let entries = jacs
            .iter()
            .map(|j| Ok(GradientEntry { label: j.label.clone(), kind: j.kind, tensor: grad_from_jacobian(g, j)? }))
            .collect::<Result<_>>()?;
        Ok(GradientSet { entries })
    }

    pub fn get(&self, label: &str) -> Option<&GateTensor> {
        self.entries.iter().find(|e| e.label == label).map(|e| &e.tensor)
    }

    /// Writes one FGT1 file per tensor plus `manifest.json` into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let mut manifest = Vec::with_capacity(self.entries.len());
        for (i, e) in self.entries.iter().enumerate() {
            let file = format!("grad_{i:02}.fgt");
            e.tensor.save(dir.join(&file))?;
            manifest.push(ManifestEntry { label: e.label.clone(), kind: e.kind, file });
        }
        std::fs::write(dir.join("manifest.json"), serde_json::to_vec_pretty(&manifest)?)?;
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let manifest: Vec<ManifestEntry> = serde_json::from_slice(&std::fs::read(dir.join("manifest.json"))?)?;
        let entries = manifest
            .into_iter()
            .map(|m| Ok(GradientEntry { tensor: GateTensor::load(dir.join(&m.file))?, label: m.label, kind: m.kind }))
            .collect::<Result<_>>()?;
        Ok(GradientSet { entries })
    }
}
