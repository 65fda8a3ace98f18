//! Named gate specifications and their comparisons against independent oracles:
//! the general recurrence, exponentials of padded generators, quadrature and
//! finite differences.

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates;
use crate::gaussian::{self, GeneratingExponent, Squeezing, TwoModeSpec};
use crate::gradients::{self, ExponentJacobian, Parametrization};
use crate::linalg::{self, CMatrix};
use crate::nongaussian::{self, PhaseGateSpec, DEFAULT_HBAR};
use crate::oracle;
use crate::tensor::{BuildOptions, GateTensor, SelectionRule};

/// Smallest five-point step tried by [`gradient_checks`]; the truncation error of the
/// stencil and the rounding error balance near here for most gates.
pub const FD_STEP: f64 = 1e-4;
/// Entries at or below this magnitude are skipped by relative comparisons.
pub const RELATIVE_FLOOR: f64 = 1e-8;

/// A gate with concrete parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "snake_case")]
pub enum GateSpec {
    Identity { modes: usize },
    Displacement { gamma: C64 },
    Squeezer { r: f64, delta: f64 },
    /// `D(gamma) R(phi) S(r e^{i delta})`.
    SingleMode { gamma: C64, phi: f64, r: f64, delta: f64 },
    TwoModeSqueezer { r: f64, delta: f64 },
    Beamsplitter { theta: f64, varphi: f64 },
    /// Haar-random passive gate drawn from `seed`.
    Interferometer { modes: usize, seed: u64 },
    TwoModeGaussian { spec: TwoModeSpec },
    Kerr { kappa: f64 },
    Cubic { eta: f64, hbar: f64 },
    Quartic { eta: f64, hbar: f64 },
}

impl GateSpec {
    pub fn name(&self) -> &'static str {
        match self {
            GateSpec::Identity { .. } => "identity",
            GateSpec::Displacement { .. } => "displacement",
            GateSpec::Squeezer { .. } => "squeezer",
            GateSpec::SingleMode { .. } => "single_mode",
            GateSpec::TwoModeSqueezer { .. } => "two_mode_squeezer",
            GateSpec::Beamsplitter { .. } => "beamsplitter",
            GateSpec::Interferometer { .. } => "interferometer",
            GateSpec::TwoModeGaussian { .. } => "two_mode_gaussian",
            GateSpec::Kerr { .. } => "kerr",
            GateSpec::Cubic { .. } => "cubic",
            GateSpec::Quartic { .. } => "quartic",
        }
    }

    pub fn modes(&self) -> usize {
        match self {
            GateSpec::Identity { modes } | GateSpec::Interferometer { modes, .. } => *modes,
            GateSpec::TwoModeSqueezer { .. } | GateSpec::Beamsplitter { .. } | GateSpec::TwoModeGaussian { .. } => 2,
            _ => 1,
        }
    }

    /// Number of complex values the built tensor stores.
    pub fn stored_len(&self, cutoff: usize) -> u128 {
        let n = cutoff as u128;
        match self {
            GateSpec::TwoModeSqueezer { .. } | GateSpec::Beamsplitter { .. } => n * n * n,
            _ => n.saturating_pow(2 * self.modes() as u32),
        }
    }

    fn squeezing(r: f64, delta: f64) -> Result<C64> {
        Ok(Squeezing::new(r, delta)?.to_complex())
    }

    fn unitary(modes: usize, seed: u64) -> Result<CMatrix> {
        if modes == 0 {
            return Err(Error::InvalidParameter { name: "modes", reason: "an interferometer needs at least one mode".into() });
        }
        Ok(linalg::haar_unitary(modes, &mut ChaCha8Rng::seed_from_u64(seed)))
    }

    /// The tensor from the specialized constructor.
    pub fn build(&self, cutoff: usize, opts: &BuildOptions) -> Result<GateTensor> {
        opts.check(self.stored_len(cutoff))?;
        match *self {
            GateSpec::Identity { modes } => GateTensor::identity(modes, cutoff),
            GateSpec::Displacement { gamma } => gates::displacement(gamma, cutoff),
            GateSpec::Squeezer { r, delta } => gates::squeezer(Self::squeezing(r, delta)?, cutoff),
            GateSpec::SingleMode { gamma, phi, r, delta } => {
                gates::single_mode_gaussian(gamma, phi, Self::squeezing(r, delta)?, cutoff)
            }
            GateSpec::TwoModeSqueezer { r, delta } => gates::two_mode_squeezer(Self::squeezing(r, delta)?, cutoff),
            GateSpec::Beamsplitter { theta, varphi } => gates::beamsplitter(theta, varphi, cutoff),
            GateSpec::Interferometer { modes, seed } => gates::interferometer_tensor_with(&Self::unitary(modes, seed)?, cutoff, opts),
            GateSpec::TwoModeGaussian { spec } => {
                gates::general_gaussian_tensor_with(&gaussian::build_two_mode(&spec)?, 2, cutoff, opts)
            }
            GateSpec::Kerr { kappa } => nongaussian::kerr_diagonal(kappa, cutoff),
            GateSpec::Cubic { eta, hbar } => Ok(nongaussian::phase_gate(&PhaseGateSpec::new(3, eta, hbar, cutoff)?)?.tensor),
            GateSpec::Quartic { eta, hbar } => Ok(nongaussian::phase_gate(&PhaseGateSpec::new(4, eta, hbar, cutoff)?)?.tensor),
        }
    }

    /// Exponent of a Gaussian gate; `None` for the others.
    pub fn exponent(&self) -> Result<Option<GeneratingExponent>> {
        Ok(Some(match *self {
            GateSpec::Identity { modes } => gaussian::build_interferometer(&linalg::identity(modes))?,
            GateSpec::Displacement { gamma } => gaussian::build_single_mode(gamma, 0.0, C64::new(0.0, 0.0))?,
            GateSpec::Squeezer { r, delta } => gaussian::build_single_mode(C64::new(0.0, 0.0), 0.0, Self::squeezing(r, delta)?)?,
            GateSpec::SingleMode { gamma, phi, r, delta } => gaussian::build_single_mode(gamma, phi, Self::squeezing(r, delta)?)?,
            GateSpec::TwoModeSqueezer { r, delta } => gaussian::build_two_mode_squeezer(Self::squeezing(r, delta)?)?,
            GateSpec::Beamsplitter { theta, varphi } => {
                gaussian::build_interferometer(&linalg::beamsplitter_matrix(theta, varphi))?
            }
            GateSpec::Interferometer { modes, seed } => gaussian::build_interferometer(&Self::unitary(modes, seed)?)?,
            GateSpec::TwoModeGaussian { spec } => gaussian::build_two_mode(&spec)?,
            GateSpec::Kerr { .. } | GateSpec::Cubic { .. } | GateSpec::Quartic { .. } => return Ok(None),
        }))
    }

    /// Same gate with the real coordinate `coord` (as listed by [`gradient_checks`]) moved by `t`.
    fn shifted(&self, coord: usize, t: f64) -> GateSpec {
        let mut s = self.clone();
        match &mut s {
            GateSpec::Displacement { gamma } => bump_complex(gamma, coord, t),
            GateSpec::Squeezer { r, delta } | GateSpec::TwoModeSqueezer { r, delta } => *[r, delta][coord] += t,
            GateSpec::SingleMode { gamma, phi, r, delta } => match coord {
                0 | 1 => bump_complex(gamma, coord, t),
                2 => *phi += t,
                3 => *r += t,
                _ => *delta += t,
            },
            GateSpec::Beamsplitter { theta, varphi } => *[theta, varphi][coord] += t,
            GateSpec::TwoModeGaussian { spec } => bump_two_mode(spec, coord, t),
            GateSpec::Kerr { kappa } => *kappa += t,
            GateSpec::Cubic { eta, .. } | GateSpec::Quartic { eta, .. } => *eta += t,
            GateSpec::Identity { .. } | GateSpec::Interferometer { .. } => {}
        }
        s
    }
}

fn bump_complex(z: &mut C64, coord: usize, t: f64) {
    if coord == 0 {
        z.re += t;
    } else {
        z.im += t;
    }
}

/// Coordinates ordered as in `jacobians_all_params`, complex `gamma` split into Re and Im.
fn bump_two_mode(s: &mut TwoModeSpec, coord: usize, t: f64) {
    match coord {
        0..=3 => bump_complex(&mut s.gamma[coord / 2], coord % 2, t),
        4 | 5 => s.phi[coord - 4] += t,
        6 => s.theta_w += t,
        7 => s.varphi_w += t,
        8..=11 => {
            let j = (coord - 8) / 2;
            let (r, d) = (s.zeta[j].r(), s.zeta[j].delta());
            // r stays away from 0 in every caller
            s.zeta[j] = if coord % 2 == 0 { Squeezing::new(r + t, d) } else { Squeezing::new(r, d + t) }.expect("finite squeezing");
        }
        12 => s.theta_v += t,
        _ => s.varphi_v += t,
    }
}

/// Result of comparing against one oracle.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckLine {
    pub oracle: String,
    pub deviation: f64,
    pub tolerance: f64,
}

impl CheckLine {
    pub fn passed(&self) -> bool {
        self.deviation <= self.tolerance
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub gate: GateSpec,
    pub cutoff: usize,
    pub lines: Vec<CheckLine>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.lines.iter().all(CheckLine::passed)
    }
}

/// Every applicable oracle comparison for `spec` at `cutoff`.
pub fn check_gate(spec: &GateSpec, cutoff: usize) -> Result<CheckReport> {
    let opts = BuildOptions::default();
    let g = spec.build(cutoff, &opts)?;
    let mut lines = Vec::new();
    let mut push = |oracle: &str, deviation: f64, tolerance: f64| {
        lines.push(CheckLine { oracle: oracle.into(), deviation, tolerance })
    };
    if !g.all_finite() {
        push("finite entries", f64::INFINITY, 0.0);
    }
    if let Some(exp) = spec.exponent()? {
        let general = gates::general_gaussian_tensor_with(&exp, spec.modes(), cutoff, &opts)?;
        push("general recurrence (max abs)", g.max_abs_diff(&general)?, 1e-12);
    }
    let (gamma, phi, zeta) = match *spec {
        GateSpec::Displacement { gamma } => (Some(gamma), 0.0, C64::new(0.0, 0.0)),
        GateSpec::Squeezer { r, delta } => (Some(C64::new(0.0, 0.0)), 0.0, GateSpec::squeezing(r, delta)?),
        GateSpec::SingleMode { gamma, phi, r, delta } => (Some(gamma), phi, GateSpec::squeezing(r, delta)?),
        _ => (None, 0.0, C64::new(0.0, 0.0)),
    };
    if let Some(gamma) = gamma {
        let block = cutoff.min(6);
        // the oracle's own truncation error needs a few dozen levels whatever the cutoff
        let pad = 4.max(48usize.div_ceil(cutoff));
        let padded = oracle::padded_single_mode_gaussian(gamma, phi, zeta, cutoff, pad)?;
        let dev = (0..block)
            .flat_map(|m| (0..block).map(move |n| (m, n)))
            .map(|(m, n)| (g.get(&[m, n]) - padded[[m, n]]).norm())
            .fold(0.0, f64::max);
        push("padded exponential, top-left block (max abs)", dev, 1e-8);
    }
    let rule = match spec {
        GateSpec::TwoModeSqueezer { .. } => Some(SelectionRule::PairDifference),
        GateSpec::Beamsplitter { .. } | GateSpec::Interferometer { .. } | GateSpec::Kerr { .. } => {
            Some(SelectionRule::ParticleConserving)
        }
        _ => None,
    };
    if let Some(rule) = rule {
        push("selection-rule violations", g.selection_violations(rule) as f64, 0.0);
    }
    if let GateSpec::Cubic { eta, hbar } | GateSpec::Quartic { eta, hbar } = *spec {
        let order = if matches!(spec, GateSpec::Cubic { .. }) { 3 } else { 4 };
        let reference = nongaussian::oracle_phase_tensor(&PhaseGateSpec::new(order, eta, hbar, cutoff)?)?;
        push("position-space quadrature (max abs)", g.max_abs_diff(&reference)?, if order == 3 { 1e-8 } else { 1e-7 });
    }
    for gc in gradient_checks(spec, cutoff, FD_STEP)? {
        push(&format!("d/d{} vs finite differences [{}] (max rel)", gc.coordinate, gc.form), gc.error, 1e-6);
    }
    Ok(CheckReport { gate: spec.clone(), cutoff, lines })
}

/// One analytic derivative tensor against a five-point difference of the builder.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradCheck {
    pub coordinate: String,
    /// Which analytic route produced the derivative.
    pub form: &'static str,
    /// Largest relative deviation over entries above [`RELATIVE_FLOOR`].
    pub error: f64,
}

fn dense(t: &GateTensor) -> Result<Vec<C64>> {
    t.to_dense()
}

/// `d/dRe` and `d/dIm` from the Wirtinger pair.
fn real_parts(dxi: &[C64], dxic: &[C64]) -> (Vec<C64>, Vec<C64>) {
    let re = dxi.iter().zip(dxic).map(|(a, b)| a + b).collect();
    let im = dxi.iter().zip(dxic).map(|(a, b)| C64::i() * (a - b)).collect();
    (re, im)
}

fn from_jacobians(g: &GateTensor, jacs: &[ExponentJacobian]) -> Result<Vec<Vec<C64>>> {
    jacs.iter().map(|j| dense(&gradients::grad_from_jacobian(g, j)?)).collect()
}

/// Real-coordinate derivatives of a Gaussian gate from its exponent jacobians, with
/// complex Wirtinger pairs (always listed first) folded into Re and Im.
fn with_pairs(g: &GateTensor, jacs: &[ExponentJacobian], pairs: usize) -> Result<Vec<Vec<C64>>> {
    let d = from_jacobians(g, jacs)?;
    let mut out = Vec::with_capacity(d.len());
    for p in 0..pairs {
        let (re, im) = real_parts(&d[2 * p], &d[2 * p + 1]);
        out.push(re);
        out.push(im);
    }
    out.extend(d.into_iter().skip(2 * pairs));
    Ok(out)
}

/// Analytic derivative tensors of `spec` against finite differences of `spec.build`.
///
/// Every coordinate goes through the exponent-jacobian recurrence; the alternative
/// closed forms (displacement partials, phase and amplitude shortcuts, Kerr and
/// cubic derivatives) are checked as separate entries.
pub fn gradient_checks(spec: &GateSpec, cutoff: usize, h: f64) -> Result<Vec<GradCheck>> {
    let opts = BuildOptions::default();
    let g = spec.build(cutoff, &opts)?;
    let fd = |coord: usize| {
        oracle::five_point_stepped(|t| spec.shifted(coord, t).build(cutoff, &opts)?.to_dense(), 0.0, h, RELATIVE_FLOOR)
    };
    let mut out = Vec::new();
    let mut record = |coordinate: &str, form: &'static str, analytic: &[C64], reference: &[C64]| {
        out.push(GradCheck {
            coordinate: coordinate.into(),
            form,
            error: oracle::max_relative_error(analytic, reference, RELATIVE_FLOOR),
        })
    };
    let zero = C64::new(0.0, 0.0);
    match *spec {
        GateSpec::Identity { .. } => {}
        GateSpec::Displacement { gamma } => {
            let jacs = gradients::single_mode_jacobians(gamma, 0.0, zero)?;
            let d = with_pairs(&g, &jacs[..2], 1)?;
            let (re, im) = (fd(0)?, fd(1)?);
            record("re_gamma", "exponent jacobian", &d[0], &re);
            record("im_gamma", "exponent jacobian", &d[1], &im);
            let (jg, jgc) = gradients::single_mode_displacement_jacobians(gamma, 0.0, zero)?;
            let d = with_pairs(&g, &[jg, jgc], 1)?;
            record("re_gamma", "displacement partials", &d[0], &re);
            record("im_gamma", "displacement partials", &d[1], &im);
            if gamma.norm() > 1e-3 {
                // rotating gamma: d/d arg = -Im(gamma) d/dRe + Re(gamma) d/dIm
                let ph: Vec<C64> = re.iter().zip(&im).map(|(a, b)| a * (-gamma.im) + b * gamma.re).collect();
                record("arg_gamma", "phase shortcut", &dense(&gradients::phase_gradient_single_param(&g, 1.0))?, &ph);
            }
        }
        GateSpec::Squeezer { r, delta } => {
            let jacs = gradients::single_mode_jacobians(zero, 0.0, GateSpec::squeezing(r, delta)?)?;
            let d = from_jacobians(&g, &jacs[3..])?;
            let fd_delta = fd(1)?;
            record("r", "exponent jacobian", &d[0], &fd(0)?);
            record("delta", "exponent jacobian", &d[1], &fd_delta);
            record("delta", "phase shortcut", &dense(&gradients::phase_gradient_single_param(&g, 0.5))?, &fd_delta);
        }
        GateSpec::SingleMode { gamma, phi, r, delta } => {
            let jacs = gradients::single_mode_jacobians_polar(gamma, phi, r, delta)?;
            let d = with_pairs(&g, &jacs, 1)?;
            for (i, name) in ["re_gamma", "im_gamma", "phi", "r", "delta"].iter().enumerate() {
                record(name, "exponent jacobian", &d[i], &fd(i)?);
            }
        }
        GateSpec::TwoModeSqueezer { r, delta } => {
            let zeta = GateSpec::squeezing(r, delta)?;
            let d = from_jacobians(&g, &gradients::two_mode_squeezer_jacobians(zeta)?)?;
            let (fr, fdl) = (fd(0)?, fd(1)?);
            record("r", "exponent jacobian", &d[0], &fr);
            record("delta", "exponent jacobian", &d[1], &fdl);
            let big = gates::two_mode_squeezer(zeta, cutoff + 1)?;
            record("r", "amplitude shortcut", &dense(&gradients::amplitude_gradient_two_mode_squeezer(&big, delta)?)?, &fr);
            record("delta", "phase shortcut", &dense(&gradients::phase_gradient_single_param(&g, 1.0))?, &fdl);
        }
        GateSpec::Beamsplitter { theta, varphi } => {
            let d = from_jacobians(&g, &gradients::beamsplitter_jacobians(theta, varphi))?;
            let fv = fd(1)?;
            record("theta", "exponent jacobian", &d[0], &fd(0)?);
            record("varphi", "exponent jacobian", &d[1], &fv);
            record("varphi", "phase shortcut", &dense(&gradients::phase_gradient_single_param(&g, -1.0))?, &fv);
        }
        GateSpec::Interferometer { modes, seed } => {
            let v = GateSpec::unitary(modes, seed)?;
            for (k, herm) in linalg::hermitian_basis(modes, true).iter().enumerate() {
                let gen = herm.mapv(|z| z * C64::i());
                let jac = gradients::interferometer_jacobian(&format!("h{k}"), &gen.dot(&v));
                let analytic = dense(&gradients::grad_from_jacobian(&g, &jac)?)?;
                let reference = oracle::five_point_stepped(
                    |t| {
                        let moved = oracle::expm(&gen.mapv(|z| z * t)).dot(&v);
                        gates::interferometer_tensor_with(&moved, cutoff, &opts)?.to_dense()
                    },
                    0.0,
                    h,
                    RELATIVE_FLOOR,
                )?;
                record(&format!("generator[{k}]"), "exponent jacobian", &analytic, &reference);
            }
        }
        GateSpec::TwoModeGaussian { spec: ts } => {
            let jacs = gradients::jacobians_all_params(&Parametrization::TwoMode(ts))?;
            let d = with_pairs(&g, &jacs, 2)?;
            let names = [
                "re_gamma[0]", "im_gamma[0]", "re_gamma[1]", "im_gamma[1]", "phi[0]", "phi[1]", "theta_w", "varphi_w",
                "r[0]", "delta[0]", "r[1]", "delta[1]", "theta_v", "varphi_v",
            ];
            for (i, name) in names.iter().enumerate() {
                record(name, "exponent jacobian", &d[i], &fd(i)?);
            }
        }
        GateSpec::Kerr { kappa } => {
            record("kappa", "diagonal derivative", &dense(&nongaussian::kerr_gradient(kappa, cutoff)?)?, &fd(0)?);
        }
        GateSpec::Cubic { eta, hbar } => {
            let ps = PhaseGateSpec::new(3, eta, hbar, cutoff)?;
            let analytic = nongaussian::cubic_gradient(&ps)?;
            // the recurrence tensor carries ~1e-14 absolute rounding noise that a difference
            // quotient amplifies, so difference the smooth quadrature tensor instead
            let reference =
                oracle::five_point_stepped(
                    |t| nongaussian::oracle_phase_tensor(&ps.with_eta(eta + t)?)?.to_dense(),
                    0.0,
                    h,
                    RELATIVE_FLOOR,
                )?;
            record("eta", "ladder recurrence", &dense(&analytic)?, &reference);
        }
        GateSpec::Quartic { .. } => {}
    }
    Ok(out)
}

/// Default `hbar` for phase gates specified without one.
pub const fn default_hbar() -> f64 {
    DEFAULT_HBAR
}
