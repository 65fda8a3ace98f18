//! Pure Fock-basis states and gate application.

use std::path::Path;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{GateTensor, SelectionRule};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Norm slack allowed for rounding; contraction with a truncated unitary never adds norm.
pub const NORM_SLACK: f64 = 1e-10;

/// Amplitudes over `N^modes` Fock configurations, row-major with mode 0 slowest.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    modes: usize,
    cutoff: usize,
    amplitudes: Vec<C64>,
}

#[derive(Serialize, Deserialize)]
struct StateJson {
    modes: usize,
    cutoff: usize,
    amplitudes: Vec<[f64; 2]>,
}

impl StateVector {
    pub fn new(modes: usize, cutoff: usize, amplitudes: Vec<C64>) -> Result<Self> {
        if modes == 0 || cutoff == 0 {
            return Err(Error::InvalidParameter { name: "cutoff", reason: "modes and cutoff must be positive".into() });
        }
        if Some(amplitudes.len() as u128) != (cutoff as u128).checked_pow(modes as u32) {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes for {modes} modes at cutoff {cutoff}",
                amplitudes.len()
            )));
        }
        if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFiniteValue("state amplitude".into()));
        }
        let s = StateVector { modes, cutoff, amplitudes };
        if s.norm() > 1.0 + NORM_SLACK {
            return Err(Error::InvalidParameter { name: "amplitudes", reason: format!("state norm {} exceeds 1", s.norm()) });
        }
        Ok(s)
    }

    /// Scales `amplitudes` to unit norm.
    pub fn normalized(modes: usize, cutoff: usize, amplitudes: Vec<C64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidParameter { name: "amplitudes", reason: "cannot normalize a zero or non-finite vector".into() });
        }
        Self::new(modes, cutoff, amplitudes.into_iter().map(|z| z / norm).collect())
    }

    pub fn vacuum(modes: usize, cutoff: usize) -> Result<Self> {
        Self::fock(modes, cutoff, &vec![0; modes])
    }

    pub fn fock(modes: usize, cutoff: usize, occupation: &[usize]) -> Result<Self> {
        if occupation.len() != modes || occupation.iter().any(|&n| n >= cutoff) {
            return Err(Error::DimensionMismatch(format!("occupation {occupation:?} does not fit {modes} modes below {cutoff}")));
        }
        let mut amps = vec![ZERO; cutoff.pow(modes as u32)];
        let flat = occupation.iter().fold(0, |acc, &n| acc * cutoff + n);
        amps[flat] = C64::new(1.0, 0.0);
        Self::new(modes, cutoff, amps)
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, occupation: &[usize]) -> C64 {
        if occupation.len() != self.modes || occupation.iter().any(|&n| n >= self.cutoff) {
            return ZERO;
        }
        self.amplitudes[occupation.iter().fold(0, |acc, &n| acc * self.cutoff + n)]
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        self.check_shape(other)?;
        Ok(self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum())
    }

    fn check_shape(&self, other: &StateVector) -> Result<()> {
        if self.modes != other.modes || self.cutoff != other.cutoff {
            return Err(Error::DimensionMismatch(format!(
                "states of shape ({}, {}) and ({}, {})",
                self.modes, self.cutoff, other.modes, other.cutoff
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let j = StateJson {
            modes: self.modes,
            cutoff: self.cutoff,
            amplitudes: self.amplitudes.iter().map(|z| [z.re, z.im]).collect(),
        };
        Ok(serde_json::to_string_pretty(&j)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let j: StateJson = serde_json::from_str(s)?;
        Self::new(j.modes, j.cutoff, j.amplitudes.into_iter().map(|[re, im]| C64::new(re, im)).collect())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Unchecked constructor for results of contractions, which cannot gain norm beyond rounding.
    pub(crate) fn from_contraction(modes: usize, cutoff: usize, amplitudes: Vec<C64>) -> Self {
        StateVector { modes, cutoff, amplitudes }
    }
}

/// Contracts the ket indices of `g` with the amplitudes of `psi` on `targets`.
pub fn apply_gate(g: &GateTensor, psi: &StateVector, targets: &[usize]) -> Result<StateVector> {
    let (l, n) = (psi.modes, psi.cutoff);
    if g.cutoff() != n {
        return Err(Error::DimensionMismatch(format!("gate cutoff {} vs state cutoff {n}", g.cutoff())));
    }
    if targets.len() != g.modes() {
        return Err(Error::DimensionMismatch(format!("{}-mode gate on {} target modes", g.modes(), targets.len())));
    }
    for (i, &t) in targets.iter().enumerate() {
        if t >= l || targets[..i].contains(&t) {
            return Err(Error::DimensionMismatch(format!("target modes {targets:?} invalid for {l} modes")));
        }
    }
    let m = g.to_matrix()?;
    let d = m.nrows();
    let strides: Vec<usize> = (0..l).map(|a| n.pow((l - 1 - a) as u32)).collect();
    // offset of each target-mode configuration, with target 0 slowest
    let sub: Vec<usize> = (0..d)
        .map(|mut f| {
            let mut off = 0;
            for &t in targets.iter().rev() {
                off += (f % n) * strides[t];
                f /= n;
            }
            off
        })
        .collect();
    let rest: Vec<usize> = (0..l).filter(|a| !targets.contains(a)).collect();
    let rest_count = n.pow(rest.len() as u32);
    let mut out = vec![ZERO; psi.amplitudes.len()];
    let mut local = vec![ZERO; d];
    for mut r in 0..rest_count {
        let mut base = 0;
        for &a in rest.iter().rev() {
            base += (r % n) * strides[a];
            r /= n;
        }
        for (j, off) in sub.iter().enumerate() {
            local[j] = psi.amplitudes[base + off];
        }
        for (i, off) in sub.iter().enumerate() {
            let row = m.row(i);
            out[base + off] = row.iter().zip(&local).map(|(a, b)| a * b).sum();
        }
    }
    Ok(StateVector::from_contraction(l, n, out))
}

fn check_two_mode(g: &GateTensor, psi: &StateVector, rule: SelectionRule) -> Result<usize> {
    if g.selection_rule() != rule {
        return Err(Error::WrongSelectionRule { expected: rule, actual: g.selection_rule() });
    }
    if g.modes() != 2 || psi.modes != 2 || g.cutoff() != psi.cutoff {
        return Err(Error::DimensionMismatch("fast paths need a two-mode gate and state of equal cutoff".into()));
    }
    Ok(psi.cutoff)
}

/// `c'_{n,m} = sum_k B_{n,m,k,n+m-k} c_{k,n+m-k}` with `k` from `max(0, n+m-N+1)` to
/// `min(n+m, N-1)`: one sum per output amplitude.
pub fn apply_beamsplitter_fast(b: &GateTensor, psi: &StateVector) -> Result<StateVector> {
    let n = check_two_mode(b, psi, SelectionRule::ParticleConserving)?;
    let mut out = vec![ZERO; n * n];
    for p in 0..n {
        for q in 0..n {
            let total = p + q;
            let lo = (total + 1).saturating_sub(n);
            let hi = total.min(n - 1);
            let mut acc = ZERO;
            for k in lo..=hi {
                acc += b.get(&[p, q, k, total - k]) * psi.amplitudes[k * n + total - k];
            }
            out[p * n + q] = acc;
        }
    }
    Ok(StateVector::from_contraction(2, n, out))
}

/// `c''_{n,m} = sum_k S_{n,m,k,k+m-n} c_{k,k+m-n}` with `k` from `max(0, n-m)` up to,
/// but excluding, `N + min(0, n-m)`; the exclusive reading of the upper bound is the one
/// that agrees with full contraction.
pub fn apply_two_mode_squeezer_fast(s: &GateTensor, psi: &StateVector) -> Result<StateVector> {
    let n = check_two_mode(s, psi, SelectionRule::PairDifference)?;
    let mut out = vec![ZERO; n * n];
    for p in 0..n {
        for q in 0..n {
            let diff = p as i64 - q as i64;
            let lo = diff.max(0) as usize;
            let hi = (n as i64 + diff.min(0)) as usize;
            let mut acc = ZERO;
            for k in lo..hi {
                let l = (k as i64 - diff) as usize;
                acc += s.get(&[p, q, k, l]) * psi.amplitudes[k * n + l];
            }
            out[p * n + q] = acc;
        }
    }
    Ok(StateVector::from_contraction(2, n, out))
}

/// `value = -|<target|out>|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossValue {
    pub value: f64,
    pub overlap: C64,
}

pub fn loss(psi_out: &StateVector, target: &StateVector) -> Result<LossValue> {
    if (target.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidParameter { name: "target", reason: format!("target norm {} is not 1", target.norm()) });
    }
    let overlap = target.inner(psi_out)?;
    Ok(LossValue { value: -overlap.norm(), overlap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_state(rng: &mut ChaCha8Rng, modes: usize, cutoff: usize) -> StateVector {
        let amps = (0..cutoff.pow(modes as u32)).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        StateVector::normalized(modes, cutoff, amps).unwrap()
    }

    fn max_diff(a: &StateVector, b: &StateVector) -> f64 {
        a.amplitudes().iter().zip(b.amplitudes()).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
    }

    #[test]
    fn identity_leaves_state_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let psi = random_state(&mut rng, 3, 4);
        let out = apply_gate(&GateTensor::identity(1, 4).unwrap(), &psi, &[1]).unwrap();
        assert_eq!(out, psi);
        let out = apply_gate(&GateTensor::identity(2, 4).unwrap(), &psi, &[2, 0]).unwrap();
        assert_eq!(out, psi);
    }

    #[test]
    fn displaced_vacuum_is_coherent() {
        let gamma = c(0.7, -0.3);
        let out = apply_gate(&gates::displacement(gamma, 12).unwrap(), &StateVector::vacuum(1, 12).unwrap(), &[0]).unwrap();
        let mut fact = 1.0;
        for n in 0..12 {
            if n > 0 {
                fact *= n as f64;
            }
            let expected = (-gamma.norm_sqr() / 2.0).exp() * gamma.powu(n as u32) / fact.sqrt();
            assert!((out.amplitude(&[n]) - expected).norm() < 1e-15);
        }
    }

    #[test]
    fn squeezed_vacuum_has_no_odd_amplitudes() {
        let out = apply_gate(&gates::squeezer(c(0.4, 0.6), 10).unwrap(), &StateVector::vacuum(1, 10).unwrap(), &[0]).unwrap();
        for n in (1..10).step_by(2) {
            assert_eq!(out.amplitude(&[n]), ZERO);
        }
        assert!(out.amplitude(&[2]).norm() > 0.1);
    }

    #[test]
    fn gate_on_second_mode_matches_kron() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let psi = random_state(&mut rng, 2, 5);
        let d = gates::displacement(c(0.3, 0.2), 5).unwrap();
        let out = apply_gate(&d, &psi, &[1]).unwrap();
        for a in 0..5 {
            for m in 0..5 {
                let expected: C64 = (0..5).map(|k| d.get(&[m, k]) * psi.amplitude(&[a, k])).sum();
                assert!((out.amplitude(&[a, m]) - expected).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn beamsplitter_fast_path_cases() {
        let n = 6;
        let id = gates::beamsplitter(0.0, 0.3, n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let psi = random_state(&mut rng, 2, n);
        assert!(max_diff(&apply_beamsplitter_fast(&id, &psi).unwrap(), &psi) < 1e-15);

        let b = gates::beamsplitter(std::f64::consts::FRAC_PI_4, 0.0, n).unwrap();
        let out = apply_beamsplitter_fast(&b, &StateVector::fock(2, n, &[1, 0]).unwrap()).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        // the single-photon block is V, so |1,0> goes to column 0 of V
        assert!((out.amplitude(&[1, 0]) - h).norm() < 1e-15);
        assert!((out.amplitude(&[0, 1]) - h).norm() < 1e-15);
        let g = gates::two_mode_squeezer(c(0.2, 0.0), n).unwrap();
        assert!(matches!(apply_beamsplitter_fast(&g, &psi), Err(Error::WrongSelectionRule { .. })));
    }

    #[test]
    fn fast_paths_match_full_contraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for case in 0..200 {
            let n = rng.gen_range(2..=16);
            let psi = random_state(&mut rng, 2, n);
            let (fast, full) = if case % 2 == 0 {
                let b = gates::beamsplitter(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), n).unwrap();
                (apply_beamsplitter_fast(&b, &psi).unwrap(), apply_gate(&b, &psi, &[0, 1]).unwrap())
            } else {
                let z = C64::from_polar(rng.gen_range(0.0..1.2), rng.gen_range(-3.0..3.0));
                let s = gates::two_mode_squeezer(z, n).unwrap();
                (apply_two_mode_squeezer_fast(&s, &psi).unwrap(), apply_gate(&s, &psi, &[0, 1]).unwrap())
            };
            assert!(max_diff(&fast, &full) < 1e-13, "case {case}: {}", max_diff(&fast, &full));
            assert!(fast.norm() <= psi.norm() + NORM_SLACK);
        }
    }

    #[test]
    fn two_mode_squeezed_vacuum_is_diagonal() {
        let n = 8;
        let s = gates::two_mode_squeezer(c(0.5, 0.2), n).unwrap();
        let out = apply_two_mode_squeezer_fast(&s, &StateVector::vacuum(2, n).unwrap()).unwrap();
        for p in 0..n {
            for q in 0..n {
                if p != q {
                    assert_eq!(out.amplitude(&[p, q]), ZERO);
                }
            }
        }
        assert!((out.amplitude(&[0, 0]) - 1.0 / c(0.5, 0.2).norm().cosh()).norm() < 1e-15);
        let id = gates::two_mode_squeezer(ZERO, n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let psi = random_state(&mut rng, 2, n);
        assert!(max_diff(&apply_two_mode_squeezer_fast(&id, &psi).unwrap(), &psi) < 1e-15);
    }

    #[test]
    fn loss_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let psi = random_state(&mut rng, 1, 8);
        assert!((loss(&psi, &psi).unwrap().value + 1.0).abs() < 1e-14);
        let zero = StateVector::fock(1, 8, &[0]).unwrap();
        let one = StateVector::fock(1, 8, &[1]).unwrap();
        assert_eq!(loss(&zero, &one).unwrap().value, 0.0);
        let gamma = c(0.6, 0.8);
        let coh = apply_gate(&gates::displacement(gamma, 30).unwrap(), &StateVector::vacuum(1, 30).unwrap(), &[0]).unwrap();
        let vac = StateVector::vacuum(1, 30).unwrap();
        assert!((loss(&coh, &vac).unwrap().value + (-0.5_f64).exp()).abs() < 1e-15);
        let half = StateVector::new(1, 8, vec![c(0.5, 0.0); 1].into_iter().chain(vec![ZERO; 7]).collect()).unwrap();
        assert!(loss(&psi, &half).is_err());
    }

    #[test]
    fn norm_never_increases() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let n = rng.gen_range(2..12);
            let psi = random_state(&mut rng, 1, n);
            let g = gates::single_mode_gaussian(
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                rng.gen_range(-3.0..3.0),
                C64::from_polar(rng.gen_range(0.0..1.0), rng.gen_range(-3.0..3.0)),
                n,
            )
            .unwrap();
            let out = apply_gate(&g, &psi, &[0]).unwrap();
            assert!(out.norm() <= 1.0 + NORM_SLACK, "{}", out.norm());
        }
    }

    #[test]
    fn json_round_trip_and_validation() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let psi = random_state(&mut rng, 2, 3);
        let back = StateVector::from_json(&psi.to_json().unwrap()).unwrap();
        assert_eq!(back, psi);
        assert!(StateVector::from_json(r#"{"modes":1,"cutoff":2,"amplitudes":[[1,0]]}"#).is_err());
        assert!(StateVector::from_json(r#"{"modes":1,"cutoff":2,"amplitudes":[[1,0],[1,0]]}"#).is_err());
        assert!(apply_gate(&GateTensor::identity(1, 4).unwrap(), &psi, &[0]).is_err());
    }
}
