//! Truncated gate tensors and the FGT1 binary container.
//!
//! A tensor of an `l`-mode gate has `2l` axes of length `N` ordered
//! `(m_1..m_l, n_1..n_l)`, where `m` indexes the bra and `n` the ket.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;

/// Default cap on the number of complex entries a single tensor may hold.
pub const DEFAULT_ELEMENT_BUDGET: u128 = 100_000_000;

const MAGIC: &[u8; 4] = b"FGT1";
pub const FGT1_HEADER_LEN: usize = 16;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Exact sparsity pattern carried by a tensor.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionRule {
    #[default]
    None,
    /// `sum(m) == sum(n)`.
    ParticleConserving,
    /// Two modes only: `m_1 - m_2 == n_1 - n_2`.
    PairDifference,
}

impl SelectionRule {
    pub fn tag(self) -> u32 {
        match self {
            SelectionRule::None => 0,
            SelectionRule::ParticleConserving => 1,
            SelectionRule::PairDifference => 2,
        }
    }

    pub fn from_tag(tag: u32) -> Result<Self> {
        match tag {
            0 => Ok(SelectionRule::None),
            1 => Ok(SelectionRule::ParticleConserving),
            2 => Ok(SelectionRule::PairDifference),
            _ => Err(Error::Format(format!("unknown selection-rule tag {tag}"))),
        }
    }

    /// Whether the rule permits a nonzero entry at `idx = m ⊕ n`.
    pub fn allows(self, idx: &[usize]) -> bool {
        let l = idx.len() / 2;
        match self {
            SelectionRule::None => true,
            SelectionRule::ParticleConserving => {
                idx[..l].iter().sum::<usize>() == idx[l..].iter().sum::<usize>()
            }
            SelectionRule::PairDifference => {
                l == 2 && idx[0] as i64 - idx[1] as i64 == idx[2] as i64 - idx[3] as i64
            }
        }
    }
}

/// A direct-sum index `k = m ⊕ n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    entries: Vec<usize>,
}

impl MultiIndex {
    pub fn new(m: &[usize], n: &[usize], cutoff: usize) -> Result<Self> {
        if m.len() != n.len() {
            return Err(Error::DimensionMismatch(format!("bra has {} modes, ket has {}", m.len(), n.len())));
        }
        let entries: Vec<usize> = m.iter().chain(n).copied().collect();
        if let Some(bad) = entries.iter().find(|&&k| k >= cutoff) {
            return Err(Error::InvalidParameter {
                name: "index",
                reason: format!("entry {bad} is not below the cutoff {cutoff}"),
            });
        }
        Ok(MultiIndex { entries })
    }

    pub fn entries(&self) -> &[usize] {
        &self.entries
    }

    pub fn bra(&self) -> &[usize] {
        &self.entries[..self.entries.len() / 2]
    }

    pub fn ket(&self) -> &[usize] {
        &self.entries[self.entries.len() / 2..]
    }
}

/// Limits applied while materializing tensors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BuildOptions {
    pub element_budget: u128,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { element_budget: DEFAULT_ELEMENT_BUDGET }
    }
}

impl BuildOptions {
    pub fn check(&self, requested: u128) -> Result<()> {
        if requested > self.element_budget {
            Err(Error::BudgetExceeded { requested, budget: self.element_budget })
        } else {
            Ok(())
        }
    }
}

pub(crate) fn dense_len(modes: usize, cutoff: usize) -> u128 {
    (cutoff as u128).saturating_pow(2 * modes as u32)
}

#[derive(Clone, Debug, PartialEq)]
enum Storage {
    Dense(Vec<C64>),
    /// Two-mode tensor with one implied index: entry `[m][n][p]` holds the element whose
    /// `q` is fixed by the selection rule (`m + n - p` or `p - m + n`).
    Banded(Vec<C64>),
}

/// Truncated matrix elements `<m|G|n>` of an `l`-mode gate.
#[derive(Clone, Debug, PartialEq)]
pub struct GateTensor {
    modes: usize,
    cutoff: usize,
    rule: SelectionRule,
    storage: Storage,
}

/// The fourth index fixed by a rank-4 selection rule, if it lies below `cutoff`.
fn band_q(rule: SelectionRule, cutoff: usize, m: usize, n: usize, p: usize) -> Option<usize> {
    let q = match rule {
        SelectionRule::ParticleConserving => (m + n).checked_sub(p)?,
        SelectionRule::PairDifference => (p + n).checked_sub(m)?,
        SelectionRule::None => return None,
    };
    (q < cutoff).then_some(q)
}

impl GateTensor {
    /// Wraps a dense row-major buffer, checking size, finiteness and the selection rule.
    pub fn from_dense(modes: usize, cutoff: usize, data: Vec<C64>, rule: SelectionRule) -> Result<Self> {
        if modes == 0 || cutoff == 0 {
            return Err(Error::DimensionMismatch("tensors need at least one mode and cutoff 1".into()));
        }
        if data.len() as u128 != dense_len(modes, cutoff) {
            return Err(Error::DimensionMismatch(format!(
                "{} entries given for {modes} modes at cutoff {cutoff}",
                data.len()
            )));
        }
        if rule == SelectionRule::PairDifference && modes != 2 {
            return Err(Error::DimensionMismatch("pair-difference rule needs two modes".into()));
        }
        let t = GateTensor { modes, cutoff, rule, storage: Storage::Dense(data) };
        if !t.all_finite() {
            return Err(Error::NonFiniteValue("tensor payload".into()));
        }
        let found = t.selection_violations(rule);
        if found > 0 {
            return Err(Error::SelectionRuleMismatch { expected: rule, found });
        }
        Ok(t)
    }

    pub(crate) fn dense_unchecked(modes: usize, cutoff: usize, data: Vec<C64>, rule: SelectionRule) -> Self {
        debug_assert_eq!(data.len() as u128, dense_len(modes, cutoff));
        GateTensor { modes, cutoff, rule, storage: Storage::Dense(data) }
    }

    pub(crate) fn banded_unchecked(cutoff: usize, rule: SelectionRule, data: Vec<C64>) -> Self {
        debug_assert!(rule != SelectionRule::None);
        debug_assert_eq!(data.len(), cutoff * cutoff * cutoff);
        GateTensor { modes: 2, cutoff, rule, storage: Storage::Banded(data) }
    }

    pub fn identity(modes: usize, cutoff: usize) -> Result<Self> {
        let opts = BuildOptions::default();
        opts.check(dense_len(modes, cutoff))?;
        let dim = cutoff.pow(modes as u32);
        let mut data = vec![ZERO; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = C64::new(1.0, 0.0);
        }
        Ok(Self::dense_unchecked(modes, cutoff, data, SelectionRule::ParticleConserving))
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn rank(&self) -> usize {
        2 * self.modes
    }

    pub fn selection_rule(&self) -> SelectionRule {
        self.rule
    }

    pub fn is_banded(&self) -> bool {
        matches!(self.storage, Storage::Banded(_))
    }

    /// Number of entries of the dense view, `N^(2l)`.
    pub fn dense_len(&self) -> u128 {
        dense_len(self.modes, self.cutoff)
    }

    /// Dimension `N^l` of the single-sided Hilbert space.
    pub fn hilbert_dim(&self) -> usize {
        self.cutoff.pow(self.modes as u32)
    }

    /// The dense buffer when stored densely.
    pub fn dense_data(&self) -> Option<&[C64]> {
        match &self.storage {
            Storage::Dense(d) => Some(d),
            Storage::Banded(_) => None,
        }
    }

    /// The band buffer, indexed `(m * N + n) * N + p` with `q` implied by the rule,
    /// when stored banded.
    pub fn banded_data(&self) -> Option<&[C64]> {
        match &self.storage {
            Storage::Banded(d) => Some(d),
            Storage::Dense(_) => None,
        }
    }

    fn implied_q(&self, m: usize, n: usize, p: usize) -> Option<usize> {
        band_q(self.rule, self.cutoff, m, n, p)
    }

    /// Entry at `idx = m ⊕ n`; indices outside the cutoff read as zero.
    pub fn get(&self, idx: &[usize]) -> C64 {
        assert_eq!(idx.len(), self.rank(), "index rank does not match tensor rank");
        if idx.iter().any(|&k| k >= self.cutoff) {
            return ZERO;
        }
        match &self.storage {
            Storage::Dense(d) => d[self.flat(idx)],
            Storage::Banded(d) => {
                let (m, n, p, q) = (idx[0], idx[1], idx[2], idx[3]);
                match self.implied_q(m, n, p) {
                    Some(qq) if qq == q => d[(m * self.cutoff + n) * self.cutoff + p],
                    _ => ZERO,
                }
            }
        }
    }

    /// Signed-index access; negative or too-large indices read as zero.
    pub fn get_signed(&self, idx: &[i64]) -> C64 {
        if idx.iter().any(|&k| k < 0) {
            return ZERO;
        }
        let u: Vec<usize> = idx.iter().map(|&k| k as usize).collect();
        self.get(&u)
    }

    fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &k| acc * self.cutoff + k)
    }

    /// Row-major dense copy; fails if it would exceed the default element budget.
    pub fn to_dense(&self) -> Result<Vec<C64>> {
        self.to_dense_with(&BuildOptions::default())
    }

    pub fn to_dense_with(&self, opts: &BuildOptions) -> Result<Vec<C64>> {
        match &self.storage {
            Storage::Dense(d) => Ok(d.clone()),
            Storage::Banded(_) => {
                opts.check(self.dense_len())?;
                let n = self.cutoff;
                let mut out = vec![ZERO; n * n * n * n];
                self.for_each_band(|m, nn, p, q, v| out[((m * n + nn) * n + p) * n + q] = v);
                Ok(out)
            }
        }
    }

    /// Visits every stored band entry of a banded tensor.
    fn for_each_band(&self, mut f: impl FnMut(usize, usize, usize, usize, C64)) {
        if let Storage::Banded(d) = &self.storage {
            let n = self.cutoff;
            for m in 0..n {
                for nn in 0..n {
                    for p in 0..n {
                        if let Some(q) = self.implied_q(m, nn, p) {
                            f(m, nn, p, q, d[(m * n + nn) * n + p]);
                        }
                    }
                }
            }
        }
    }

    /// Calls `f(idx, value)` for every entry of the dense view, in row-major order.
    pub fn for_each(&self, mut f: impl FnMut(&[usize], C64)) {
        let rank = self.rank();
        let mut idx = vec![0usize; rank];
        let total = self.dense_len();
        let mut count = 0u128;
        while count < total {
            f(&idx, self.get(&idx));
            count += 1;
            for a in (0..rank).rev() {
                idx[a] += 1;
                if idx[a] < self.cutoff {
                    break;
                }
                idx[a] = 0;
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        let data = match &self.storage {
            Storage::Dense(d) | Storage::Banded(d) => d,
        };
        data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        let data = match &self.storage {
            Storage::Dense(d) | Storage::Banded(d) => d,
        };
        data.iter().fold(0.0, |a, z| a.max(z.norm()))
    }

    /// Number of entries that `rule` requires to vanish but are not exactly zero.
    pub fn selection_violations(&self, rule: SelectionRule) -> usize {
        if rule == SelectionRule::None {
            return 0;
        }
        if rule == self.rule && self.is_banded() {
            return 0;
        }
        let mut found = 0;
        self.for_each(|idx, v| {
            if !rule.allows(idx) && v != ZERO {
                found += 1;
            }
        });
        found
    }

    /// Largest entrywise deviation between two tensors of equal shape.
    pub fn max_abs_diff(&self, other: &GateTensor) -> Result<f64> {
        self.check_same_shape(other)?;
        if let (Storage::Dense(a), Storage::Dense(b)) = (&self.storage, &other.storage) {
            return Ok(a.iter().zip(b).fold(0.0, |acc, (x, y)| acc.max((x - y).norm())));
        }
        if let (Storage::Banded(a), Storage::Banded(b)) = (&self.storage, &other.storage) {
            if self.rule == other.rule {
                return Ok(a.iter().zip(b).fold(0.0, |acc, (x, y)| acc.max((x - y).norm())));
            }
        }
        let mut worst = 0.0_f64;
        self.for_each(|idx, v| worst = worst.max((v - other.get(idx)).norm()));
        Ok(worst)
    }

    pub fn check_same_shape(&self, other: &GateTensor) -> Result<()> {
        if self.modes != other.modes || self.cutoff != other.cutoff {
            return Err(Error::DimensionMismatch(format!(
                "tensor shapes differ: {} modes at cutoff {} vs {} modes at cutoff {}",
                self.modes, self.cutoff, other.modes, other.cutoff
            )));
        }
        Ok(())
    }

    /// The `N^l x N^l` matrix `<m|G|n>` with row-major flattening of `m` and `n`.
    pub fn to_matrix(&self) -> Result<CMatrix> {
        let dim = self.hilbert_dim();
        let data = self.to_dense()?;
        Ok(CMatrix::from_shape_vec((dim, dim), data).expect("dense length is dim^2"))
    }

    /// Keeps only indices below `cutoff` on every axis.
    pub fn truncate(&self, cutoff: usize) -> Result<GateTensor> {
        if cutoff == 0 || cutoff > self.cutoff {
            return Err(Error::InvalidParameter {
                name: "cutoff",
                reason: format!("cannot truncate cutoff {} to {cutoff}", self.cutoff),
            });
        }
        if let Storage::Banded(d) = &self.storage {
            let n = self.cutoff;
            let mut out = vec![ZERO; cutoff * cutoff * cutoff];
            for m in 0..cutoff {
                for nn in 0..cutoff {
                    for p in 0..cutoff {
                        // slots without a valid q stay zero so band buffers compare slotwise
                        if band_q(self.rule, cutoff, m, nn, p).is_some() {
                            out[(m * cutoff + nn) * cutoff + p] = d[(m * n + nn) * n + p];
                        }
                    }
                }
            }
            return Ok(GateTensor::banded_unchecked(cutoff, self.rule, out));
        }
        let mut data = Vec::with_capacity(cutoff.pow(2 * self.modes as u32));
        let rank = self.rank();
        let mut idx = vec![0usize; rank];
        loop {
            data.push(self.get(&idx));
            let mut a = rank;
            loop {
                if a == 0 {
                    return Ok(GateTensor::dense_unchecked(self.modes, cutoff, data, self.rule));
                }
                a -= 1;
                idx[a] += 1;
                if idx[a] < cutoff {
                    break;
                }
                idx[a] = 0;
            }
        }
    }

    /// Euclidean norm of each column `G|n>` of the matrix view.
    pub fn column_norms(&self) -> Result<Vec<f64>> {
        let dim = self.hilbert_dim();
        let mut norms = vec![0.0; dim];
        match &self.storage {
            Storage::Dense(d) => {
                for (i, z) in d.iter().enumerate() {
                    norms[i % dim] += z.norm_sqr();
                }
            }
            Storage::Banded(_) => {
                let n = self.cutoff;
                self.for_each_band(|_, _, p, q, v| norms[p * n + q] += v.norm_sqr());
            }
        }
        Ok(norms.into_iter().map(f64::sqrt).collect())
    }

    /// Applies `f(idx, value)` to every entry, keeping the storage layout.
    pub(crate) fn map_indexed(&self, mut f: impl FnMut(&[usize], C64) -> C64) -> GateTensor {
        match &self.storage {
            Storage::Dense(d) => {
                let mut out = Vec::with_capacity(d.len());
                self.for_each(|idx, v| out.push(f(idx, v)));
                GateTensor::dense_unchecked(self.modes, self.cutoff, out, self.rule)
            }
            Storage::Banded(d) => {
                let n = self.cutoff;
                let mut out = d.clone();
                self.for_each_band(|m, nn, p, q, v| out[(m * n + nn) * n + p] = f(&[m, nn, p, q], v));
                GateTensor::banded_unchecked(n, self.rule, out)
            }
        }
    }

    /// Writes the FGT1 container: magic, `l`, `N`, rule tag, then the dense payload.
    pub fn write_fgt1<W: Write>(&self, mut w: W) -> Result<()> {
        let data = self.to_dense()?;
        w.write_all(MAGIC)?;
        w.write_all(&(self.modes as u32).to_le_bytes())?;
        w.write_all(&(self.cutoff as u32).to_le_bytes())?;
        w.write_all(&self.rule.tag().to_le_bytes())?;
        let mut buf = Vec::with_capacity(data.len() * 16);
        for z in &data {
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn to_fgt1_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        self.write_fgt1(&mut out)?;
        Ok(out)
    }

    pub fn read_fgt1<R: Read>(mut r: R) -> Result<GateTensor> {
        let mut header = [0u8; FGT1_HEADER_LEN];
        r.read_exact(&mut header).map_err(|_| Error::Format("truncated FGT1 header".into()))?;
        if &header[..4] != MAGIC {
            return Err(Error::Format("missing FGT1 magic".into()));
        }
        let word = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().expect("4 bytes"));
        let (modes, cutoff) = (word(4) as usize, word(8) as usize);
        let rule = SelectionRule::from_tag(word(12))?;
        let len = dense_len(modes, cutoff);
        BuildOptions::default().check(len)?;
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() as u128 != len * 16 {
            return Err(Error::Format(format!("payload has {} bytes, expected {}", bytes.len(), len * 16)));
        }
        let data = bytes
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
                let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
                C64::new(re, im)
            })
            .collect();
        GateTensor::from_dense(modes, cutoff, data, rule)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_fgt1(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<GateTensor> {
        let file = std::fs::File::open(path)?;
        Self::read_fgt1(std::io::BufReader::new(file))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sample_dense() -> GateTensor {
        let data: Vec<C64> = (0..16).map(|i| c(i as f64, -(i as f64) / 3.0)).collect();
        GateTensor::from_dense(1, 4, data, SelectionRule::None).unwrap()
    }

    #[test]
    fn row_major_layout() {
        let t = sample_dense();
        assert_eq!(t.get(&[2, 3]), c(11.0, -11.0 / 3.0));
        assert_eq!(t.get(&[4, 0]), c(0.0, 0.0));
        assert_eq!(t.get_signed(&[-1, 0]), c(0.0, 0.0));
    }

    #[test]
    fn fgt1_round_trip_is_bitwise() {
        let t = sample_dense();
        let bytes = t.to_fgt1_bytes().unwrap();
        assert_eq!(&bytes[..4], b"FGT1");
        assert_eq!(bytes.len(), FGT1_HEADER_LEN + 16 * 16);
        let back = GateTensor::read_fgt1(&bytes[..]).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn fgt1_rejects_corruption() {
        let mut bytes = sample_dense().to_fgt1_bytes().unwrap();
        bytes.pop();
        assert!(matches!(GateTensor::read_fgt1(&bytes[..]), Err(Error::Format(_))));
        bytes[0] = b'X';
        assert!(matches!(GateTensor::read_fgt1(&bytes[..]), Err(Error::Format(_))));
    }

    #[test]
    fn fgt1_rejects_payload_breaking_its_rule() {
        let t = sample_dense();
        let mut bytes = t.to_fgt1_bytes().unwrap();
        bytes[12] = 1;
        assert!(matches!(GateTensor::read_fgt1(&bytes[..]), Err(Error::SelectionRuleMismatch { .. })));
    }

    #[test]
    fn banded_access_and_densify_agree() {
        let n = 3;
        let data: Vec<C64> = (0..n * n * n).map(|i| c(1.0 + i as f64, 0.0)).collect();
        let t = GateTensor::banded_unchecked(n, SelectionRule::ParticleConserving, data);
        let dense = GateTensor::from_dense(2, n, t.to_dense().unwrap(), SelectionRule::ParticleConserving).unwrap();
        assert_eq!(t.max_abs_diff(&dense).unwrap(), 0.0);
        assert_eq!(t.get(&[1, 1, 2, 0]), t.banded_data().unwrap()[(3 + 1) * 3 + 2]);
        assert_eq!(t.get(&[1, 1, 2, 1]), c(0.0, 0.0));
        assert_eq!(dense.selection_violations(SelectionRule::ParticleConserving), 0);
        assert_eq!(t.column_norms().unwrap(), dense.column_norms().unwrap());
    }

    #[test]
    fn truncation_keeps_leading_block() {
        let t = sample_dense().truncate(2).unwrap();
        assert_eq!(t.cutoff(), 2);
        assert_eq!(t.get(&[1, 1]), c(5.0, -5.0 / 3.0));
    }

    #[test]
    fn budget_is_enforced() {
        let opts = BuildOptions { element_budget: 10 };
        assert!(matches!(opts.check(11), Err(Error::BudgetExceeded { requested: 11, budget: 10 })));
        assert!(opts.check(10).is_ok());
    }

    #[test]
    fn multi_index_validation() {
        let k = MultiIndex::new(&[1, 2], &[0, 3], 4).unwrap();
        assert_eq!(k.entries(), &[1, 2, 0, 3]);
        assert_eq!(k.bra(), &[1, 2]);
        assert!(MultiIndex::new(&[4], &[0], 4).is_err());
        assert!(MultiIndex::new(&[1, 0], &[0], 4).is_err());
    }

    #[test]
    fn rule_predicates() {
        assert!(SelectionRule::ParticleConserving.allows(&[1, 2, 3, 0]));
        assert!(!SelectionRule::ParticleConserving.allows(&[1, 2, 3, 1]));
        assert!(SelectionRule::PairDifference.allows(&[3, 1, 2, 0]));
        assert!(!SelectionRule::PairDifference.allows(&[3, 1, 2, 1]));
    }
}
