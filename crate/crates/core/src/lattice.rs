//! Exact algebra over the powerset of the input index set `D = {1, ..., d}`.
//!
//! Subsets are stored as bit patterns: input `i` (1-based) occupies bit `i - 1`.
//! A [`LatticeMap`] is a dense array of `2^d` reals indexed by that bit pattern,
//! so index order is the binary order with input 1 as the least significant bit.
//! Reports that follow the factorial-design layout (input 1 as the leftmost,
//! most significant column) convert through [`SubsetMask::design_index`].
//!
//! The transforms are in-place bit-plane sweeps, `O(d 2^d)`.

use std::fmt;

use thiserror::Error;

/// Hard upper bound on the number of inputs (`2^24` reals is about 128 MB).
pub const MAX_DIM: usize = 24;

/// Default cap used by configuration-driven runs; may be raised up to [`MAX_DIM`].
pub const DEFAULT_MAX_DIM: usize = 15;

/// Relative tolerance for floating comparisons of lattice quantities.
pub const REL_TOL: f64 = 1e-10;

/// Absolute floor paired with [`REL_TOL`].
pub const ABS_TOL: f64 = 1e-12;

/// `|a - b| <= max(ABS_TOL, REL_TOL * max(|a|, |b|))`.
pub fn approx_eq(a: f64, b: f64) -> bool {
    let scale = a.abs().max(b.abs());
    (a - b).abs() <= ABS_TOL.max(REL_TOL * scale)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("dimension {0} outside 1..={MAX_DIM}")]
    DimensionOutOfRange(usize),
    #[error("bits {bits:#b} exceed dimension {dim}")]
    BitsOutOfRange { bits: u32, dim: usize },
    #[error("input index {index} outside 1..={dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("subsets {a} and {b} overlap")]
    Overlap { a: SubsetMask, b: SubsetMask },
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("lattice map of dimension {dim} needs {expected} values, got {found}")]
    LengthMismatch {
        dim: usize,
        expected: usize,
        found: usize,
    },
    #[error("cannot parse subset literal {0:?}")]
    Parse(String),
}

pub(crate) fn check_dim(dim: usize) -> Result<(), LatticeError> {
    if (1..=MAX_DIM).contains(&dim) {
        Ok(())
    } else {
        Err(LatticeError::DimensionOutOfRange(dim))
    }
}

/// A subset `A` of `D = {1, ..., d}`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubsetMask {
    bits: u32,
    dim: u8,
}

impl SubsetMask {
    pub fn new(bits: u32, dim: usize) -> Result<Self, LatticeError> {
        check_dim(dim)?;
        if bits >> dim != 0 {
            return Err(LatticeError::BitsOutOfRange { bits, dim });
        }
        Ok(Self {
            bits,
            dim: dim as u8,
        })
    }

    /// Crate-internal constructor for bits already known to fit.
    #[inline]
    pub(crate) fn raw(bits: u32, dim: usize) -> Self {
        debug_assert!(dim <= MAX_DIM && bits >> dim == 0);
        Self {
            bits,
            dim: dim as u8,
        }
    }

    pub fn empty(dim: usize) -> Result<Self, LatticeError> {
        Self::new(0, dim)
    }

    pub fn full(dim: usize) -> Result<Self, LatticeError> {
        check_dim(dim)?;
        Ok(Self::raw(full_bits(dim), dim))
    }

    /// The singleton `{index}` with a 1-based index.
    pub fn singleton(index: usize, dim: usize) -> Result<Self, LatticeError> {
        Self::from_indices(&[index], dim)
    }

    /// Builds a subset from 1-based input indices. Repeats are harmless.
    pub fn from_indices(indices: &[usize], dim: usize) -> Result<Self, LatticeError> {
        check_dim(dim)?;
        let mut bits = 0u32;
        for &index in indices {
            if index == 0 || index > dim {
                return Err(LatticeError::IndexOutOfRange { index, dim });
            }
            bits |= 1 << (index - 1);
        }
        Ok(Self::raw(bits, dim))
    }

    /// Parses a set literal such as `{1,3}` or `{}` (1-based indices).
    pub fn parse(literal: &str, dim: usize) -> Result<Self, LatticeError> {
        let trimmed = literal.trim();
        let inner = trimmed
            .strip_prefix('{')
            .and_then(|s| s.strip_suffix('}'))
            .ok_or_else(|| LatticeError::Parse(literal.to_string()))?;
        let mut indices = Vec::new();
        for part in inner.split(',') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let index: usize = part
                .parse()
                .map_err(|_| LatticeError::Parse(literal.to_string()))?;
            indices.push(index);
        }
        if inner.split(',').filter(|p| p.trim().is_empty()).count() > usize::from(indices.is_empty())
        {
            // stray commas such as "{1,,2}" or "{,}"
            return Err(LatticeError::Parse(literal.to_string()));
        }
        Self::from_indices(&indices, dim)
    }

    #[inline]
    pub fn bits(self) -> u32 {
        self.bits
    }

    #[inline]
    pub fn index(self) -> usize {
        self.bits as usize
    }

    #[inline]
    pub fn dim(self) -> usize {
        self.dim as usize
    }

    /// Cardinality `|A|`.
    #[inline]
    pub fn len(self) -> usize {
        self.bits.count_ones() as usize
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.bits == 0
    }

    #[inline]
    pub fn is_full(self) -> bool {
        self.bits == full_bits(self.dim())
    }

    /// Membership of a 1-based input index.
    #[inline]
    pub fn contains(self, index: usize) -> bool {
        index >= 1 && index <= self.dim() && self.bits & (1 << (index - 1)) != 0
    }

    #[inline]
    pub fn union(self, other: Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        Self::raw(self.bits | other.bits, self.dim())
    }

    #[inline]
    pub fn intersection(self, other: Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        Self::raw(self.bits & other.bits, self.dim())
    }

    /// `self \ other`.
    #[inline]
    pub fn difference(self, other: Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        Self::raw(self.bits & !other.bits, self.dim())
    }

    /// `D \ self`.
    #[inline]
    pub fn complement(self) -> Self {
        Self::raw(full_bits(self.dim()) & !self.bits, self.dim())
    }

    #[inline]
    pub fn is_subset_of(self, other: Self) -> bool {
        self.bits & !other.bits == 0
    }

    #[inline]
    pub fn is_disjoint(self, other: Self) -> bool {
        self.bits & other.bits == 0
    }

    /// 1-based indices in increasing order.
    pub fn indices(self) -> impl Iterator<Item = usize> {
        let bits = self.bits;
        (0..self.dim()).filter(move |i| bits & (1 << i) != 0).map(|i| i + 1)
    }

    /// Every subset of `self`, in increasing bit order, `∅` first.
    pub fn subsets(self) -> Subsets {
        Subsets {
            mask: self.bits,
            next: Some(0),
            dim: self.dim,
        }
    }

    /// Every subset of `D` in binary index order.
    pub fn all(dim: usize) -> Result<impl Iterator<Item = SubsetMask>, LatticeError> {
        check_dim(dim)?;
        Ok((0..1u32 << dim).map(move |bits| SubsetMask::raw(bits, dim)))
    }

    /// Row position in the factorial-design layout, where input 1 is the most
    /// significant fluctuation column and input `d` the least significant.
    pub fn design_index(self) -> usize {
        reverse_low_bits(self.bits, self.dim()) as usize
    }

    /// Inverse of [`SubsetMask::design_index`].
    pub fn from_design_index(row: usize, dim: usize) -> Result<Self, LatticeError> {
        check_dim(dim)?;
        if row >> dim != 0 {
            return Err(LatticeError::BitsOutOfRange {
                bits: row as u32,
                dim,
            });
        }
        Ok(Self::raw(reverse_low_bits(row as u32, dim), dim))
    }

    /// Fluctuation indicators `[x_1, ..., x_d]`, 1 when input `i` is in the subset.
    pub fn indicators(self) -> Vec<u8> {
        (1..=self.dim()).map(|i| u8::from(self.contains(i))).collect()
    }

    pub(crate) fn ensure_dim(self, dim: usize) -> Result<(), LatticeError> {
        if self.dim() == dim {
            Ok(())
        } else {
            Err(LatticeError::DimensionMismatch {
                expected: dim,
                found: self.dim(),
            })
        }
    }
}

impl fmt::Display for SubsetMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, i) in self.indices().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{i}")?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for SubsetMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SubsetMask({self}, d={})", self.dim)
    }
}

/// Iterator over the subsets of a mask.
pub struct Subsets {
    mask: u32,
    next: Option<u32>,
    dim: u8,
}

impl Iterator for Subsets {
    type Item = SubsetMask;

    fn next(&mut self) -> Option<SubsetMask> {
        let current = self.next?;
        self.next = if current == self.mask {
            None
        } else {
            // smallest subset of `mask` greater than `current`
            Some((current | !self.mask).wrapping_add(1) & self.mask)
        };
        Some(SubsetMask::raw(current, self.dim as usize))
    }
}

#[inline]
pub(crate) fn full_bits(dim: usize) -> u32 {
    if dim >= 32 {
        u32::MAX
    } else {
        (1u32 << dim) - 1
    }
}

fn reverse_low_bits(bits: u32, dim: usize) -> u32 {
    bits.reverse_bits() >> (32 - dim)
}

/// A real-valued map on the powerset of `D`, stored densely in binary index order.
#[derive(Clone, PartialEq)]
pub struct LatticeMap {
    dim: usize,
    values: Vec<f64>,
}

impl LatticeMap {
    pub fn new(dim: usize, values: Vec<f64>) -> Result<Self, LatticeError> {
        check_dim(dim)?;
        let expected = 1usize << dim;
        if values.len() != expected {
            return Err(LatticeError::LengthMismatch {
                dim,
                expected,
                found: values.len(),
            });
        }
        Ok(Self { dim, values })
    }

    pub fn zeros(dim: usize) -> Result<Self, LatticeError> {
        check_dim(dim)?;
        Ok(Self {
            dim,
            values: vec![0.0; 1 << dim],
        })
    }

    pub fn from_fn(dim: usize, f: impl FnMut(SubsetMask) -> f64) -> Result<Self, LatticeError> {
        let values = SubsetMask::all(dim)?.map(f).collect();
        Ok(Self { dim, values })
    }

    /// The indicator map `τ_C(A) = 1{A = C}`.
    pub fn indicator(target: SubsetMask) -> Self {
        let mut values = vec![0.0; 1 << target.dim()];
        values[target.index()] = 1.0;
        Self {
            dim: target.dim(),
            values,
        }
    }

    /// Builds a map from values listed in factorial-design row order.
    pub fn from_design_order(dim: usize, rows: &[f64]) -> Result<Self, LatticeError> {
        check_dim(dim)?;
        let expected = 1usize << dim;
        if rows.len() != expected {
            return Err(LatticeError::LengthMismatch {
                dim,
                expected,
                found: rows.len(),
            });
        }
        let mut values = vec![0.0; expected];
        for (row, &v) in rows.iter().enumerate() {
            values[SubsetMask::from_design_index(row, dim)?.index()] = v;
        }
        Ok(Self { dim, values })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Panics if `mask` has a different dimension.
    #[inline]
    pub fn get(&self, mask: SubsetMask) -> f64 {
        assert_eq!(mask.dim(), self.dim, "subset dimension mismatch");
        self.values[mask.index()]
    }

    #[inline]
    pub fn at(&self, bits: u32) -> f64 {
        self.values[bits as usize]
    }

    pub fn empty_value(&self) -> f64 {
        self.values[0]
    }

    pub fn full_value(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Values in factorial-design row order.
    pub fn design_order(&self) -> Vec<f64> {
        (0..self.values.len())
            .map(|row| self.values[reverse_low_bits(row as u32, self.dim) as usize])
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (SubsetMask, f64)> + '_ {
        let dim = self.dim;
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &v)| (SubsetMask::raw(i as u32, dim), v))
    }

    /// True when `τ(∅) = 0` and every value is nonnegative.
    pub fn is_sensitivity_map(&self) -> bool {
        self.values[0] == 0.0 && self.values.iter().all(|&v| v >= 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest `|self(A) - other(A)|` and its subset.
    pub fn max_abs_diff(&self, other: &LatticeMap) -> Result<(f64, SubsetMask), LatticeError> {
        self.ensure_same_dim(other)?;
        let mut worst = (0.0, SubsetMask::raw(0, self.dim));
        for (i, (a, b)) in self.values.iter().zip(&other.values).enumerate() {
            let diff = (a - b).abs();
            if diff > worst.0 || diff.is_nan() {
                worst = (diff, SubsetMask::raw(i as u32, self.dim));
            }
        }
        Ok(worst)
    }

    /// Values relabelled by a permutation of inputs: `result(π(A)) = self(A)`,
    /// where `perm[i - 1]` is the image of input `i` (1-based).
    pub fn relabel(&self, perm: &[usize]) -> Result<Self, LatticeError> {
        check_permutation(perm, self.dim)?;
        let mut values = vec![0.0; self.values.len()];
        for (bits, &v) in self.values.iter().enumerate() {
            values[permute_bits(bits as u32, perm) as usize] = v;
        }
        Ok(Self {
            dim: self.dim,
            values,
        })
    }

    pub(crate) fn ensure_same_dim(&self, other: &LatticeMap) -> Result<(), LatticeError> {
        if self.dim == other.dim {
            Ok(())
        } else {
            Err(LatticeError::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            })
        }
    }

}

impl fmt::Debug for LatticeMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map()
            .entries(self.iter().map(|(m, v)| (m.to_string(), v)))
            .finish()
    }
}

pub(crate) fn check_permutation(perm: &[usize], dim: usize) -> Result<(), LatticeError> {
    if perm.len() != dim {
        return Err(LatticeError::DimensionMismatch {
            expected: dim,
            found: perm.len(),
        });
    }
    let mut seen = 0u32;
    for &p in perm {
        if p == 0 || p > dim || seen & (1 << (p - 1)) != 0 {
            return Err(LatticeError::IndexOutOfRange { index: p, dim });
        }
        seen |= 1 << (p - 1);
    }
    Ok(())
}

pub(crate) fn permute_bits(bits: u32, perm: &[usize]) -> u32 {
    perm.iter()
        .enumerate()
        .filter(|(i, _)| bits & (1 << i) != 0)
        .fold(0, |acc, (_, &p)| acc | 1 << (p - 1))
}

/// `Δ_B τ(A) = Σ_{A ⊂ C ⊂ A∪B} (-1)^{|B| - |C∖A|} τ(C)` for disjoint `A`, `B`.
pub fn delta(tau: &LatticeMap, b: SubsetMask, a: SubsetMask) -> Result<f64, LatticeError> {
    b.ensure_dim(tau.dim)?;
    a.ensure_dim(tau.dim)?;
    if !a.is_disjoint(b) {
        return Err(LatticeError::Overlap { a, b });
    }
    Ok(delta_unchecked(tau.values(), b.bits(), a.bits()))
}

#[inline]
pub(crate) fn delta_unchecked(values: &[f64], b: u32, a: u32) -> f64 {
    let order = b.count_ones();
    let mut sum = 0.0;
    let mut s = 0u32;
    loop {
        let term = values[(a | s) as usize];
        if (order - s.count_ones()).is_multiple_of(2) {
            sum += term;
        } else {
            sum -= term;
        }
        if s == b {
            break;
        }
        s = (s | !b).wrapping_add(1) & b;
    }
    sum
}

/// `I(B) = Σ_{A⊂B} (-1)^{|B∖A|} τ(A)`, by an in-place sweep per bit plane.
pub fn mobius_transform(tau: &LatticeMap) -> LatticeMap {
    let mut values = tau.values.clone();
    for bit in 0..tau.dim {
        let step = 1usize << bit;
        for block in values.chunks_exact_mut(step * 2) {
            let (lo, hi) = block.split_at_mut(step);
            for (l, h) in lo.iter().zip(hi) {
                *h -= *l;
            }
        }
    }
    LatticeMap {
        dim: tau.dim,
        values,
    }
}

/// `τ(B) = Σ_{A⊂B} I(A)`.
pub fn mobius_inverse(effects: &LatticeMap) -> LatticeMap {
    let mut values = effects.values.clone();
    for bit in 0..effects.dim {
        let step = 1usize << bit;
        for block in values.chunks_exact_mut(step * 2) {
            let (lo, hi) = block.split_at_mut(step);
            for (l, h) in lo.iter().zip(hi) {
                *h += *l;
            }
        }
    }
    LatticeMap {
        dim: effects.dim,
        values,
    }
}

/// `τ*(A) = τ(D) - τ(D∖A)`.
pub fn dual(tau: &LatticeMap) -> LatticeMap {
    let full = tau.full_value();
    let last = tau.values.len() - 1;
    let values = (0..tau.values.len())
        .map(|a| full - tau.values[last ^ a])
        .collect();
    LatticeMap {
        dim: tau.dim,
        values,
    }
}

/// `τ(B | A) = τ((B ∩ Ā) ∪ A) - τ(A)`; for disjoint sets this is `τ(A∪B) - τ(A)`.
pub fn conditional_effect(
    tau: &LatticeMap,
    b: SubsetMask,
    a: SubsetMask,
) -> Result<f64, LatticeError> {
    b.ensure_dim(tau.dim)?;
    a.ensure_dim(tau.dim)?;
    let joined = b.difference(a).union(a);
    Ok(tau.get(joined) - tau.get(a))
}
