//! Weight families `p_B` over the subset lattice.
//!
//! For every `B ⊂ D`, `p_B` is a probability vector over the subsets `A ⊂ D∖B`;
//! `p_B(A)` is taken to be zero when `A` meets `B`. The three named families
//! (equal weights, Möbius point mass, Shapley) are evaluated from closed forms.
//! Custom families are materialized densely, one row of `2^{d-|B|}` entries per
//! `B`, and validated on construction.

use std::fmt;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::lattice::{check_dim, check_permutation, full_bits, LatticeError, SubsetMask, MAX_DIM};

/// Absolute tolerance on `Σ_A p_B(A) = 1` and on the Shapley-sum conditions.
pub const WEIGHT_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum WeightError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("weights do not sum to one for {}", format_failures(.0))]
    Normalization(Vec<(SubsetMask, f64)>),
    #[error("negative weight {weight} for B={b}, A={a}")]
    Negative {
        b: SubsetMask,
        a: SubsetMask,
        weight: f64,
    },
    #[error("non-finite weight for B={b}, A={a}")]
    NonFinite { b: SubsetMask, a: SubsetMask },
    #[error("inadmissible pair B={b}, A={a}: A must lie in D∖B")]
    Inadmissible { b: SubsetMask, a: SubsetMask },
    #[error("duplicate entry for B={b}, A={a}")]
    Duplicate { b: SubsetMask, a: SubsetMask },
    #[error("weight file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("weight file declares dim {declared}, expected {expected}")]
    DimMismatch { declared: usize, expected: usize },
    #[error("cannot read weight file: {0}")]
    Io(#[from] std::io::Error),
}

fn format_failures(failures: &[(SubsetMask, f64)]) -> String {
    failures
        .iter()
        .map(|(b, sum)| format!("B={b} (sum {sum})"))
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    Uniform,
    Mobius,
    Shapley,
    Custom,
}

#[derive(Clone)]
enum Repr {
    Uniform,
    Mobius,
    Shapley(Vec<Vec<f64>>),
    // rows[B] indexed by the compressed position of A inside D∖B
    Custom { name: String, rows: Vec<Vec<f64>> },
}

/// A validated family of weights `{p_B : B ⊂ D}`.
#[derive(Clone)]
pub struct WeightFamily {
    dim: usize,
    repr: Repr,
}

impl fmt::Debug for WeightFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "WeightFamily({}, d={})", self.id(), self.dim)
    }
}

impl WeightFamily {
    /// Equal weights `p_B(A) = 2^{-(d-|B|)}`: the classical factorial effects.
    pub fn uniform(dim: usize) -> Result<Self, WeightError> {
        check_dim(dim)?;
        Ok(Self {
            dim,
            repr: Repr::Uniform,
        })
    }

    /// Point mass `p_B(A) = 1{A = ∅}`: the Möbius transform.
    pub fn mobius(dim: usize) -> Result<Self, WeightError> {
        check_dim(dim)?;
        Ok(Self {
            dim,
            repr: Repr::Mobius,
        })
    }

    /// `p_B(A) = 1 / ((n+1) C(n, |A|))` with `n = |D∖B|`: the Shapley value.
    pub fn shapley(dim: usize) -> Result<Self, WeightError> {
        check_dim(dim)?;
        let table = (0..=dim)
            .map(|n| {
                (0..=n)
                    .map(|k| 1.0 / ((n as f64 + 1.0) * binomial(n, k)))
                    .collect()
            })
            .collect();
        Ok(Self {
            dim,
            repr: Repr::Shapley(table),
        })
    }

    /// Builds a family from explicit `(B, A, weight)` entries; missing entries are zero.
    pub fn custom(
        dim: usize,
        entries: impl IntoIterator<Item = (SubsetMask, SubsetMask, f64)>,
    ) -> Result<Self, WeightError> {
        Self::custom_named("custom", dim, entries)
    }

    pub fn custom_named(
        name: &str,
        dim: usize,
        entries: impl IntoIterator<Item = (SubsetMask, SubsetMask, f64)>,
    ) -> Result<Self, WeightError> {
        check_dim(dim)?;
        let full = full_bits(dim);
        let mut rows: Vec<Vec<f64>> = (0..=full)
            .map(|b| vec![0.0; 1 << (dim - b.count_ones() as usize)])
            .collect();
        let mut seen: Vec<Vec<bool>> = rows.iter().map(|r| vec![false; r.len()]).collect();
        for (b, a, weight) in entries {
            b.ensure_dim(dim)?;
            a.ensure_dim(dim)?;
            if !a.is_disjoint(b) {
                return Err(WeightError::Inadmissible { b, a });
            }
            if !weight.is_finite() {
                return Err(WeightError::NonFinite { b, a });
            }
            if weight < 0.0 {
                return Err(WeightError::Negative { b, a, weight });
            }
            let pos = compress(a.bits(), full & !b.bits());
            let slot = &mut seen[b.index()][pos];
            if *slot {
                return Err(WeightError::Duplicate { b, a });
            }
            *slot = true;
            rows[b.index()][pos] = weight;
        }
        let failures: Vec<_> = rows
            .iter()
            .enumerate()
            .filter_map(|(b, row)| {
                let sum: f64 = row.iter().sum();
                ((sum - 1.0).abs() > WEIGHT_TOL).then(|| (SubsetMask::raw(b as u32, dim), sum))
            })
            .collect();
        if !failures.is_empty() {
            return Err(WeightError::Normalization(failures));
        }
        Ok(Self {
            dim,
            repr: Repr::Custom {
                name: name.to_string(),
                rows,
            },
        })
    }

    /// Materializes `p_B(A) = f(B, A)` for every admissible pair and validates it.
    pub fn from_fn(
        name: &str,
        dim: usize,
        mut f: impl FnMut(SubsetMask, SubsetMask) -> f64,
    ) -> Result<Self, WeightError> {
        check_dim(dim)?;
        let mut entries = Vec::new();
        for b in SubsetMask::all(dim)? {
            for a in b.complement().subsets() {
                entries.push((b, a, f(b, a)));
            }
        }
        Self::custom_named(name, dim, entries)
    }

    /// Marginal contributions along a fixed ordering of the inputs.
    ///
    /// For a singleton `{i}` all mass sits on the set of inputs preceding `i`
    /// in `order` (1-based indices); every other `B` gets the point mass on `∅`.
    /// The singleton effects then telescope to `τ(D)`, so the family satisfies
    /// the Shapley-sum conditions without being the Shapley family. With
    /// `order = [3, 2, 1]` this is the standard three-input counterexample.
    pub fn ordered_marginal(order: &[usize]) -> Result<Self, WeightError> {
        let dim = order.len();
        check_dim(dim)?;
        check_permutation(order, dim)?;
        let mut entries = Vec::new();
        let mut before = SubsetMask::empty(dim)?;
        for &i in order {
            let b = SubsetMask::singleton(i, dim)?;
            entries.push((b, before, 1.0));
            before = before.union(b);
        }
        for b in SubsetMask::all(dim)?.filter(|b| b.len() != 1) {
            entries.push((b, SubsetMask::empty(dim)?, 1.0));
        }
        let name = format!(
            "ordered({})",
            order.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",")
        );
        Self::custom_named(&name, dim, entries)
    }

    /// Parses the plain-text `(B, A, weight)` table; see [`parse_weight_table`].
    pub fn from_weight_file(path: &Path, dim: usize) -> Result<Self, WeightError> {
        let text = std::fs::read_to_string(path)?;
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "custom".into());
        let entries = parse_weight_table(&text, dim)?;
        Self::custom_named(&format!("custom:{name}"), dim, entries)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> WeightKind {
        match self.repr {
            Repr::Uniform => WeightKind::Uniform,
            Repr::Mobius => WeightKind::Mobius,
            Repr::Shapley(_) => WeightKind::Shapley,
            Repr::Custom { .. } => WeightKind::Custom,
        }
    }

    /// Provenance tag recorded in effect tables.
    pub fn id(&self) -> String {
        match &self.repr {
            Repr::Uniform => "uniform".into(),
            Repr::Mobius => "mobius".into(),
            Repr::Shapley(_) => "shapley".into(),
            Repr::Custom { name, .. } => name.clone(),
        }
    }

    /// `p_B(A)`, zero when `A ⊄ D∖B`.
    pub fn weight(&self, b: SubsetMask, a: SubsetMask) -> f64 {
        assert!(
            b.dim() == self.dim && a.dim() == self.dim,
            "subset dimension mismatch"
        );
        self.weight_bits(b.bits(), a.bits())
    }

    #[inline]
    pub(crate) fn weight_bits(&self, b: u32, a: u32) -> f64 {
        if a & b != 0 {
            return 0.0;
        }
        let free = self.dim - b.count_ones() as usize;
        match &self.repr {
            Repr::Uniform => 1.0 / (1u64 << free) as f64,
            Repr::Mobius => {
                if a == 0 {
                    1.0
                } else {
                    0.0
                }
            }
            Repr::Shapley(table) => table[free][a.count_ones() as usize],
            Repr::Custom { rows, .. } => {
                rows[b as usize][compress(a, full_bits(self.dim) & !b)]
            }
        }
    }

    /// Every admissible `(B, A, p_B(A))`, `B` in binary order then `A`.
    pub fn entries(&self) -> Vec<(SubsetMask, SubsetMask, f64)> {
        let dim = self.dim;
        let mut out = Vec::new();
        for b in (0..=full_bits(dim)).map(|b| SubsetMask::raw(b, dim)) {
            for a in b.complement().subsets() {
                out.push((b, a, self.weight(b, a)));
            }
        }
        out
    }

    /// Per-`B` normalization deviations and negative entries.
    pub fn validate(&self) -> ValidationReport {
        let dim = self.dim;
        let mut rows = Vec::with_capacity(1 << dim);
        let mut negatives = Vec::new();
        for b in (0..=full_bits(dim)).map(|b| SubsetMask::raw(b, dim)) {
            let mut sum = 0.0;
            for a in b.complement().subsets() {
                let w = self.weight(b, a);
                if w < 0.0 || !w.is_finite() {
                    negatives.push((b, a, w));
                }
                sum += w;
            }
            rows.push(RowDeviation {
                b,
                sum,
                deviation: (sum - 1.0).abs(),
            });
        }
        ValidationReport::from_parts(rows, negatives)
    }

    /// Evaluates the three groups of conditions under which the singleton
    /// effects sum to `τ(D)` for every map with `τ(∅) = 0`:
    ///
    /// * `Σ_i p_i(∅) = 1`,
    /// * `Σ_i (-1)^{1-|A∩{i}|} p_i(A∖{i}) = 0` for every `A` other than `∅` and `D`,
    /// * `Σ_i p_i(D∖{i}) = 1`.
    ///
    /// The middle group is written over `2^D ∖ {∅ ∪ D}` in some sources; it is
    /// read here as all subsets except `∅` and `D`.
    pub fn check_shapley_condition(&self) -> ShapleyConditionReport {
        let dim = self.dim;
        let full = full_bits(dim);
        let singles: Vec<u32> = (0..dim).map(|i| 1u32 << i).collect();
        let empty_sum: f64 = singles.iter().map(|&s| self.weight_bits(s, 0)).sum();
        let full_sum: f64 = singles.iter().map(|&s| self.weight_bits(s, full & !s)).sum();
        let mut middle_max = 0.0;
        let mut middle_arg = None;
        for a in 1..full {
            let l: f64 = singles
                .iter()
                .map(|&s| {
                    let w = self.weight_bits(s, a & !s);
                    if a & s != 0 {
                        w
                    } else {
                        -w
                    }
                })
                .sum();
            if l.abs() > middle_max {
                middle_max = l.abs();
                middle_arg = Some(SubsetMask::raw(a, dim));
            }
        }
        let passed = (empty_sum - 1.0).abs() <= WEIGHT_TOL
            && (full_sum - 1.0).abs() <= WEIGHT_TOL
            && middle_max <= WEIGHT_TOL;
        ShapleyConditionReport {
            empty_sum,
            full_sum,
            max_middle_residual: middle_max,
            worst_middle: middle_arg,
            tolerance: WEIGHT_TOL,
            passed,
        }
    }

    /// Largest `|p_B(A∖B) - p_B(D∖(A∪B))|` over nonempty `A`, with its argmax.
    ///
    /// Zero means the odd-order effect `I(B)` is self-dual for every map.
    pub fn palindromic_deviation(&self, b: SubsetMask) -> (f64, Option<SubsetMask>) {
        let dim = self.dim;
        let full = full_bits(dim);
        let mut worst = (0.0, None);
        for a in 1..=full {
            let lhs = self.weight_bits(b.bits(), a & !b.bits());
            let rhs = self.weight_bits(b.bits(), full & !(a | b.bits()));
            let dev = (lhs - rhs).abs();
            if dev > worst.0 {
                worst = (dev, Some(SubsetMask::raw(a, dim)));
            }
        }
        worst
    }

    /// Serializes the family in the plain-text weight-table format.
    pub fn to_weight_table(&self) -> String {
        let mut out = format!("# weight family {}\ndim {}\n# B\tA\tweight\n", self.id(), self.dim);
        for (b, a, w) in self.entries() {
            if w != 0.0 {
                out.push_str(&format!("{b}\t{a}\t{w}\n"));
            }
        }
        out
    }
}

/// Packs the bits of `value` selected by `mask` into the low bits.
#[inline]
fn compress(value: u32, mask: u32) -> usize {
    let mut out = 0usize;
    let mut k = 0;
    let mut m = mask;
    while m != 0 {
        let low = m & m.wrapping_neg();
        if value & low != 0 {
            out |= 1 << k;
        }
        k += 1;
        m &= m - 1;
    }
    out
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for j in 0..k {
        // exact for n <= MAX_DIM
        acc = acc * (n - j) as u64 / (j as u64 + 1);
    }
    acc as f64
}

#[derive(Debug, Clone, Serialize)]
pub struct RowDeviation {
    #[serde(serialize_with = "crate::report::serialize_mask")]
    pub b: SubsetMask,
    pub sum: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub rows: Vec<RowDeviation>,
    pub max_deviation: f64,
    #[serde(serialize_with = "crate::report::serialize_opt_mask")]
    pub worst: Option<SubsetMask>,
    #[serde(skip)]
    pub negative_entries: Vec<(SubsetMask, SubsetMask, f64)>,
    pub negative_count: usize,
    pub tolerance: f64,
    pub passed: bool,
}

impl ValidationReport {
    fn from_parts(rows: Vec<RowDeviation>, negatives: Vec<(SubsetMask, SubsetMask, f64)>) -> Self {
        let worst_row = rows
            .iter()
            .max_by(|x, y| x.deviation.total_cmp(&y.deviation));
        let max_deviation = worst_row.map_or(0.0, |r| r.deviation);
        let worst = worst_row.filter(|r| r.deviation > 0.0).map(|r| r.b);
        let passed = max_deviation <= WEIGHT_TOL && negatives.is_empty();
        Self {
            negative_count: negatives.len(),
            rows,
            max_deviation,
            worst,
            negative_entries: negatives,
            tolerance: WEIGHT_TOL,
            passed,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ShapleyConditionReport {
    /// `Σ_i p_i(∅)`, must be 1.
    pub empty_sum: f64,
    /// `Σ_i p_i(D∖{i})`, must be 1.
    pub full_sum: f64,
    pub max_middle_residual: f64,
    #[serde(serialize_with = "crate::report::serialize_opt_mask")]
    pub worst_middle: Option<SubsetMask>,
    pub tolerance: f64,
    pub passed: bool,
}

/// Parses a weight table: one `B A weight` row per line.
///
/// Sets are brace literals of 1-based indices (`{1,3}`, `{}` for the empty set),
/// weights are decimals or fractions (`1/6`). `#` starts a comment. An optional
/// `dim N` line must agree with `dim`.
pub fn parse_weight_table(
    text: &str,
    dim: usize,
) -> Result<Vec<(SubsetMask, SubsetMask, f64)>, WeightError> {
    if dim == 0 || dim > MAX_DIM {
        return Err(LatticeError::DimensionOutOfRange(dim).into());
    }
    let mut entries = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix("dim") {
            let rest = rest.trim().trim_start_matches('=').trim();
            let declared: usize = rest.parse().map_err(|_| WeightError::Parse {
                line,
                message: format!("bad dim directive {content:?}"),
            })?;
            if declared != dim {
                return Err(WeightError::DimMismatch {
                    declared,
                    expected: dim,
                });
            }
            continue;
        }
        let parse_err = |message: String| WeightError::Parse { line, message };
        let (b_lit, rest) = take_set(content).ok_or_else(|| parse_err("expected B set".into()))?;
        let (a_lit, rest) = take_set(rest).ok_or_else(|| parse_err("expected A set".into()))?;
        let b = SubsetMask::parse(b_lit, dim).map_err(|e| parse_err(e.to_string()))?;
        let a = SubsetMask::parse(a_lit, dim).map_err(|e| parse_err(e.to_string()))?;
        let weight = parse_number(rest.trim().trim_start_matches(',').trim())
            .ok_or_else(|| parse_err(format!("bad weight {:?}", rest.trim())))?;
        entries.push((b, a, weight));
    }
    Ok(entries)
}

fn take_set(s: &str) -> Option<(&str, &str)> {
    let s = s.trim_start().trim_start_matches(',').trim_start();
    if !s.starts_with('{') {
        return None;
    }
    let end = s.find('}')?;
    Some((&s[..=end], &s[end + 1..]))
}

/// Decimal or `p/q` fraction.
pub(crate) fn parse_number(s: &str) -> Option<f64> {
    if let Some((p, q)) = s.split_once('/') {
        let p: f64 = p.trim().parse().ok()?;
        let q: f64 = q.trim().parse().ok()?;
        (q != 0.0).then_some(p / q)
    } else {
        s.parse().ok()
    }
}
