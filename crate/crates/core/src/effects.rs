//! Weighted factorial effects `I(B) = Σ_{A⊂D∖B} p_B(A) Δ_B τ(A)`.
//!
//! Two routes compute the same number: the recursive form above, which expands
//! `Δ_B` for every admissible `A`, and the signed linear form
//! `I(B) = Σ_{A⊂D} (-1)^{|B∖A|} p_B(A∖B) τ(A)`, which is one pass over the
//! lattice per `B` and is the default. Möbius and equal weights additionally have
//! `O(d 2^d)` whole-table sweeps.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::lattice::{
    self, delta_unchecked, dual, full_bits, LatticeError, LatticeMap, SubsetMask, REL_TOL,
};
use crate::weights::{WeightFamily, WeightKind};

#[derive(Debug, Error)]
pub enum EffectError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("weights have dimension {weights}, map has dimension {map}")]
    DimensionMismatch { weights: usize, map: usize },
    #[error("τ(∅) must be 0, found {0}")]
    NonzeroEmptySet(f64),
    #[error("covariance of length {found} does not match {expected} subsets")]
    CovarianceShape { expected: usize, found: usize },
}

fn check_dims(tau: &LatticeMap, w: &WeightFamily) -> Result<(), EffectError> {
    if tau.dim() != w.dim() {
        return Err(EffectError::DimensionMismatch {
            weights: w.dim(),
            map: tau.dim(),
        });
    }
    Ok(())
}

#[inline]
fn sign(exponent: u32) -> f64 {
    if exponent.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Recursive form: weighted average of the `Δ_B` differences.
pub fn weighted_effect(
    tau: &LatticeMap,
    b: SubsetMask,
    w: &WeightFamily,
) -> Result<f64, EffectError> {
    check_dims(tau, w)?;
    b.ensure_dim(tau.dim())?;
    let values = tau.values();
    Ok(b
        .complement()
        .subsets()
        .map(|a| {
            let p = w.weight_bits(b.bits(), a.bits());
            if p == 0.0 {
                0.0
            } else {
                p * delta_unchecked(values, b.bits(), a.bits())
            }
        })
        .sum())
}

/// Linear form: `Σ_{A⊂D} (-1)^{|B∖A|} p_B(A∖B) τ(A)`.
pub fn weighted_effect_linear(
    tau: &LatticeMap,
    b: SubsetMask,
    w: &WeightFamily,
) -> Result<f64, EffectError> {
    check_dims(tau, w)?;
    b.ensure_dim(tau.dim())?;
    Ok(linear_unchecked(tau.values(), b.bits(), w))
}

fn linear_unchecked(values: &[f64], b: u32, w: &WeightFamily) -> f64 {
    values
        .iter()
        .enumerate()
        .map(|(a, &t)| {
            let a = a as u32;
            sign((b & !a).count_ones()) * w.weight_bits(b, a & !b) * t
        })
        .sum()
}

/// All `2^d` effects of a map under one weight family.
#[derive(Debug, Clone)]
pub struct EffectTable {
    pub effects: LatticeMap,
    /// Propagated Monte Carlo standard errors, when the map was estimated.
    pub std_errors: Option<LatticeMap>,
    pub weights_id: String,
    pub source_id: String,
}

impl EffectTable {
    pub fn dim(&self) -> usize {
        self.effects.dim()
    }

    pub fn get(&self, b: SubsetMask) -> f64 {
        self.effects.get(b)
    }

    pub fn std_error(&self, b: SubsetMask) -> f64 {
        self.std_errors.as_ref().map_or(0.0, |s| s.get(b))
    }

    /// Singleton effects `I({1}), ..., I({d})`.
    pub fn singletons(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.effects.at(1 << i)).collect()
    }
}

/// Effect table of `tau`, tagged with source `"tau"`.
pub fn effect_table(tau: &LatticeMap, w: &WeightFamily) -> Result<EffectTable, EffectError> {
    effect_table_tagged(tau, w, "tau")
}

/// Effect table of the dual map `τ*`.
pub fn dual_effect_table(tau: &LatticeMap, w: &WeightFamily) -> Result<EffectTable, EffectError> {
    effect_table_tagged(&dual(tau), w, "dual(tau)")
}

pub fn effect_table_tagged(
    tau: &LatticeMap,
    w: &WeightFamily,
    source_id: &str,
) -> Result<EffectTable, EffectError> {
    check_dims(tau, w)?;
    let effects = match w.kind() {
        WeightKind::Mobius => lattice::mobius_transform(tau),
        WeightKind::Uniform => uniform_table(tau),
        _ => generic_table(tau, w),
    };
    Ok(EffectTable {
        effects,
        std_errors: None,
        weights_id: w.id(),
        source_id: source_id.to_string(),
    })
}

/// Linear form evaluated for every `B`, in parallel with deterministic ordering.
pub fn generic_table(tau: &LatticeMap, w: &WeightFamily) -> LatticeMap {
    let values = tau.values();
    let effects: Vec<f64> = (0..values.len() as u32)
        .into_par_iter()
        .map(|b| linear_unchecked(values, b, w))
        .collect();
    LatticeMap::new(tau.dim(), effects).expect("same shape as input")
}

// Equal weights: I(B) = (-1)^{|B|} 2^{|B|-d} H(B), H the Walsh-Hadamard transform.
fn uniform_table(tau: &LatticeMap) -> LatticeMap {
    let dim = tau.dim();
    let mut h = tau.values().to_vec();
    for bit in 0..dim {
        let step = 1usize << bit;
        for block in h.chunks_exact_mut(step * 2) {
            let (lo, hi) = block.split_at_mut(step);
            for (l, r) in lo.iter_mut().zip(hi) {
                let (x, y) = (*l, *r);
                *l = x + y;
                *r = x - y;
            }
        }
    }
    for (b, v) in h.iter_mut().enumerate() {
        let order = (b as u32).count_ones();
        let scale = 1.0 / (1u64 << (dim as u32 - order)) as f64;
        *v *= sign(order) * scale;
    }
    LatticeMap::new(dim, h).expect("same shape as input")
}

/// Coefficients `c` with `I(B) = Σ_A c[A] τ(A)`; with `dual` set, the
/// coefficients of `I*(B)` expressed in the primal values `τ(A)`.
pub fn effect_coefficients(w: &WeightFamily, b: SubsetMask, dual: bool) -> Vec<f64> {
    let dim = w.dim();
    let size = 1usize << dim;
    let direct: Vec<f64> = (0..size as u32)
        .map(|a| sign((b.bits() & !a).count_ones()) * w.weight_bits(b.bits(), a & !b.bits()))
        .collect();
    if !dual {
        return direct;
    }
    // τ*(A) = τ(D) - τ(D∖A)
    let full = full_bits(dim) as usize;
    let mut out = vec![0.0; size];
    for (a, &c) in direct.iter().enumerate() {
        out[full] += c;
        out[full ^ a] -= c;
    }
    out
}

/// Sampling covariance of an estimated map, over all `2^d` subsets.
#[derive(Debug, Clone)]
pub enum Covariance {
    /// Independent estimates: one variance per subset.
    Diagonal(Vec<f64>),
    /// Row-major `2^d × 2^d` matrix.
    Full(Vec<f64>),
}

impl Covariance {
    /// `cᵀ Σ c`.
    pub fn quadratic_form(&self, c: &[f64]) -> f64 {
        match self {
            Covariance::Diagonal(var) => c.iter().zip(var).map(|(x, v)| x * x * v).sum(),
            Covariance::Full(matrix) => {
                let n = c.len();
                c.iter()
                    .enumerate()
                    .filter(|(_, x)| **x != 0.0)
                    .map(|(i, x)| {
                        let row = &matrix[i * n..(i + 1) * n];
                        x * row.iter().zip(c).map(|(m, y)| m * y).sum::<f64>()
                    })
                    .sum()
            }
        }
    }

    fn check(&self, dim: usize) -> Result<(), EffectError> {
        let size = 1usize << dim;
        let (expected, found) = match self {
            Covariance::Diagonal(v) => (size, v.len()),
            Covariance::Full(m) => (size * size, m.len()),
        };
        if expected == found {
            Ok(())
        } else {
            Err(EffectError::CovarianceShape { expected, found })
        }
    }
}

/// Attaches propagated standard errors to `table`, whose effects must have been
/// computed from the map with covariance `cov` (or from its dual when `dual`).
pub fn attach_std_errors(
    mut table: EffectTable,
    w: &WeightFamily,
    cov: &Covariance,
    dual: bool,
) -> Result<EffectTable, EffectError> {
    let dim = table.dim();
    cov.check(dim)?;
    let se: Vec<f64> = (0..1u32 << dim)
        .into_par_iter()
        .map(|b| {
            let c = effect_coefficients(w, SubsetMask::raw(b, dim), dual);
            cov.quadratic_form(&c).max(0.0).sqrt()
        })
        .collect();
    table.std_errors = Some(LatticeMap::new(dim, se)?);
    Ok(table)
}

/// Outcome of an algebraic verifier.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub check: String,
    pub residual: f64,
    #[serde(serialize_with = "crate::report::serialize_opt_mask")]
    pub argmax: Option<SubsetMask>,
    pub tolerance: f64,
    pub passed: bool,
}

impl ResidualReport {
    fn new(check: &str, residual: f64, argmax: Option<SubsetMask>, scale: f64) -> Self {
        let tolerance = REL_TOL * scale.max(1.0);
        Self {
            check: check.to_string(),
            residual,
            argmax,
            tolerance,
            passed: residual <= tolerance,
        }
    }
}

/// `max_A |Σ_{B⊂A} I(B) - τ(A)|`.
pub fn verify_sobol_decomposition(
    tau: &LatticeMap,
    table: &EffectTable,
) -> Result<ResidualReport, EffectError> {
    let rebuilt = lattice::mobius_inverse(&table.effects);
    let (residual, at) = rebuilt.max_abs_diff(tau)?;
    let argmax = (residual > 0.0).then_some(at);
    Ok(ResidualReport::new(
        "sobol_decomposition",
        residual,
        argmax,
        tau.max_abs(),
    ))
}

/// `|Σ_i I({i}) - τ(D)|`; requires `τ(∅) = 0`.
pub fn verify_shapley_sum(
    tau: &LatticeMap,
    table: &EffectTable,
) -> Result<ResidualReport, EffectError> {
    if tau.empty_value() != 0.0 {
        return Err(EffectError::NonzeroEmptySet(tau.empty_value()));
    }
    tau.ensure_same_dim(&table.effects)?;
    let sum: f64 = table.singletons().iter().sum();
    let residual = (sum - tau.full_value()).abs();
    Ok(ResidualReport::new(
        "shapley_sum",
        residual,
        None,
        tau.max_abs(),
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct DualityRow {
    #[serde(serialize_with = "crate::report::serialize_mask")]
    pub b: SubsetMask,
    pub effect: f64,
    pub dual_effect: f64,
    pub discrepancy: f64,
}

/// Primal versus dual effects for every `B`. Only odd-order rows carry a
/// guarantee (under palindromic weights); even-order rows are informational.
#[derive(Debug, Clone, Serialize)]
pub struct SelfDualityReport {
    pub rows: Vec<DualityRow>,
    pub max_odd_discrepancy: f64,
    pub max_even_discrepancy: f64,
    pub tolerance: f64,
    pub odd_passed: bool,
}

pub fn self_duality_report(
    tau: &LatticeMap,
    w: &WeightFamily,
) -> Result<SelfDualityReport, EffectError> {
    let primal = effect_table(tau, w)?;
    let dual_table = dual_effect_table(tau, w)?;
    let rows: Vec<DualityRow> = primal
        .effects
        .iter()
        .zip(dual_table.effects.values())
        .map(|((b, effect), &dual_effect)| DualityRow {
            b,
            effect,
            dual_effect,
            discrepancy: (effect - dual_effect).abs(),
        })
        .collect();
    let max_of = |odd: bool| {
        rows.iter()
            .filter(|r| (r.b.len() % 2 == 1) == odd)
            .fold(0.0f64, |m, r| m.max(r.discrepancy))
    };
    let max_odd_discrepancy = max_of(true);
    let max_even_discrepancy = max_of(false);
    let tolerance = REL_TOL * tau.max_abs().max(1.0);
    Ok(SelfDualityReport {
        rows,
        max_odd_discrepancy,
        max_even_discrepancy,
        tolerance,
        odd_passed: max_odd_discrepancy <= tolerance,
    })
}

/// Searches the indicator maps `τ_C = 1{· = C}`, `C ≠ ∅`, for one where
/// `I*(B) ≠ I(B)`. Effects are linear in `τ` and the indicators span every map
/// with `τ(∅) = 0`, so `None` means `I(B)` is self-dual for all such maps.
pub fn find_self_duality_counterexample(
    w: &WeightFamily,
    b: SubsetMask,
) -> Result<Option<SubsetMask>, EffectError> {
    let dim = w.dim();
    b.ensure_dim(dim)?;
    let primal = effect_coefficients(w, b, false);
    let dual_c = effect_coefficients(w, b, true);
    Ok((1..primal.len())
        .find(|&c| !lattice::approx_eq(primal[c], dual_c[c]))
        .map(|c| SubsetMask::raw(c as u32, dim)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn m(indices: &[usize], dim: usize) -> SubsetMask {
        SubsetMask::from_indices(indices, dim).unwrap()
    }

    fn random_map(rng: &mut ChaCha8Rng, dim: usize) -> LatticeMap {
        LatticeMap::from_fn(dim, |a| if a.is_empty() { 0.0 } else { rng.random_range(0.0..10.0) })
            .unwrap()
    }

    fn families(dim: usize) -> Vec<WeightFamily> {
        vec![
            WeightFamily::uniform(dim).unwrap(),
            WeightFamily::mobius(dim).unwrap(),
            WeightFamily::shapley(dim).unwrap(),
        ]
    }

    #[test]
    fn main_effect_is_average_increment() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = 4;
        let tau = random_map(&mut rng, d);
        let w = WeightFamily::uniform(d).unwrap();
        for i in 1..=d {
            let b = m(&[i], d);
            let expected: f64 = b
                .complement()
                .subsets()
                .map(|a| tau.get(a.union(b)) - tau.get(a))
                .sum::<f64>()
                / (1u32 << (d - 1)) as f64;
            assert!(lattice::approx_eq(weighted_effect(&tau, b, &w).unwrap(), expected));
        }
    }

    #[test]
    fn zero_map_has_zero_effects() {
        let tau = LatticeMap::zeros(3).unwrap();
        for w in families(3) {
            for b in SubsetMask::all(3).unwrap() {
                assert_eq!(weighted_effect(&tau, b, &w).unwrap(), 0.0);
                assert_eq!(weighted_effect_linear(&tau, b, &w).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn additive_map_has_no_interaction() {
        let c = [1.0, 2.0, 3.0];
        let tau = LatticeMap::from_fn(3, |a| a.indices().map(|i| c[i - 1] * c[i - 1]).sum())
            .unwrap();
        let w = WeightFamily::uniform(3).unwrap();
        assert_eq!(weighted_effect(&tau, m(&[1, 2], 3), &w).unwrap(), 0.0);
        let table = effect_table(&tau, &w).unwrap();
        assert_eq!(table.singletons(), vec![1.0, 4.0, 9.0]);
        for (b, v) in table.effects.iter().filter(|(b, _)| b.len() >= 2) {
            assert_eq!(v, 0.0, "B={b}");
        }
    }

    #[test]
    fn empty_set_effect_is_weighted_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let tau = random_map(&mut rng, 3);
        for w in families(3) {
            let empty = SubsetMask::empty(3).unwrap();
            let expected: f64 = tau.iter().map(|(a, t)| w.weight(empty, a) * t).sum();
            assert!(lattice::approx_eq(
                weighted_effect_linear(&tau, empty, &w).unwrap(),
                expected
            ));
        }
    }

    #[test]
    fn fast_tables_match_linear_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for d in 1..=8 {
            let tau = random_map(&mut rng, d);
            for w in families(d) {
                let fast = effect_table(&tau, &w).unwrap().effects;
                let slow = generic_table(&tau, &w);
                for ((b, x), y) in fast.iter().zip(slow.values()) {
                    assert!(lattice::approx_eq(x, *y), "d={d} {} B={b}", w.id());
                }
            }
        }
    }

    #[test]
    fn mobius_table_reduces_to_transform() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let tau = random_map(&mut rng, 5);
        let w = WeightFamily::mobius(5).unwrap();
        let transform = lattice::mobius_transform(&tau);
        for b in SubsetMask::all(5).unwrap() {
            assert!(lattice::approx_eq(
                weighted_effect_linear(&tau, b, &w).unwrap(),
                transform.get(b)
            ));
        }
    }

    #[test]
    fn verifiers() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let tau = random_map(&mut rng, 4);
        let mob = effect_table(&tau, &WeightFamily::mobius(4).unwrap()).unwrap();
        assert!(verify_sobol_decomposition(&tau, &mob).unwrap().passed);
        let sh = effect_table(&tau, &WeightFamily::shapley(4).unwrap()).unwrap();
        assert!(verify_shapley_sum(&tau, &sh).unwrap().passed);

        // pure two-way interaction: Möbius singletons are 0 but τ(D) = 1
        let pair = LatticeMap::from_fn(2, |a| if a.len() >= 2 { 1.0 } else { 0.0 }).unwrap();
        let t = effect_table(&pair, &WeightFamily::mobius(2).unwrap()).unwrap();
        let r = verify_shapley_sum(&pair, &t).unwrap();
        assert!(!r.passed);
        assert_eq!(r.residual, 1.0);

        // equal weights do not decompose a top-only map
        let top = LatticeMap::indicator(SubsetMask::full(2).unwrap());
        let u = effect_table(&top, &WeightFamily::uniform(2).unwrap()).unwrap();
        let r = verify_sobol_decomposition(&top, &u).unwrap();
        assert!(!r.passed && r.argmax.is_some());

        let bad = LatticeMap::new(2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            verify_shapley_sum(&bad, &u),
            Err(EffectError::NonzeroEmptySet(_))
        ));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let tau = LatticeMap::zeros(3).unwrap();
        let w = WeightFamily::uniform(2).unwrap();
        assert!(matches!(
            effect_table(&tau, &w),
            Err(EffectError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn coefficients_reproduce_effects() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let tau = random_map(&mut rng, 4);
        for w in families(4) {
            let primal = effect_table(&tau, &w).unwrap();
            let dual_t = dual_effect_table(&tau, &w).unwrap();
            for b in SubsetMask::all(4).unwrap() {
                let dot = |c: Vec<f64>| c.iter().zip(tau.values()).map(|(x, y)| x * y).sum();
                assert!(lattice::approx_eq(dot(effect_coefficients(&w, b, false)), primal.get(b)));
                assert!(lattice::approx_eq(dot(effect_coefficients(&w, b, true)), dual_t.get(b)));
            }
        }
    }

    #[test]
    fn std_error_propagation_diagonal() {
        // Möbius singletons of the dual are τ(D) - τ(D∖j): variance is the sum
        let d = 3;
        let var: Vec<f64> = (0..8).map(|i| 0.1 * i as f64).collect();
        let tau = LatticeMap::zeros(d).unwrap();
        let w = WeightFamily::mobius(d).unwrap();
        let table = dual_effect_table(&tau, &w).unwrap();
        let table = attach_std_errors(table, &w, &Covariance::Diagonal(var.clone()), true).unwrap();
        for j in 1..=d {
            let b = m(&[j], d);
            let expected = (var[7] + var[b.complement().index()]).sqrt();
            assert!((table.std_error(b) - expected).abs() < 1e-15);
        }
        // full covariance with the same diagonal gives the same answer
        let mut full = vec![0.0; 64];
        for i in 0..8 {
            full[i * 8 + i] = var[i];
        }
        let t2 = attach_std_errors(dual_effect_table(&tau, &w).unwrap(), &w, &Covariance::Full(full), true)
            .unwrap();
        assert_eq!(t2.std_errors, table.std_errors);
        assert!(attach_std_errors(
            dual_effect_table(&tau, &w).unwrap(),
            &w,
            &Covariance::Diagonal(vec![0.0; 3]),
            true
        )
        .is_err());
    }

    #[test]
    fn counterexample_search() {
        let d = 3;
        let mob = WeightFamily::mobius(d).unwrap();
        assert!(find_self_duality_counterexample(&mob, m(&[1], d)).unwrap().is_some());
        let sh = WeightFamily::shapley(d).unwrap();
        for b in SubsetMask::all(d).unwrap().filter(|b| b.len() % 2 == 1) {
            assert!(find_self_duality_counterexample(&sh, b).unwrap().is_none());
        }
    }
}
