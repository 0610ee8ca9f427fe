//! Monte Carlo estimation of sensitivity maps.
//!
//! Pick-freeze estimates `E ψ(f(X), f(X^{∖A}))`; the double loop estimates
//! `E min_θ E(ψ(f(X), θ) | X_{D∖A})`. All randomness is keyed by
//! `(seed, stream, row)`, so results do not depend on thread scheduling.
//!
//! Standard errors assume finite fourth moments of the output. Heavy-tailed
//! models are not detected.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::divergence::{Contrast, Divergence};
use crate::effects::Covariance;
use crate::input::{InputDistribution, InputError};
use crate::lattice::{check_dim, LatticeError, LatticeMap, SubsetMask};
use crate::models::{exact_tau, Model, ModelError, ModelSpec};

#[derive(Debug, Error)]
pub enum EstimateError {
    #[error(transparent)]
    Input(#[from] InputError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("model has {model} inputs but the distribution has {inputs}")]
    DimensionMismatch { model: usize, inputs: usize },
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("subset {subset}: model returned {value} at row {row}")]
    NonFiniteOutput { subset: SubsetMask, row: usize, value: f64 },
    #[error("{0}")]
    Unsupported(String),
    #[error("{} subset(s) failed, first: {}", failures.len(), failures[0].message)]
    Partial { failures: Vec<SubsetFailure> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    PickFreeze,
    DoubleLoopContrast,
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    #[serde(serialize_with = "crate::report::serialize_mask")]
    pub subset: SubsetMask,
    pub estimate: f64,
    pub std_error: f64,
    pub n: usize,
    pub n_inner: Option<usize>,
    pub seed: u64,
    pub kind: EstimatorKind,
}

impl EstimateReport {
    fn empty_set(subset: SubsetMask, n: usize, n_inner: Option<usize>, seed: u64, kind: EstimatorKind) -> Self {
        Self {
            subset,
            estimate: 0.0,
            std_error: 0.0,
            n,
            n_inner,
            seed,
            kind,
        }
    }
}

fn check_setup<M: Model + ?Sized>(model: &M, dist: &InputDistribution, a: SubsetMask) -> Result<(), EstimateError> {
    if model.dim() != dist.dim() {
        return Err(EstimateError::DimensionMismatch {
            model: model.dim(),
            inputs: dist.dim(),
        });
    }
    a.ensure_dim(dist.dim())?;
    Ok(())
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt() / n.sqrt())
}

fn first_failure(subset: SubsetMask, terms: Vec<Result<f64, f64>>) -> Result<Vec<f64>, EstimateError> {
    let mut out = Vec::with_capacity(terms.len());
    for (row, t) in terms.into_iter().enumerate() {
        match t {
            Ok(v) => out.push(v),
            Err(value) => return Err(EstimateError::NonFiniteOutput { subset, row, value }),
        }
    }
    Ok(out)
}

/// Evaluates `f` on the base rows `X` drawn with `seed`.
fn base_outputs<M: Model + ?Sized>(model: &M, dist: &InputDistribution, n: usize, seed: u64) -> Vec<Result<f64, f64>> {
    let d = dist.dim();
    (0..n)
        .into_par_iter()
        .map_init(
            || vec![0.0; d],
            |x, k| {
                dist.sample_row(seed, k as u64, x);
                let y = model.evaluate(x);
                if y.is_finite() {
                    Ok(y)
                } else {
                    Err(y)
                }
            },
        )
        .collect()
}

/// Per-row `ψ(f(x_k), f(x_k^{∖A}))`, with `x_k` drawn from `sample_seed` and
/// the refreshed columns from `resample_seed`. `base` optionally carries
/// precomputed `f(x_k)`.
#[allow(clippy::too_many_arguments)]
fn pick_freeze_terms<M: Model + ?Sized>(
    model: &M,
    dist: &InputDistribution,
    div: Divergence,
    a: SubsetMask,
    n: usize,
    sample_seed: u64,
    resample_seed: u64,
    base: Option<&[f64]>,
) -> Result<Vec<f64>, EstimateError> {
    let sampler = dist.conditional_sampler(a)?;
    let d = dist.dim();
    let terms: Vec<Result<f64, f64>> = (0..n)
        .into_par_iter()
        .map_init(
            || (vec![0.0; d], vec![0.0; d]),
            |(x, xr), k| {
                dist.sample_row(sample_seed, k as u64, x);
                let y = match base {
                    Some(b) => b[k],
                    None => model.evaluate(x),
                };
                if !y.is_finite() {
                    return Err(y);
                }
                sampler.resample_row(x, resample_seed, 0, k as u64, xr);
                let yr = model.evaluate(xr);
                if !yr.is_finite() {
                    return Err(yr);
                }
                Ok(div.eval_unchecked(y, yr))
            },
        )
        .collect();
    first_failure(a, terms)
}

/// Pick-freeze estimate of `τ(A) = E ψ(f(X), f(X^{∖A}))` from `n` pairs.
pub fn estimate_tau<M: Model + ?Sized>(
    model: &M,
    dist: &InputDistribution,
    div: Divergence,
    a: SubsetMask,
    n: usize,
    seed: u64,
) -> Result<EstimateReport, EstimateError> {
    check_setup(model, dist, a)?;
    if n < 2 {
        return Err(EstimateError::TooFewSamples(n));
    }
    if a.is_empty() {
        return Ok(EstimateReport::empty_set(a, n, None, seed, EstimatorKind::PickFreeze));
    }
    let terms = pick_freeze_terms(model, dist, div, a, n, seed, seed, None)?;
    let (estimate, std_error) = mean_and_se(&terms);
    Ok(EstimateReport {
        subset: a,
        estimate,
        std_error,
        n,
        n_inner: None,
        seed,
        kind: EstimatorKind::PickFreeze,
    })
}

/// `max(32, ⌊√n_outer⌋)`.
pub fn default_inner(n_outer: usize) -> usize {
    (n_outer as f64).sqrt().floor().max(32.0) as usize
}

/// Double-loop estimate of `τ̃(A) = E min_θ E(ψ(f(X), θ) | X_{D∖A})`.
///
/// The mean contrast uses the unbiased inner variance, `m/(m-1)` times the
/// plug-in minimum; see [`estimate_tau_contrast_with`] for the plain plug-in.
pub fn estimate_tau_contrast<M: Model + ?Sized>(
    model: &M,
    dist: &InputDistribution,
    contrast: Contrast,
    a: SubsetMask,
    n_outer: usize,
    n_inner: usize,
    seed: u64,
) -> Result<EstimateReport, EstimateError> {
    estimate_tau_contrast_with(model, dist, contrast, a, n_outer, n_inner, seed, true)
}

#[allow(clippy::too_many_arguments)]
pub fn estimate_tau_contrast_with<M: Model + ?Sized>(
    model: &M,
    dist: &InputDistribution,
    contrast: Contrast,
    a: SubsetMask,
    n_outer: usize,
    n_inner: usize,
    seed: u64,
    small_sample_correction: bool,
) -> Result<EstimateReport, EstimateError> {
    check_setup(model, dist, a)?;
    if n_outer < 2 {
        return Err(EstimateError::TooFewSamples(n_outer));
    }
    if n_inner < 2 {
        return Err(EstimateError::TooFewSamples(n_inner));
    }
    let kind = EstimatorKind::DoubleLoopContrast;
    if a.is_empty() {
        return Ok(EstimateReport::empty_set(a, n_outer, Some(n_inner), seed, kind));
    }
    let sampler = dist.conditional_sampler(a)?;
    let d = dist.dim();
    let scale = match (contrast, small_sample_correction) {
        (Contrast::Mean, true) => n_inner as f64 / (n_inner - 1) as f64,
        _ => 1.0,
    };
    let values: Vec<Result<f64, f64>> = (0..n_outer)
        .into_par_iter()
        .map_init(
            || (vec![0.0; d], vec![0.0; d], vec![0.0; n_inner], vec![0.0; n_inner]),
            |(x, xr, ys, scratch), k| {
                dist.sample_row(seed, k as u64, x);
                for (j, y) in ys.iter_mut().enumerate() {
                    sampler.resample_row(x, seed, k as u64 + 1, j as u64, xr);
                    *y = model.evaluate(xr);
                    if !y.is_finite() {
                        return Err(*y);
                    }
                }
                scratch.copy_from_slice(ys);
                let theta = contrast.minimizer_unchecked(scratch);
                Ok(scale * contrast.contrast_value_unchecked(ys, theta))
            },
        )
        .collect();
    let values = first_failure(a, values)?;
    let (estimate, std_error) = mean_and_se(&values);
    Ok(EstimateReport {
        subset: a,
        estimate,
        std_error,
        n: n_outer,
        n_inner: Some(n_inner),
        seed,
        kind,
    })
}

/// How each subset outcome is measured.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Divergence(Divergence),
    Contrast(Contrast),
}

impl Method {
    pub fn name(&self) -> String {
        match self {
            Method::Divergence(d) => d.name().to_string(),
            Method::Contrast(c) => format!("contrast:{}", c.name()),
        }
    }
}

/// Per-subset sample sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Budget {
    /// Pick-freeze pairs, or outer draws for the double loop.
    pub n: usize,
    /// Inner replicates; `None` selects [`default_inner`].
    pub n_inner: Option<usize>,
    /// Reuse one base sample `X` across all subsets (pick-freeze only).
    pub shared_base: bool,
}

impl Budget {
    pub fn per_subset(n: usize) -> Self {
        Self {
            n,
            n_inner: None,
            shared_base: false,
        }
    }

    /// Splits `total` model evaluations evenly over the `2^d - 1` non-empty subsets.
    pub fn from_total(total: usize, dim: usize, method: Method, shared_base: bool) -> Self {
        let subsets = (1usize << dim) - 1;
        let n = match method {
            Method::Divergence(_) if shared_base => total / (subsets + 1),
            Method::Divergence(_) => total / (2 * subsets),
            Method::Contrast(_) => {
                let per = total / subsets;
                let mut n = (per / 32).max(2);
                while n > 2 && n * default_inner(n) > per {
                    n -= 1;
                }
                n
            }
        };
        Self {
            n,
            n_inner: None,
            shared_base,
        }
    }

    pub fn inner(&self) -> usize {
        self.n_inner.unwrap_or_else(|| default_inner(self.n))
    }
}

/// Seed of subset `index` under `master`.
pub fn subset_seed(master: u64, index: usize) -> u64 {
    let mut z = master ^ (index as u64).wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetFailure {
    #[serde(serialize_with = "crate::report::serialize_mask")]
    pub subset: SubsetMask,
    pub message: String,
}

/// A full estimated map. Failed subsets hold `NaN` and appear in `failures`.
#[derive(Debug, Clone)]
pub struct SensitivityEstimate {
    pub map: LatticeMap,
    /// One report per subset, in lattice index order; `None` where estimation failed.
    pub reports: Vec<Option<EstimateReport>>,
    pub failures: Vec<SubsetFailure>,
    pub covariance: Covariance,
    pub method: Method,
    pub budget: Budget,
    pub seed: u64,
}

impl SensitivityEstimate {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn std_errors(&self) -> LatticeMap {
        let dim = self.map.dim();
        LatticeMap::from_fn(dim, |a| {
            self.reports[a.index()].as_ref().map_or(f64::NAN, |r| r.std_error)
        })
        .expect("dimension already validated")
    }

    pub fn report(&self, a: SubsetMask) -> Option<&EstimateReport> {
        self.reports[a.index()].as_ref()
    }

    /// Errors with every failure when any subset failed.
    pub fn into_complete(self) -> Result<Self, EstimateError> {
        if self.is_complete() {
            Ok(self)
        } else {
            Err(EstimateError::Partial {
                failures: self.failures,
            })
        }
    }
}

/// Estimates `τ(A)` for every `A ⊂ D`. `τ(∅) = 0` is set exactly.
///
/// Setup errors (dimension mismatch, missing conditional sampler) are
/// returned directly; per-subset evaluation failures are recorded in
/// [`SensitivityEstimate::failures`].
pub fn estimate_sensitivity_map<M: Model + ?Sized>(
    model: &M,
    dist: &InputDistribution,
    method: Method,
    budget: Budget,
    seed: u64,
) -> Result<SensitivityEstimate, EstimateError> {
    let dim = dist.dim();
    check_dim(dim)?;
    check_setup(model, dist, SubsetMask::empty(dim)?)?;
    if budget.n < 2 {
        return Err(EstimateError::TooFewSamples(budget.n));
    }
    let size = 1usize << dim;
    for a in SubsetMask::all(dim)? {
        dist.conditional_sampler(a)?;
    }

    let mut reports: Vec<Option<EstimateReport>> = vec![None; size];
    let mut failures = Vec::new();
    let mut terms_by_subset: Vec<Option<Vec<f64>>> = vec![None; size];

    let base = match (method, budget.shared_base) {
        (Method::Divergence(_), true) => Some(base_outputs(model, dist, budget.n, seed)),
        (Method::Contrast(_), true) => {
            return Err(EstimateError::Unsupported(
                "a shared base sample is only available for divergence methods".into(),
            ))
        }
        _ => None,
    };
    let base = match base {
        Some(b) => match first_failure(SubsetMask::empty(dim)?, b) {
            Ok(v) => Some(v),
            Err(e) => {
                let message = e.to_string();
                for a in SubsetMask::all(dim)?.filter(|a| !a.is_empty()) {
                    failures.push(SubsetFailure {
                        subset: a,
                        message: message.clone(),
                    });
                }
                None
            }
        },
        None => None,
    };
    let base_failed = budget.shared_base && base.is_none();

    for a in SubsetMask::all(dim)? {
        let s = subset_seed(seed, a.index());
        let n_inner = matches!(method, Method::Contrast(_)).then(|| budget.inner());
        if a.is_empty() {
            let kind = match method {
                Method::Divergence(_) => EstimatorKind::PickFreeze,
                Method::Contrast(_) => EstimatorKind::DoubleLoopContrast,
            };
            reports[0] = Some(EstimateReport::empty_set(a, budget.n, n_inner, s, kind));
            continue;
        }
        if base_failed {
            continue;
        }
        let outcome = match method {
            Method::Divergence(div) => {
                let sample_seed = if budget.shared_base { seed } else { s };
                pick_freeze_terms(model, dist, div, a, budget.n, sample_seed, s, base.as_deref()).map(|terms| {
                    let (estimate, std_error) = mean_and_se(&terms);
                    if budget.shared_base {
                        terms_by_subset[a.index()] = Some(terms);
                    }
                    EstimateReport {
                        subset: a,
                        estimate,
                        std_error,
                        n: budget.n,
                        n_inner: None,
                        seed: s,
                        kind: EstimatorKind::PickFreeze,
                    }
                })
            }
            Method::Contrast(c) => estimate_tau_contrast(model, dist, c, a, budget.n, budget.inner(), s),
        };
        match outcome {
            Ok(r) => reports[a.index()] = Some(r),
            Err(e) => failures.push(SubsetFailure {
                subset: a,
                message: e.to_string(),
            }),
        }
    }

    let values: Vec<f64> = reports
        .iter()
        .map(|r| r.as_ref().map_or(f64::NAN, |r| r.estimate))
        .collect();
    let map = LatticeMap::new(dim, values)?;
    let covariance = if budget.shared_base {
        shared_covariance(&terms_by_subset, budget.n)
    } else {
        Covariance::Diagonal(
            reports
                .iter()
                .map(|r| r.as_ref().map_or(f64::NAN, |r| r.std_error * r.std_error))
                .collect(),
        )
    };
    Ok(SensitivityEstimate {
        map,
        reports,
        failures,
        covariance,
        method,
        budget,
        seed,
    })
}

/// Covariance of subset means computed from a common base sample.
fn shared_covariance(terms: &[Option<Vec<f64>>], n: usize) -> Covariance {
    let size = terms.len();
    let centered: Vec<Option<Vec<f64>>> = terms
        .iter()
        .map(|t| {
            t.as_ref().map(|v| {
                let m = v.iter().sum::<f64>() / n as f64;
                v.iter().map(|x| x - m).collect()
            })
        })
        .collect();
    let denom = (n as f64 - 1.0) * n as f64;
    let mut matrix = vec![0.0; size * size];
    matrix.par_chunks_mut(size).enumerate().for_each(|(i, row)| {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = match (&centered[i], &centered[j]) {
                (Some(u), Some(v)) => u.iter().zip(v).map(|(p, q)| p * q).sum::<f64>() / denom,
                _ if i == 0 || j == 0 => 0.0,
                _ => f64::NAN,
            };
        }
    });
    Covariance::Full(matrix)
}

/// Closed-form map with `std_error = 0` reports.
pub fn exact_sensitivity_map(
    model: &ModelSpec,
    dist: &InputDistribution,
    div: Divergence,
) -> Result<(LatticeMap, Vec<EstimateReport>), EstimateError> {
    let dim = dist.dim();
    let mut values = Vec::with_capacity(1 << dim);
    let mut reports = Vec::with_capacity(1 << dim);
    for a in SubsetMask::all(dim)? {
        let tau = exact_tau(model, dist, div, a)?;
        values.push(tau);
        reports.push(EstimateReport {
            subset: a,
            estimate: tau,
            std_error: 0.0,
            n: 0,
            n_inner: None,
            seed: 0,
            kind: EstimatorKind::Exact,
        });
    }
    Ok((LatticeMap::new(dim, values)?, reports))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::input::{paired_sample, Marginal};
    use crate::models::FnModel;

    fn linear3() -> (ModelSpec, InputDistribution) {
        (
            ModelSpec::linear(vec![1.0, 2.0, 3.0]),
            InputDistribution::independent(vec![Marginal::standard_normal(); 3]).unwrap(),
        )
    }

    fn m(indices: &[usize]) -> SubsetMask {
        SubsetMask::from_indices(indices, 3).unwrap()
    }

    #[test]
    fn empty_set_is_exact_zero() {
        let (model, dist) = linear3();
        let r = estimate_tau(&model, &dist, Divergence::SquaredHalf, m(&[]), 10, 1).unwrap();
        assert_eq!((r.estimate, r.std_error), (0.0, 0.0));
        let r = estimate_tau_contrast(&model, &dist, Contrast::Median, m(&[]), 10, 4, 1).unwrap();
        assert_eq!(r.estimate, 0.0);
    }

    #[test]
    fn pick_freeze_linear_gaussian() {
        let (model, dist) = linear3();
        let r = estimate_tau(&model, &dist, Divergence::SquaredHalf, m(&[1, 2]), 100_000, 7).unwrap();
        assert!((r.estimate - 5.0).abs() < 3.0 * r.std_error, "{r:?}");
        let again = estimate_tau(&model, &dist, Divergence::SquaredHalf, m(&[1, 2]), 100_000, 7).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn pick_freeze_matches_paired_sample() {
        let (model, dist) = linear3();
        let a = m(&[2]);
        let n = 500;
        let r = estimate_tau(&model, &dist, Divergence::Absolute, a, n, 3).unwrap();
        let pair = paired_sample(&dist, a, n, 3).unwrap();
        let direct: f64 = (0..n)
            .map(|k| (model.evaluate(pair.x.row(k)) - model.evaluate(pair.x_resampled.row(k))).abs())
            .sum::<f64>()
            / n as f64;
        assert!((r.estimate - direct).abs() < 1e-12);
    }

    #[test]
    fn contrast_mean_matches_pick_freeze() {
        let (model, dist) = linear3();
        let a = m(&[1, 2]);
        let c = estimate_tau_contrast(&model, &dist, Contrast::Mean, a, 4000, 64, 11).unwrap();
        let p = estimate_tau(&model, &dist, Divergence::SquaredHalf, a, 100_000, 12).unwrap();
        let se = (c.std_error.powi(2) + p.std_error.powi(2)).sqrt();
        assert!((c.estimate - p.estimate).abs() < 3.0 * se, "{c:?} {p:?}");
        assert!((c.estimate - 5.0).abs() < 3.0 * c.std_error);
    }

    #[test]
    fn non_finite_output_names_row() {
        let dist = InputDistribution::independent(vec![Marginal::uniform(0.0, 1.0)]).unwrap();
        let model = FnModel::new(1, |x: &[f64]| if x[0] > 0.5 { f64::NAN } else { x[0] });
        let a = SubsetMask::full(1).unwrap();
        match estimate_tau(&model, &dist, Divergence::SquaredHalf, a, 100, 1) {
            Err(EstimateError::NonFiniteOutput { row, .. }) => assert!(row < 100),
            other => panic!("{other:?}"),
        }
        let est = estimate_sensitivity_map(
            &model,
            &dist,
            Method::Divergence(Divergence::SquaredHalf),
            Budget::per_subset(100),
            1,
        )
        .unwrap();
        assert_eq!(est.failures.len(), 1);
        assert_eq!(est.map.values()[0], 0.0);
        assert!(est.map.values()[1].is_nan());
        assert!(est.into_complete().is_err());
    }

    #[test]
    fn map_recovers_linear_gaussian() {
        let (model, dist) = linear3();
        let est = estimate_sensitivity_map(
            &model,
            &dist,
            Method::Divergence(Divergence::SquaredHalf),
            Budget::per_subset(50_000),
            5,
        )
        .unwrap();
        let expected = [0.0, 1.0, 4.0, 5.0, 9.0, 10.0, 13.0, 14.0];
        for a in SubsetMask::all(3).unwrap() {
            let r = est.report(a).unwrap();
            assert!((r.estimate - expected[a.index()]).abs() <= 3.0 * r.std_error.max(1e-300), "{r:?}");
        }
    }

    #[test]
    fn shared_base_is_consistent() {
        let (model, dist) = linear3();
        let budget = Budget {
            n: 50_000,
            n_inner: None,
            shared_base: true,
        };
        let est = estimate_sensitivity_map(&model, &dist, Method::Divergence(Divergence::SquaredHalf), budget, 9)
            .unwrap();
        let Covariance::Full(cov) = &est.covariance else {
            panic!("expected a full covariance")
        };
        for a in SubsetMask::all(3).unwrap() {
            let r = est.report(a).unwrap();
            let i = a.index();
            assert!((cov[i * 8 + i] - r.std_error * r.std_error).abs() < 1e-9 * (1.0 + cov[i * 8 + i]));
            assert!((r.estimate - exact_tau(&model, &dist, Divergence::SquaredHalf, a).unwrap()).abs() <= 3.0 * r.std_error + 1e-12);
        }
        assert!(est.is_complete());
    }

    #[test]
    fn constant_model_gives_zero_map() {
        let dist = InputDistribution::independent(vec![Marginal::standard_normal(); 2]).unwrap();
        let model = FnModel::new(2, |_: &[f64]| 0.0);
        let est = estimate_sensitivity_map(
            &model,
            &dist,
            Method::Divergence(Divergence::SquaredHalf),
            Budget::per_subset(100),
            1,
        )
        .unwrap();
        assert!(est.map.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn budget_split() {
        let b = Budget::from_total(700_000, 3, Method::Divergence(Divergence::SquaredHalf), false);
        assert_eq!(b.n, 50_000);
        let b = Budget::from_total(800_000, 3, Method::Divergence(Divergence::SquaredHalf), true);
        assert_eq!(b.n, 100_000);
        let b = Budget::from_total(7_000_000, 3, Method::Contrast(Contrast::Mean), false);
        assert!(b.n * b.inner() <= 1_000_000);
        assert!((b.n + 1) * default_inner(b.n + 1) > 1_000_000);
        assert_eq!(default_inner(100), 32);
        assert_eq!(default_inner(10_000), 100);
    }

    #[test]
    fn subset_seeds_differ() {
        let seeds: std::collections::BTreeSet<u64> = (0..256).map(|i| subset_seed(42, i)).collect();
        assert_eq!(seeds.len(), 256);
    }
}
