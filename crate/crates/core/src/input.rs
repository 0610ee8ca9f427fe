//! Input distributions and pick-freeze pairs `(X, X^{∖A})`.
//!
//! `X^{∖A}` shares the columns `D∖A` with `X` bit for bit, and its `A` columns
//! are redrawn from the conditional law given `X_{D∖A}`, independently of `X_A`.
//! With independent inputs that is a fresh draw from the `A` marginals; under a
//! Gaussian copula the latent normal vector is regenerated from its exact
//! conditional distribution and mapped back through the marginal quantiles.
//!
//! Every row has its own ChaCha stream keyed by `(seed, purpose, row)`, so
//! parallel and serial generation produce identical matrices.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::lattice::{check_dim, LatticeError, SubsetMask};
use crate::weights::binomial;

#[derive(Debug, Error)]
pub enum InputError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("input {index}: {message}")]
    InvalidMarginal { index: usize, message: String },
    #[error("correlation matrix: {0}")]
    InvalidCorrelation(String),
    #[error("no conditional sampler: input {0} has a discrete marginal under the Gaussian copula and cannot be conditioned on")]
    NoConditionalSampler(usize),
    #[error("sample matrix has {found} columns, distribution has {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("sample size must be at least 1")]
    EmptySample,
}

/// One-dimensional input law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Marginal {
    Uniform { low: f64, high: f64 },
    Normal { mean: f64, std: f64 },
    Discrete { points: Vec<f64>, probabilities: Vec<f64> },
}

fn std_normal() -> Normal {
    Normal::standard()
}

impl Marginal {
    pub fn uniform(low: f64, high: f64) -> Self {
        Marginal::Uniform { low, high }
    }

    pub fn normal(mean: f64, std: f64) -> Self {
        Marginal::Normal { mean, std }
    }

    pub fn standard_normal() -> Self {
        Marginal::Normal {
            mean: 0.0,
            std: 1.0,
        }
    }

    pub fn discrete(points: Vec<f64>, probabilities: Vec<f64>) -> Self {
        Marginal::Discrete {
            points,
            probabilities,
        }
    }

    fn validate(&self) -> Result<(), String> {
        match self {
            Marginal::Uniform { low, high } => {
                if !(low.is_finite() && high.is_finite() && low < high) {
                    return Err(format!("uniform needs finite low < high, got ({low}, {high})"));
                }
            }
            Marginal::Normal { mean, std } => {
                if !(mean.is_finite() && std.is_finite() && *std > 0.0) {
                    return Err(format!("normal needs finite mean and std > 0, got ({mean}, {std})"));
                }
            }
            Marginal::Discrete {
                points,
                probabilities,
            } => {
                if points.is_empty() || points.len() != probabilities.len() {
                    return Err("discrete needs equally many points and probabilities".into());
                }
                if points.iter().any(|p| !p.is_finite()) {
                    return Err("discrete points must be finite".into());
                }
                if probabilities.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                    return Err("discrete probabilities must be nonnegative".into());
                }
                let total: f64 = probabilities.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(format!("discrete probabilities sum to {total}, not 1"));
                }
            }
        }
        Ok(())
    }

    pub fn is_continuous(&self) -> bool {
        !matches!(self, Marginal::Discrete { .. })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Marginal::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
            Marginal::Normal { mean, std } => {
                let z: f64 = rng.sample(StandardNormal);
                mean + std * z
            }
            Marginal::Discrete { .. } => self.quantile(rng.random::<f64>()),
        }
    }

    /// Left-continuous inverse CDF, `u` in `[0, 1]`.
    pub fn quantile(&self, u: f64) -> f64 {
        match self {
            Marginal::Uniform { low, high } => low + (high - low) * u,
            Marginal::Normal { mean, std } => mean + std * std_normal().inverse_cdf(u),
            Marginal::Discrete {
                points,
                probabilities,
            } => {
                let mut acc = 0.0;
                for (p, w) in points.iter().zip(probabilities) {
                    acc += w;
                    if u < acc {
                        return *p;
                    }
                }
                *points.last().expect("validated nonempty")
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Marginal::Uniform { low, high } => ((x - low) / (high - low)).clamp(0.0, 1.0),
            Marginal::Normal { mean, std } => std_normal().cdf((x - mean) / std),
            Marginal::Discrete {
                points,
                probabilities,
            } => points
                .iter()
                .zip(probabilities)
                .filter(|(p, _)| **p <= x)
                .map(|(_, w)| w)
                .sum(),
        }
    }

    /// Maps a standard-normal latent value to this marginal.
    fn latent_to_value(&self, z: f64) -> f64 {
        match self {
            Marginal::Normal { mean, std } => mean + std * z,
            _ => self.quantile(std_normal().cdf(z)),
        }
    }

    /// Recovers the latent value of a continuous marginal.
    fn to_latent(&self, x: f64) -> f64 {
        match self {
            Marginal::Normal { mean, std } => (x - mean) / std,
            Marginal::Uniform { .. } => {
                let u = self.cdf(x).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
                std_normal().inverse_cdf(u)
            }
            Marginal::Discrete { .. } => unreachable!("guarded by NoConditionalSampler"),
        }
    }

    /// `E X^k`.
    pub fn raw_moment(&self, k: u32) -> f64 {
        match self {
            Marginal::Uniform { low, high } => {
                let k1 = k as i32 + 1;
                (high.powi(k1) - low.powi(k1)) / (k1 as f64 * (high - low))
            }
            Marginal::Normal { mean, std } => {
                // Σ_{j even} C(k, j) μ^{k-j} σ^j (j-1)!!
                let mut total = 0.0;
                let mut double_fact = 1.0;
                for j in (0..=k).step_by(2) {
                    if j >= 2 {
                        double_fact *= (j - 1) as f64;
                    }
                    total += binomial(k as usize, j as usize)
                        * mean.powi((k - j) as i32)
                        * std.powi(j as i32)
                        * double_fact;
                }
                total
            }
            Marginal::Discrete {
                points,
                probabilities,
            } => points
                .iter()
                .zip(probabilities)
                .map(|(p, w)| w * p.powi(k as i32))
                .sum(),
        }
    }

    pub fn mean(&self) -> f64 {
        self.raw_moment(1)
    }

    pub fn variance(&self) -> f64 {
        match self {
            Marginal::Uniform { low, high } => (high - low) * (high - low) / 12.0,
            Marginal::Normal { std, .. } => std * std,
            _ => self.raw_moment(2) - self.mean().powi(2),
        }
    }
}

/// Dependence between inputs.
#[derive(Debug, Clone, PartialEq)]
pub enum Dependence {
    Independent,
    /// Gaussian copula with the given correlation matrix (unit diagonal, SPD).
    GaussianCopula(DMatrix<f64>),
}

/// Joint input law `P`.
#[derive(Debug, Clone)]
pub struct InputDistribution {
    marginals: Vec<Marginal>,
    dependence: Dependence,
    // lower Cholesky factor of the copula correlation
    cholesky: Option<DMatrix<f64>>,
}

impl InputDistribution {
    pub fn independent(marginals: Vec<Marginal>) -> Result<Self, InputError> {
        Self::new(marginals, Dependence::Independent)
    }

    /// `correlation` is a full `d × d` array, rows first.
    pub fn gaussian_copula(
        marginals: Vec<Marginal>,
        correlation: &[Vec<f64>],
    ) -> Result<Self, InputError> {
        let d = marginals.len();
        if correlation.len() != d || correlation.iter().any(|r| r.len() != d) {
            return Err(InputError::InvalidCorrelation(format!("expected a {d}×{d} array")));
        }
        let matrix = DMatrix::from_fn(d, d, |i, j| correlation[i][j]);
        Self::new(marginals, Dependence::GaussianCopula(matrix))
    }

    pub fn new(marginals: Vec<Marginal>, dependence: Dependence) -> Result<Self, InputError> {
        check_dim(marginals.len())?;
        for (i, m) in marginals.iter().enumerate() {
            m.validate().map_err(|message| InputError::InvalidMarginal {
                index: i + 1,
                message,
            })?;
        }
        let cholesky = match &dependence {
            Dependence::Independent => None,
            Dependence::GaussianCopula(r) => Some(check_correlation(r, marginals.len())?),
        };
        Ok(Self {
            marginals,
            dependence,
            cholesky,
        })
    }

    pub fn dim(&self) -> usize {
        self.marginals.len()
    }

    pub fn marginals(&self) -> &[Marginal] {
        &self.marginals
    }

    pub fn dependence(&self) -> &Dependence {
        &self.dependence
    }

    pub fn is_independent(&self) -> bool {
        matches!(self.dependence, Dependence::Independent)
    }

    /// Fills `out` with row `row` of the sample drawn under `seed`.
    pub fn sample_row(&self, seed: u64, row: u64, out: &mut [f64]) {
        let mut rng = row_rng(seed, TAG_SAMPLE, row);
        match &self.cholesky {
            None => {
                for (x, m) in out.iter_mut().zip(&self.marginals) {
                    *x = m.sample(&mut rng);
                }
            }
            Some(l) => {
                let e = DVector::from_fn(self.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
                let z = l * e;
                for ((x, m), zi) in out.iter_mut().zip(&self.marginals).zip(z.iter()) {
                    *x = m.latent_to_value(*zi);
                }
            }
        }
    }

    /// Conditional sampler for `X_A | X_{D∖A}`.
    pub fn conditional_sampler(&self, a: SubsetMask) -> Result<ConditionalSampler<'_>, InputError> {
        a.ensure_dim(self.dim())?;
        let fixed: Vec<usize> = a.complement().indices().map(|i| i - 1).collect();
        let free: Vec<usize> = a.indices().map(|i| i - 1).collect();
        let gaussian = match &self.dependence {
            Dependence::Independent => None,
            Dependence::GaussianCopula(r) => {
                if !free.is_empty() {
                    if let Some(&j) = fixed.iter().find(|&&j| !self.marginals[j].is_continuous()) {
                        return Err(InputError::NoConditionalSampler(j + 1));
                    }
                }
                Some(GaussianConditional::new(r, &free, &fixed)?)
            }
        };
        Ok(ConditionalSampler {
            dist: self,
            free,
            fixed,
            gaussian,
        })
    }
}

fn check_correlation(r: &DMatrix<f64>, d: usize) -> Result<DMatrix<f64>, InputError> {
    let bad = |m: String| InputError::InvalidCorrelation(m);
    if r.nrows() != d || r.ncols() != d {
        return Err(bad(format!("expected {d}×{d}, got {}×{}", r.nrows(), r.ncols())));
    }
    for i in 0..d {
        if (r[(i, i)] - 1.0).abs() > 1e-12 {
            return Err(bad(format!("diagonal entry {} is {}, not 1", i + 1, r[(i, i)])));
        }
        for j in 0..i {
            if !r[(i, j)].is_finite() || (r[(i, j)] - r[(j, i)]).abs() > 1e-12 {
                return Err(bad(format!("not symmetric at ({}, {})", i + 1, j + 1)));
            }
        }
    }
    r.clone()
        .cholesky()
        .map(|c| c.l())
        .ok_or_else(|| bad("not positive definite".into()))
}

/// Latent-space regression and residual factor for `Z_A | Z_F`.
#[derive(Debug, Clone)]
struct GaussianConditional {
    // |A| × |F|
    regression: DMatrix<f64>,
    // |A| × |A| lower Cholesky factor of the conditional covariance
    residual: DMatrix<f64>,
}

impl GaussianConditional {
    fn new(r: &DMatrix<f64>, free: &[usize], fixed: &[usize]) -> Result<Self, InputError> {
        let pick = |rows: &[usize], cols: &[usize]| {
            DMatrix::from_fn(rows.len(), cols.len(), |i, j| r[(rows[i], cols[j])])
        };
        let s_aa = pick(free, free);
        if free.is_empty() {
            return Ok(Self {
                regression: DMatrix::zeros(0, fixed.len()),
                residual: DMatrix::zeros(0, 0),
            });
        }
        let (regression, cov) = if fixed.is_empty() {
            (DMatrix::zeros(free.len(), 0), s_aa)
        } else {
            let s_af = pick(free, fixed);
            let s_ff = pick(fixed, fixed);
            let chol = s_ff.cholesky().ok_or_else(|| {
                InputError::InvalidCorrelation("conditioning block not positive definite".into())
            })?;
            // K = Σ_AF Σ_FF^{-1}
            let regression = chol.solve(&s_af.transpose()).transpose();
            let cov = &s_aa - &regression * s_af.transpose();
            (regression, cov)
        };
        let residual = cov
            .cholesky()
            .map(|c| c.l())
            .ok_or_else(|| InputError::InvalidCorrelation("conditional covariance singular".into()))?;
        Ok(Self {
            regression,
            residual,
        })
    }
}

/// Draws `X_A` given `X_{D∖A}` for a fixed subset `A`.
#[derive(Debug, Clone)]
pub struct ConditionalSampler<'a> {
    dist: &'a InputDistribution,
    free: Vec<usize>,
    fixed: Vec<usize>,
    gaussian: Option<GaussianConditional>,
}

impl ConditionalSampler<'_> {
    /// Copies `x` into `out` and redraws the `A` columns from stream `(seed, stream, row)`.
    pub fn resample_row(&self, x: &[f64], seed: u64, stream: u64, row: u64, out: &mut [f64]) {
        out.copy_from_slice(x);
        if self.free.is_empty() {
            return;
        }
        let mut rng = row_rng(seed, TAG_RESAMPLE ^ stream.rotate_left(8), row);
        let marginals = &self.dist.marginals;
        match &self.gaussian {
            None => {
                for &j in &self.free {
                    out[j] = marginals[j].sample(&mut rng);
                }
            }
            Some(g) => {
                let z_fixed =
                    DVector::from_iterator(self.fixed.len(), self.fixed.iter().map(|&j| marginals[j].to_latent(x[j])));
                let e = DVector::from_fn(self.free.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
                let z = &g.regression * z_fixed + &g.residual * e;
                for (k, &j) in self.free.iter().enumerate() {
                    out[j] = marginals[j].latent_to_value(z[k]);
                }
            }
        }
    }
}

const TAG_SAMPLE: u64 = 0x5341_4d50_4c45;
const TAG_RESAMPLE: u64 = 0x5245_5341_4d50;

fn row_rng(seed: u64, tag: u64, row: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&tag.to_le_bytes());
    key[16..24].copy_from_slice(&row.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Row-major `n × d` sample matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    n: usize,
    dim: usize,
    data: Vec<f64>,
}

impl Samples {
    pub fn from_rows(dim: usize, data: Vec<f64>) -> Result<Self, InputError> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(InputError::DimensionMismatch {
                expected: dim,
                found: data.len(),
            });
        }
        Ok(Self {
            n: data.len() / dim,
            dim,
            data,
        })
    }

    pub fn nrows(&self) -> usize {
        self.n
    }

    pub fn ncols(&self) -> usize {
        self.dim
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    /// Column `j` (0-based) as a vector.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// `n` draws of `X ∼ P`; deterministic in `seed`.
pub fn sample(dist: &InputDistribution, n: usize, seed: u64) -> Result<Samples, InputError> {
    if n == 0 {
        return Err(InputError::EmptySample);
    }
    let d = dist.dim();
    let mut data = vec![0.0; n * d];
    data.par_chunks_mut(d)
        .enumerate()
        .for_each(|(k, row)| dist.sample_row(seed, k as u64, row));
    Ok(Samples { n, dim: d, data })
}

/// Rows of `X^{∖A}` for the given rows of `X`.
pub fn resample_conditional(
    dist: &InputDistribution,
    x: &Samples,
    a: SubsetMask,
    seed: u64,
) -> Result<Samples, InputError> {
    if x.dim != dist.dim() {
        return Err(InputError::DimensionMismatch {
            expected: dist.dim(),
            found: x.dim,
        });
    }
    let sampler = dist.conditional_sampler(a)?;
    let d = x.dim;
    let mut data = vec![0.0; x.data.len()];
    data.par_chunks_mut(d).enumerate().for_each(|(k, out)| {
        sampler.resample_row(x.row(k), seed, 0, k as u64, out);
    });
    Ok(Samples {
        n: x.n,
        dim: d,
        data,
    })
}

/// A pick-freeze pair for one subset.
#[derive(Debug, Clone)]
pub struct PairedSample {
    pub x: Samples,
    pub x_resampled: Samples,
    pub mask: SubsetMask,
    pub seed: u64,
}

pub fn paired_sample(
    dist: &InputDistribution,
    a: SubsetMask,
    n: usize,
    seed: u64,
) -> Result<PairedSample, InputError> {
    let x = sample(dist, n, seed)?;
    let x_resampled = resample_conditional(dist, &x, a, seed)?;
    Ok(PairedSample {
        x,
        x_resampled,
        mask: a,
        seed,
    })
}
