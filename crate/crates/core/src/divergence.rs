//! Divergences between two outputs and contrast functions with empirical minimizers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DivergenceError {
    #[error("non-finite input ({0}, {1})")]
    NonFinite(f64, f64),
    #[error("empty sample")]
    EmptySample,
    #[error("sample contains a non-finite value at position {0}")]
    NonFiniteSample(usize),
    #[error("quantile level {0} outside (0, 1)")]
    BadLevel(f64),
    #[error("unknown {kind} {name:?}")]
    Unknown { kind: &'static str, name: String },
}

/// A function `ψ(x, y) ≥ 0` vanishing exactly on the diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Divergence {
    /// `(x - y)^2 / 2`; its expectation over a pick-freeze pair is `E var(f(X) | X_{D∖A})`.
    SquaredHalf,
    /// `|x - y|`.
    Absolute,
}

impl Divergence {
    pub fn evaluate(self, x: f64, y: f64) -> Result<f64, DivergenceError> {
        if !x.is_finite() || !y.is_finite() {
            return Err(DivergenceError::NonFinite(x, y));
        }
        Ok(self.eval_unchecked(x, y))
    }

    #[inline]
    pub(crate) fn eval_unchecked(self, x: f64, y: f64) -> f64 {
        match self {
            Divergence::SquaredHalf => 0.5 * (x - y) * (x - y),
            Divergence::Absolute => (x - y).abs(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Divergence::SquaredHalf => "squared_half",
            Divergence::Absolute => "absolute",
        }
    }
}

impl FromStr for Divergence {
    type Err = DivergenceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "squared_half" => Ok(Divergence::SquaredHalf),
            "absolute" => Ok(Divergence::Absolute),
            other => Err(DivergenceError::Unknown {
                kind: "divergence",
                name: other.to_string(),
            }),
        }
    }
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Loss whose minimizer is a location summary of the output law.
///
/// `Θ` is the whole real line; restricted parameter sets are not supported.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Contrast {
    /// `(y - θ)^2`, minimized by the mean.
    Mean,
    /// `|y - θ|`, minimized by the median.
    Median,
    /// Pinball loss `(y - θ)(α - 1{y ≤ θ})`, minimized by the `α`-quantile.
    Quantile { alpha: f64 },
}

impl Contrast {
    pub fn quantile(alpha: f64) -> Result<Self, DivergenceError> {
        if alpha > 0.0 && alpha < 1.0 {
            Ok(Contrast::Quantile { alpha })
        } else {
            Err(DivergenceError::BadLevel(alpha))
        }
    }

    #[inline]
    pub fn loss(self, y: f64, theta: f64) -> f64 {
        match self {
            Contrast::Mean => (y - theta) * (y - theta),
            Contrast::Median => (y - theta).abs(),
            Contrast::Quantile { alpha } => {
                let below = if y <= theta { 1.0 } else { 0.0 };
                (y - theta) * (alpha - below)
            }
        }
    }

    pub fn name(self) -> String {
        match self {
            Contrast::Mean => "mean".into(),
            Contrast::Median => "median".into(),
            Contrast::Quantile { alpha } => format!("quantile({alpha})"),
        }
    }

    /// Minimizer of the empirical contrast.
    ///
    /// Mean: the sample mean. Median: the lower median, the order statistic of
    /// rank `ceil(n/2)`. Quantile: the order statistic of rank `ceil(α n)`
    /// (left-continuous inverse empirical CDF). Both are sample points.
    pub fn empirical_minimizer(self, sample: &[f64]) -> Result<f64, DivergenceError> {
        check_sample(sample)?;
        Ok(self.minimizer_unchecked(&mut sample.to_vec()))
    }

    /// Reorders `scratch`.
    pub(crate) fn minimizer_unchecked(self, scratch: &mut [f64]) -> f64 {
        let n = scratch.len();
        match self {
            Contrast::Mean => scratch.iter().sum::<f64>() / n as f64,
            Contrast::Median => order_statistic(scratch, n.div_ceil(2)),
            Contrast::Quantile { alpha } => order_statistic(scratch, quantile_rank(alpha, n)),
        }
    }

    /// `(1/n) Σ ψ(y_i, θ)`.
    pub fn empirical_contrast_value(self, sample: &[f64], theta: f64) -> Result<f64, DivergenceError> {
        check_sample(sample)?;
        Ok(self.contrast_value_unchecked(sample, theta))
    }

    pub(crate) fn contrast_value_unchecked(self, sample: &[f64], theta: f64) -> f64 {
        sample.iter().map(|&y| self.loss(y, theta)).sum::<f64>() / sample.len() as f64
    }
}

impl FromStr for Contrast {
    type Err = DivergenceError;

    /// `mean`, `median`, or `quantile:<alpha>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mean" => Ok(Contrast::Mean),
            "median" => Ok(Contrast::Median),
            other => {
                let alpha = other
                    .strip_prefix("quantile:")
                    .and_then(|a| a.parse::<f64>().ok())
                    .ok_or_else(|| DivergenceError::Unknown {
                        kind: "contrast",
                        name: other.to_string(),
                    })?;
                Contrast::quantile(alpha)
            }
        }
    }
}

fn check_sample(sample: &[f64]) -> Result<(), DivergenceError> {
    if sample.is_empty() {
        return Err(DivergenceError::EmptySample);
    }
    if let Some(pos) = sample.iter().position(|v| !v.is_finite()) {
        return Err(DivergenceError::NonFiniteSample(pos));
    }
    Ok(())
}

/// Rank `ceil(α n)` clamped to `1..=n`, robust to `α n` landing a hair above an integer.
fn quantile_rank(alpha: f64, n: usize) -> usize {
    let target = alpha * n as f64;
    let nearest = target.round();
    let rank = if (target - nearest).abs() <= 1e-9 * n as f64 {
        nearest
    } else {
        target.ceil()
    };
    (rank as usize).clamp(1, n)
}

/// The `rank`-th smallest value (1-based).
fn order_statistic(values: &mut [f64], rank: usize) -> f64 {
    let (_, v, _) = values.select_nth_unstable_by(rank - 1, f64::total_cmp);
    *v
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn divergence_values() {
        assert_eq!(Divergence::SquaredHalf.evaluate(3.0, 1.0).unwrap(), 2.0);
        assert_eq!(Divergence::Absolute.evaluate(2.5, 2.5).unwrap(), 0.0);
        assert_eq!(Divergence::Absolute.evaluate(-1.0, 2.0).unwrap(), 3.0);
        assert!(Divergence::SquaredHalf.evaluate(f64::NAN, 0.0).is_err());
        assert!(Divergence::Absolute.evaluate(0.0, f64::INFINITY).is_err());
    }

    #[test]
    fn divergences_are_symmetric_and_definite() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            let x: f64 = rng.random_range(-50.0..50.0);
            let y: f64 = rng.random_range(-50.0..50.0);
            for div in [Divergence::SquaredHalf, Divergence::Absolute] {
                let a = div.evaluate(x, y).unwrap();
                assert_eq!(a, div.evaluate(y, x).unwrap());
                assert!(a >= 0.0);
                assert_eq!(a == 0.0, x == y);
                assert_eq!(div.evaluate(x, x).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn minimizer_examples() {
        assert_eq!(Contrast::Mean.empirical_minimizer(&[1.0, 2.0, 3.0]).unwrap(), 2.0);
        assert_eq!(
            Contrast::Median.empirical_minimizer(&[1.0, 2.0, 3.0, 100.0]).unwrap(),
            2.0
        );
        assert_eq!(Contrast::Median.empirical_minimizer(&[5.0, 1.0, 3.0]).unwrap(), 3.0);
        let q = Contrast::quantile(0.5).unwrap();
        let symmetric = [-3.0, -1.0, 0.0, 1.0, 3.0];
        assert_eq!(
            q.empirical_minimizer(&symmetric).unwrap(),
            Contrast::Median.empirical_minimizer(&symmetric).unwrap()
        );
        let q7 = Contrast::quantile(0.7).unwrap();
        let ten: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(q7.empirical_minimizer(&ten).unwrap(), 7.0);
        assert!(Contrast::Mean.empirical_minimizer(&[]).is_err());
        assert!(Contrast::quantile(1.0).is_err());
        assert!(Contrast::quantile(0.0).is_err());
    }

    #[test]
    fn lower_median_minimizes_absolute_loss_on_grid() {
        let sample = [1.0, 2.0, 3.0, 100.0];
        let med = Contrast::Median.empirical_minimizer(&sample).unwrap();
        let at_med = Contrast::Median.empirical_contrast_value(&sample, med).unwrap();
        for k in 0..=1000 {
            let theta = 1.0 + 99.0 * k as f64 / 1000.0;
            let v = Contrast::Median.empirical_contrast_value(&sample, theta).unwrap();
            assert!(at_med <= v + 1e-12);
        }
    }

    #[test]
    fn contrast_values() {
        assert!(
            (Contrast::Mean.empirical_contrast_value(&[1.0, 2.0, 3.0], 2.0).unwrap() - 2.0 / 3.0)
                .abs()
                < 1e-15
        );
        for c in [Contrast::Mean, Contrast::Median, Contrast::quantile(0.3).unwrap()] {
            assert_eq!(c.empirical_contrast_value(&[4.0; 5], 4.0).unwrap(), 0.0);
        }
        assert_eq!(Contrast::Median.empirical_contrast_value(&[0.0, 4.0], 2.0).unwrap(), 2.0);
        // pinball at 1/2 is half the absolute loss
        let q = Contrast::quantile(0.5).unwrap();
        assert_eq!(q.loss(3.0, 1.0), 0.5 * Contrast::Median.loss(3.0, 1.0));
        assert_eq!(q.loss(-3.0, 1.0), 0.5 * Contrast::Median.loss(-3.0, 1.0));
    }

    #[test]
    fn minimizers_are_optimal_on_a_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let contrasts = [
            Contrast::Mean,
            Contrast::Median,
            Contrast::quantile(0.1).unwrap(),
            Contrast::quantile(0.9).unwrap(),
        ];
        for c in contrasts {
            for _ in 0..200 {
                let n = rng.random_range(1..40);
                let sample: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
                let theta = c.empirical_minimizer(&sample).unwrap();
                let best = c.empirical_contrast_value(&sample, theta).unwrap();
                let lo = sample.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = sample.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                for k in 0..1000 {
                    let t = lo + (hi - lo) * k as f64 / 999.0;
                    let v = c.empirical_contrast_value(&sample, t).unwrap();
                    assert!(best <= v + 1e-12, "{} n={n}: {best} > {v}", c.name());
                }
                // order-statistic minimizers are exact: no sample point does better
                if !matches!(c, Contrast::Mean) {
                    for &t in &sample {
                        assert!(best <= c.empirical_contrast_value(&sample, t).unwrap() + 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn parsing() {
        assert_eq!("absolute".parse::<Divergence>().unwrap(), Divergence::Absolute);
        assert!("kl".parse::<Divergence>().is_err());
        assert_eq!("median".parse::<Contrast>().unwrap(), Contrast::Median);
        assert_eq!(
            "quantile:0.25".parse::<Contrast>().unwrap(),
            Contrast::Quantile { alpha: 0.25 }
        );
        assert!("quantile:2".parse::<Contrast>().is_err());
    }
}
