//! Built-in test models and their closed-form variance-based maps.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::divergence::Divergence;
use crate::input::{Dependence, InputDistribution, Marginal};
use crate::lattice::{LatticeError, SubsetMask};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
    #[error("model expects {expected} inputs, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite input at position {0}")]
    NonFiniteInput(usize),
    #[error("model returned a non-finite value {0}")]
    NonFiniteOutput(f64),
    #[error("no closed form registered: {0}")]
    NoClosedForm(String),
}

/// A deterministic function `f: R^d → R`. Implementations must be reentrant.
pub trait Model: Sync {
    fn dim(&self) -> usize;
    fn evaluate(&self, x: &[f64]) -> f64;
}

/// Wraps a closure as a [`Model`].
pub struct FnModel<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> FnModel<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> Model for FnModel<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn evaluate(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

/// One monomial `coefficient · Π x_i^{exponents[i]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coefficient: f64,
    pub exponents: Vec<u32>,
}

fn default_a() -> f64 {
    7.0
}

fn default_b() -> f64 {
    0.1
}

/// Registered test models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "snake_case")]
pub enum ModelSpec {
    /// `c · x`.
    Linear { coefficients: Vec<f64> },
    /// `sin x₁ + a sin² x₂ + b x₃⁴ sin x₁`.
    Ishigami {
        #[serde(default = "default_a")]
        a: f64,
        #[serde(default = "default_b")]
        b: f64,
    },
    /// `Π x_i`.
    Product { dim: usize },
    /// `x₁² + x₂`.
    SquarePlus,
    Polynomial { dim: usize, terms: Vec<Term> },
}

impl ModelSpec {
    pub fn linear(coefficients: Vec<f64>) -> Self {
        ModelSpec::Linear { coefficients }
    }

    pub fn ishigami() -> Self {
        ModelSpec::Ishigami { a: 7.0, b: 0.1 }
    }

    pub fn id(&self) -> &'static str {
        match self {
            ModelSpec::Linear { .. } => "linear",
            ModelSpec::Ishigami { .. } => "ishigami",
            ModelSpec::Product { .. } => "product",
            ModelSpec::SquarePlus => "square_plus",
            ModelSpec::Polynomial { .. } => "polynomial",
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::InvalidParams(m.to_string()));
        match self {
            ModelSpec::Linear { coefficients } => {
                if coefficients.is_empty() || coefficients.iter().any(|c| !c.is_finite()) {
                    return bad("linear needs at least one finite coefficient");
                }
            }
            ModelSpec::Ishigami { a, b } => {
                if !(a.is_finite() && b.is_finite()) {
                    return bad("ishigami parameters must be finite");
                }
            }
            ModelSpec::Product { dim } => {
                if *dim == 0 {
                    return bad("product needs dim >= 1");
                }
            }
            ModelSpec::SquarePlus => {}
            ModelSpec::Polynomial { dim, terms } => {
                if *dim == 0 {
                    return bad("polynomial needs dim >= 1");
                }
                for t in terms {
                    if t.exponents.len() != *dim {
                        return bad("every exponent vector must have length dim");
                    }
                    if !t.coefficient.is_finite() {
                        return bad("polynomial coefficients must be finite");
                    }
                }
            }
        }
        Ok(())
    }

    /// Checked evaluation.
    pub fn evaluate_checked(&self, x: &[f64]) -> Result<f64, ModelError> {
        if x.len() != self.dim() {
            return Err(ModelError::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
            return Err(ModelError::NonFiniteInput(pos));
        }
        let y = Model::evaluate(self, x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(ModelError::NonFiniteOutput(y))
        }
    }

    /// Polynomial form, for every model but Ishigami.
    pub fn as_polynomial(&self) -> Option<Vec<Term>> {
        match self {
            ModelSpec::Linear { coefficients } => {
                let d = coefficients.len();
                Some(
                    coefficients
                        .iter()
                        .enumerate()
                        .map(|(i, &c)| {
                            let mut exponents = vec![0; d];
                            exponents[i] = 1;
                            Term {
                                coefficient: c,
                                exponents,
                            }
                        })
                        .collect(),
                )
            }
            ModelSpec::Product { dim } => Some(vec![Term {
                coefficient: 1.0,
                exponents: vec![1; *dim],
            }]),
            ModelSpec::SquarePlus => Some(vec![
                Term {
                    coefficient: 1.0,
                    exponents: vec![2, 0],
                },
                Term {
                    coefficient: 1.0,
                    exponents: vec![0, 1],
                },
            ]),
            ModelSpec::Polynomial { terms, .. } => Some(terms.clone()),
            ModelSpec::Ishigami { .. } => None,
        }
    }
}

impl Model for ModelSpec {
    fn dim(&self) -> usize {
        match self {
            ModelSpec::Linear { coefficients } => coefficients.len(),
            ModelSpec::Ishigami { .. } => 3,
            ModelSpec::Product { dim } | ModelSpec::Polynomial { dim, .. } => *dim,
            ModelSpec::SquarePlus => 2,
        }
    }

    fn evaluate(&self, x: &[f64]) -> f64 {
        match self {
            ModelSpec::Linear { coefficients } => {
                coefficients.iter().zip(x).map(|(c, v)| c * v).sum()
            }
            ModelSpec::Ishigami { a, b } => {
                let s1 = x[0].sin();
                let s2 = x[1].sin();
                s1 + a * s2 * s2 + b * x[2].powi(4) * s1
            }
            ModelSpec::Product { .. } => x.iter().product(),
            ModelSpec::SquarePlus => x[0] * x[0] + x[1],
            ModelSpec::Polynomial { terms, .. } => terms
                .iter()
                .map(|t| {
                    t.coefficient
                        * t.exponents
                            .iter()
                            .zip(x)
                            .map(|(&e, &v)| v.powi(e as i32))
                            .product::<f64>()
                })
                .sum(),
        }
    }
}

/// Variance components of the Ishigami function on `U(-π, π)^3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IshigamiVariances {
    pub v1: f64,
    pub v2: f64,
    pub v13: f64,
    pub total: f64,
}

pub fn ishigami_variances(a: f64, b: f64) -> IshigamiVariances {
    let pi4 = PI.powi(4);
    let pi8 = PI.powi(8);
    let v1 = 0.5 * (1.0 + b * pi4 / 5.0).powi(2);
    let v2 = a * a / 8.0;
    let v13 = b * b * pi8 * (1.0 / 18.0 - 1.0 / 50.0);
    IshigamiVariances {
        v1,
        v2,
        v13,
        total: v1 + v2 + v13,
    }
}

/// Closed-form `τ(A) = E var(f(X) | X_{D∖A})` for the squared-half divergence.
///
/// Registered: Ishigami on independent `U(-π, π)` inputs; every polynomial
/// model (linear, product, square_plus, polynomial) on independent inputs; and
/// the linear model under a Gaussian copula with normal marginals.
pub fn exact_tau(
    model: &ModelSpec,
    dist: &InputDistribution,
    divergence: Divergence,
    a: SubsetMask,
) -> Result<f64, ModelError> {
    model.validate()?;
    if divergence != Divergence::SquaredHalf {
        return Err(ModelError::NoClosedForm(format!(
            "only squared_half has closed forms, got {divergence}"
        )));
    }
    let d = Model::dim(model);
    if dist.dim() != d {
        return Err(ModelError::DimensionMismatch {
            expected: d,
            found: dist.dim(),
        });
    }
    a.ensure_dim(d)?;
    if a.is_empty() {
        return Ok(0.0);
    }
    match (model, dist.dependence()) {
        (ModelSpec::Ishigami { a: pa, b: pb }, Dependence::Independent) => {
            let standard = dist
                .marginals()
                .iter()
                .all(|m| *m == Marginal::uniform(-PI, PI));
            if !standard {
                return Err(ModelError::NoClosedForm(
                    "ishigami closed form needs U(-π, π) inputs".into(),
                ));
            }
            let v = ishigami_variances(*pa, *pb);
            let mut tau = 0.0;
            if a.contains(1) {
                tau += v.v1;
            }
            if a.contains(2) {
                tau += v.v2;
            }
            if a.contains(1) || a.contains(3) {
                tau += v.v13;
            }
            Ok(tau)
        }
        (ModelSpec::Linear { coefficients }, Dependence::GaussianCopula(r)) => {
            linear_gaussian_tau(coefficients, dist.marginals(), r, a)
        }
        (_, Dependence::Independent) => {
            let terms = model.as_polynomial().expect("non-ishigami models are polynomial");
            Ok(polynomial_tau(&terms, dist.marginals(), a))
        }
        _ => Err(ModelError::NoClosedForm(format!(
            "{} under a Gaussian copula",
            model.id()
        ))),
    }
}

/// `Σ_{s,t} c_s c_t Π_{F} m(e_s+e_t) [Π_A m(e_s+e_t) - Π_A m(e_s) m(e_t)]`
/// with `F = D∖A` and `m` the raw moments of independent inputs.
fn polynomial_tau(terms: &[Term], marginals: &[Marginal], a: SubsetMask) -> f64 {
    let moment = |i: usize, k: u32| marginals[i].raw_moment(k);
    let mut tau = 0.0;
    for s in terms {
        for t in terms {
            let mut fixed = 1.0;
            let mut joint = 1.0;
            let mut split = 1.0;
            for i in 0..marginals.len() {
                let (es, et) = (s.exponents[i], t.exponents[i]);
                if a.contains(i + 1) {
                    joint *= moment(i, es + et);
                    split *= moment(i, es) * moment(i, et);
                } else {
                    fixed *= moment(i, es + et);
                }
            }
            tau += s.coefficient * t.coefficient * fixed * (joint - split);
        }
    }
    tau
}

fn linear_gaussian_tau(
    coefficients: &[f64],
    marginals: &[Marginal],
    r: &DMatrix<f64>,
    a: SubsetMask,
) -> Result<f64, ModelError> {
    let mut scale = Vec::with_capacity(marginals.len());
    for m in marginals {
        match m {
            Marginal::Normal { std, .. } => scale.push(*std),
            _ => {
                return Err(ModelError::NoClosedForm(
                    "linear copula closed form needs normal marginals".into(),
                ))
            }
        }
    }
    let free: Vec<usize> = a.indices().map(|i| i - 1).collect();
    let fixed: Vec<usize> = a.complement().indices().map(|i| i - 1).collect();
    let pick = |rows: &[usize], cols: &[usize]| {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| r[(rows[i], cols[j])])
    };
    let mut cov = pick(&free, &free);
    if !fixed.is_empty() {
        let s_af = pick(&free, &fixed);
        let chol = pick(&fixed, &fixed)
            .cholesky()
            .ok_or_else(|| ModelError::InvalidParams("correlation not positive definite".into()))?;
        cov -= &s_af * chol.solve(&s_af.transpose());
    }
    let w: Vec<f64> = free.iter().map(|&i| coefficients[i] * scale[i]).collect();
    let mut tau = 0.0;
    for (p, wp) in w.iter().enumerate() {
        for (q, wq) in w.iter().enumerate() {
            tau += wp * wq * cov[(p, q)];
        }
    }
    Ok(tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::input::sample;

    fn m(indices: &[usize], dim: usize) -> SubsetMask {
        SubsetMask::from_indices(indices, dim).unwrap()
    }

    #[test]
    fn evaluation_examples() {
        let lin = ModelSpec::linear(vec![1.0, 2.0, 3.0]);
        assert_eq!(lin.evaluate_checked(&[1.0, 1.0, 1.0]).unwrap(), 6.0);
        let sp = ModelSpec::SquarePlus;
        assert_eq!(sp.evaluate_checked(&[-1.0, 0.3]).unwrap(), 1.3);
        assert_eq!(sp.evaluate_checked(&[1.0, 0.3]).unwrap(), 1.3);
        let ish = ModelSpec::ishigami();
        assert!((ish.evaluate_checked(&[PI / 2.0, 0.0, 0.0]).unwrap() - 1.0).abs() < 1e-15);
        let prod = ModelSpec::Product { dim: 3 };
        assert_eq!(prod.evaluate_checked(&[2.0, -1.0, 3.0]).unwrap(), -6.0);
        let poly = ModelSpec::Polynomial {
            dim: 2,
            terms: vec![
                Term {
                    coefficient: 2.0,
                    exponents: vec![2, 1],
                },
                Term {
                    coefficient: -1.0,
                    exponents: vec![0, 0],
                },
            ],
        };
        assert_eq!(poly.evaluate_checked(&[3.0, 2.0]).unwrap(), 35.0);
    }

    #[test]
    fn evaluation_errors() {
        let lin = ModelSpec::linear(vec![1.0, 2.0]);
        assert!(matches!(
            lin.evaluate_checked(&[1.0]),
            Err(ModelError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            lin.evaluate_checked(&[1.0, f64::NAN]),
            Err(ModelError::NonFiniteInput(1))
        ));
        let huge = ModelSpec::linear(vec![f64::MAX, f64::MAX]);
        assert!(matches!(
            huge.evaluate_checked(&[2.0, 2.0]),
            Err(ModelError::NonFiniteOutput(_))
        ));
        let bad = ModelSpec::Polynomial {
            dim: 2,
            terms: vec![Term {
                coefficient: 1.0,
                exponents: vec![1],
            }],
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn ishigami_components() {
        let v = ishigami_variances(7.0, 0.1);
        assert!((v.v1 - 4.3459).abs() < 5e-5, "{}", v.v1);
        assert_eq!(v.v2, 6.125);
        assert!((v.v13 - 3.3737).abs() < 5e-5, "{}", v.v13);
        assert!((v.total - 13.8446).abs() < 5e-5, "{}", v.total);
        let pi = PI;
        let direct = 49.0 / 8.0 + 0.1 * pi.powi(4) / 5.0 + 0.01 * pi.powi(8) / 18.0 + 0.5;
        assert!((v.total - direct).abs() < 1e-12);
    }

    #[test]
    fn linear_closed_forms() {
        let model = ModelSpec::linear(vec![1.0, 2.0, 3.0]);
        let dist = InputDistribution::independent(vec![Marginal::standard_normal(); 3]).unwrap();
        let expected = [0.0, 1.0, 4.0, 5.0, 9.0, 10.0, 13.0, 14.0];
        for a in SubsetMask::all(3).unwrap() {
            let tau = exact_tau(&model, &dist, Divergence::SquaredHalf, a).unwrap();
            assert!((tau - expected[a.index()]).abs() < 1e-12, "{a}");
        }
        // identity correlation reproduces the independent case
        let eye: Vec<Vec<f64>> =
            (0..3).map(|i| (0..3).map(|j| f64::from(u8::from(i == j))).collect()).collect();
        let cop = InputDistribution::gaussian_copula(vec![Marginal::standard_normal(); 3], &eye)
            .unwrap();
        for a in SubsetMask::all(3).unwrap() {
            let tau = exact_tau(&model, &cop, Divergence::SquaredHalf, a).unwrap();
            assert!((tau - expected[a.index()]).abs() < 1e-12);
        }
        assert!(matches!(
            exact_tau(&model, &dist, Divergence::Absolute, m(&[1], 3)),
            Err(ModelError::NoClosedForm(_))
        ));
    }

    #[test]
    fn correlated_linear_closed_form() {
        // τ({1}) = c₁² (1 - ρ²) for standard normals
        let rho = 0.8;
        let model = ModelSpec::linear(vec![1.0, 1.0]);
        let dist = InputDistribution::gaussian_copula(
            vec![Marginal::standard_normal(); 2],
            &[vec![1.0, rho], vec![rho, 1.0]],
        )
        .unwrap();
        let t1 = exact_tau(&model, &dist, Divergence::SquaredHalf, m(&[1], 2)).unwrap();
        assert!((t1 - (1.0 - rho * rho)).abs() < 1e-12);
        let td = exact_tau(&model, &dist, Divergence::SquaredHalf, m(&[1, 2], 2)).unwrap();
        assert!((td - (2.0 + 2.0 * rho)).abs() < 1e-12);
    }

    #[test]
    fn square_plus_nullity_witness() {
        let model = ModelSpec::SquarePlus;
        let signs = InputDistribution::independent(vec![
            Marginal::discrete(vec![-1.0, 1.0], vec![0.5, 0.5]),
            Marginal::standard_normal(),
        ])
        .unwrap();
        assert_eq!(exact_tau(&model, &signs, Divergence::SquaredHalf, m(&[1], 2)).unwrap(), 0.0);
        let normal = InputDistribution::independent(vec![Marginal::standard_normal(); 2]).unwrap();
        let t = exact_tau(&model, &normal, Divergence::SquaredHalf, m(&[1], 2)).unwrap();
        assert!((t - 2.0).abs() < 1e-12);
    }

    /// Independent double-loop Monte Carlo of `E var(f | X_{D∖A})` with the
    /// unbiased inner variance: 2000 outer × 500 inner = 10⁶ evaluations.
    fn brute_force_tau(model: &ModelSpec, dist: &InputDistribution, a: SubsetMask, seed: u64) -> (f64, f64) {
        let outer = 2000;
        let inner = 500;
        let base = sample(dist, outer, seed).unwrap();
        let sampler = dist.conditional_sampler(a).unwrap();
        let d = dist.dim();
        let mut row = vec![0.0; d];
        let values: Vec<f64> = (0..outer)
            .map(|k| {
                let ys: Vec<f64> = (0..inner)
                    .map(|j| {
                        sampler.resample_row(base.row(k), seed ^ 0xabc, k as u64, j as u64, &mut row);
                        Model::evaluate(model, &row)
                    })
                    .collect();
                let mean = ys.iter().sum::<f64>() / inner as f64;
                ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (inner - 1) as f64
            })
            .collect();
        let mean = values.iter().sum::<f64>() / outer as f64;
        let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (outer - 1) as f64).sqrt();
        (mean, sd / (outer as f64).sqrt())
    }

    #[test]
    fn closed_forms_agree_with_brute_force() {
        let cases = [(
                ModelSpec::ishigami(),
                InputDistribution::independent(vec![Marginal::uniform(-PI, PI); 3]).unwrap(),
            ),
            (
                ModelSpec::Product { dim: 3 },
                InputDistribution::independent(vec![
                    Marginal::normal(1.0, 0.5),
                    Marginal::uniform(0.0, 2.0),
                    Marginal::discrete(vec![1.0, 3.0], vec![0.25, 0.75]),
                ])
                .unwrap(),
            ),
            (
                ModelSpec::linear(vec![1.0, -2.0]),
                InputDistribution::gaussian_copula(
                    vec![Marginal::normal(0.0, 2.0), Marginal::standard_normal()],
                    &[vec![1.0, 0.6], vec![0.6, 1.0]],
                )
                .unwrap(),
            )];
        for (k, (model, dist)) in cases.iter().enumerate() {
            for a in SubsetMask::all(dist.dim()).unwrap().filter(|a| !a.is_empty()) {
                let exact = exact_tau(model, dist, Divergence::SquaredHalf, a).unwrap();
                let (mc, se) = brute_force_tau(model, dist, a, 100 + k as u64);
                assert!(
                    (mc - exact).abs() <= 3.0 * se.max(1e-12),
                    "{} A={a}: exact {exact} mc {mc} ± {se}",
                    model.id()
                );
            }
        }
    }
}
