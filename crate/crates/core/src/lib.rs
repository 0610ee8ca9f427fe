//! Global sensitivity analysis through weighted factorial effects.
//!
//! A sensitivity map `τ` assigns a nonnegative value to every subset of
//! inputs. Effects are weighted averages of its finite differences over the
//! subset lattice; the weight family picks out Sobol indices (Möbius
//! weights), Shapley effects, or classical factorial effects (uniform).
//!
//! - [`lattice`]: subset masks, dense maps, finite differences, Möbius transform, duality.
//! - [`weights`]: weight families and their validity conditions.
//! - [`effects`]: effect tables, uncertainty propagation, algebraic verifiers.
//! - [`divergence`]: divergences and contrast functions.
//! - [`input`]: input distributions and conditional resampling.
//! - [`models`]: built-in test models with closed forms.
//! - [`estimators`]: Monte Carlo estimation of sensitivity maps.
//! - [`report`]: configuration, analysis runs and report files.

pub mod divergence;
pub mod effects;
pub mod estimators;
pub mod input;
pub mod lattice;
pub mod models;
pub mod report;
pub mod weights;

use thiserror::Error;

pub use divergence::{Contrast, Divergence};
pub use effects::{EffectTable, Covariance};
pub use estimators::{estimate_sensitivity_map, estimate_tau, estimate_tau_contrast, Budget, EstimateReport, Method};
pub use input::{InputDistribution, Marginal};
pub use lattice::{LatticeMap, SubsetMask};
pub use models::{exact_tau, FnModel, Model, ModelSpec};
pub use report::{run, AnalysisConfig};
pub use weights::WeightFamily;

/// Any error raised by this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Lattice(#[from] lattice::LatticeError),
    #[error(transparent)]
    Weights(#[from] weights::WeightError),
    #[error(transparent)]
    Effects(#[from] effects::EffectError),
    #[error(transparent)]
    Divergence(#[from] divergence::DivergenceError),
    #[error(transparent)]
    Input(#[from] input::InputError),
    #[error(transparent)]
    Model(#[from] models::ModelError),
    #[error(transparent)]
    Estimate(#[from] estimators::EstimateError),
    #[error(transparent)]
    Run(#[from] report::RunError),
}
