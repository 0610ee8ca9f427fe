//! Dependent inputs through a Gaussian copula.
//!
//! `cargo run --release --example copula`

use factorial_gsa::effects::effect_table;
use factorial_gsa::estimators::{estimate_sensitivity_map, Budget, Method};
use factorial_gsa::input::paired_sample;
use factorial_gsa::{exact_tau, Divergence, InputDistribution, Marginal, ModelSpec, SubsetMask, WeightFamily};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rho = 0.8;
    let dist = InputDistribution::gaussian_copula(
        vec![Marginal::standard_normal(), Marginal::uniform(0.0, 1.0)],
        &[vec![1.0, rho], vec![rho, 1.0]],
    )?;
    let a = SubsetMask::singleton(1, 2)?;
    let pair = paired_sample(&dist, a, 5, 9)?;
    println!("x -> x with input 1 redrawn given input 2:");
    for k in 0..5 {
        println!("  {:?} -> {:?}", pair.x.row(k), pair.x_resampled.row(k));
    }

    let model = ModelSpec::linear(vec![1.0, 2.0]);
    let normal = InputDistribution::gaussian_copula(vec![Marginal::standard_normal(); 2], &[vec![1.0, rho], vec![rho, 1.0]])?;
    let est = estimate_sensitivity_map(
        &model,
        &normal,
        Method::Divergence(Divergence::SquaredHalf),
        Budget::per_subset(100_000),
        3,
    )?
    .into_complete()?;
    println!("\nA        estimate   closed form");
    for a in SubsetMask::all(2)? {
        let exact = exact_tau(&model, &normal, Divergence::SquaredHalf, a)?;
        println!("{:<8} {:>8.4}   {exact:.4}", a.to_string(), est.map.get(a));
    }
    let shapley = effect_table(&est.map, &WeightFamily::shapley(2)?)?;
    println!("Shapley effects {:?} sum to tau(D) = {:.4}", shapley.singletons(), est.map.full_value());
    Ok(())
}
