//! Any closure can be analysed; here a model with a pure interaction.
//!
//! `cargo run --release --example custom_model`

use factorial_gsa::effects::effect_table;
use factorial_gsa::estimators::{estimate_sensitivity_map, Budget, Method};
use factorial_gsa::{Divergence, FnModel, InputDistribution, Marginal, SubsetMask, WeightFamily};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = FnModel::new(3, |x: &[f64]| x[0] * x[1] + 0.5 * x[2]);
    let dist = InputDistribution::independent(vec![Marginal::uniform(-1.0, 1.0); 3])?;
    let est = estimate_sensitivity_map(
        &model,
        &dist,
        Method::Divergence(Divergence::Absolute),
        Budget {
            n: 50_000,
            n_inner: None,
            shared_base: true,
        },
        5,
    )?
    .into_complete()?;

    let uniform = effect_table(&est.map, &WeightFamily::uniform(3)?)?;
    let mobius = effect_table(&est.map, &WeightFamily::mobius(3)?)?;
    println!("B        tau(B)    factorial  mobius");
    for b in SubsetMask::all(3)? {
        println!(
            "{:<8} {:>7.4}   {:>7.4}   {:>7.4}",
            b.to_string(),
            est.map.get(b),
            uniform.get(b),
            mobius.get(b)
        );
    }
    Ok(())
}
