//! Sobol indices of the Ishigami function from an estimated map.
//!
//! `cargo run --release --example ishigami_sobol`

use std::f64::consts::PI;

use factorial_gsa::effects::{attach_std_errors, dual_effect_table};
use factorial_gsa::estimators::{estimate_sensitivity_map, Budget, Method};
use factorial_gsa::models::ishigami_variances;
use factorial_gsa::{Divergence, InputDistribution, Marginal, ModelSpec, SubsetMask, WeightFamily};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = ModelSpec::ishigami();
    let dist = InputDistribution::independent(vec![Marginal::uniform(-PI, PI); 3])?;
    let est = estimate_sensitivity_map(
        &model,
        &dist,
        Method::Divergence(Divergence::SquaredHalf),
        Budget::per_subset(200_000),
        2024,
    )?
    .into_complete()?;

    let mobius = WeightFamily::mobius(3)?;
    let sobol = attach_std_errors(dual_effect_table(&est.map, &mobius)?, &mobius, &est.covariance, true)?;
    let v = ishigami_variances(7.0, 0.1);
    let analytic = |b: SubsetMask| match b.to_string().as_str() {
        "{1}" => v.v1,
        "{2}" => v.v2,
        "{1,3}" => v.v13,
        _ => 0.0,
    };
    println!("B        estimate        analytic");
    for b in SubsetMask::all(3)?.filter(|b| !b.is_empty()) {
        println!("{:<8} {:>7.4} ± {:.4}  {:.4}", b.to_string(), sobol.get(b), sobol.std_error(b), analytic(b));
    }
    println!("total variance {:.4} (analytic {:.4})", est.map.full_value(), v.total);
    Ok(())
}
