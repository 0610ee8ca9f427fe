//! Estimate the sensitivity map of `x1 + 2 x2 + 3 x3` and its effects.
//!
//! `cargo run --release --example linear_gaussian`

use factorial_gsa::effects::{attach_std_errors, dual_effect_table, effect_table};
use factorial_gsa::estimators::{estimate_sensitivity_map, Budget, Method};
use factorial_gsa::{exact_tau, Divergence, InputDistribution, Marginal, ModelSpec, SubsetMask, WeightFamily};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = ModelSpec::linear(vec![1.0, 2.0, 3.0]);
    let dist = InputDistribution::independent(vec![Marginal::standard_normal(); 3])?;
    let method = Method::Divergence(Divergence::SquaredHalf);
    let est = estimate_sensitivity_map(&model, &dist, method, Budget::per_subset(100_000), 1)?.into_complete()?;

    println!("run  x1 x2 x3   tau        se      exact");
    for row in 0..8 {
        let a = SubsetMask::from_design_index(row, 3)?;
        let r = est.report(a).expect("complete");
        let bits: Vec<String> = a.indicators().iter().map(|b| b.to_string()).collect();
        let exact = exact_tau(&model, &dist, Divergence::SquaredHalf, a)?;
        println!("{:>3}  {}   {:>8.4}  {:.4}  {exact:>5}", row + 1, bits.join("  "), r.estimate, r.std_error);
    }

    let shapley = WeightFamily::shapley(3)?;
    let mobius = WeightFamily::mobius(3)?;
    let sh = attach_std_errors(effect_table(&est.map, &shapley)?, &shapley, &est.covariance, false)?;
    let sobol = attach_std_errors(dual_effect_table(&est.map, &mobius)?, &mobius, &est.covariance, true)?;
    println!("\n B        Shapley           Sobol (closed)");
    for b in SubsetMask::all(3)?.filter(|b| !b.is_empty()) {
        println!(
            "{:<8} {:>7.4} ± {:.4}   {:>7.4} ± {:.4}",
            b.to_string(),
            sh.get(b),
            sh.std_error(b),
            sobol.get(b),
            sobol.std_error(b)
        );
    }
    Ok(())
}
