//! Odd-order effects are self-dual under palindromic weights.
//!
//! `cargo run --example self_duality`

use factorial_gsa::effects::{find_self_duality_counterexample, self_duality_report};
use factorial_gsa::{LatticeMap, SubsetMask, WeightFamily};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dim = 4;
    let tau = LatticeMap::from_fn(dim, |a| (a.len() as f64).powi(2) + a.bits() as f64 * 0.1)?;
    let tau = LatticeMap::from_fn(dim, |a| if a.is_empty() { 0.0 } else { tau.get(a) })?;

    for w in [WeightFamily::uniform(dim)?, WeightFamily::shapley(dim)?, WeightFamily::mobius(dim)?] {
        let r = self_duality_report(&tau, &w)?;
        println!(
            "{:>8}: max |I - I*| odd order {:.2e}, even order {:.2e}",
            w.id(),
            r.max_odd_discrepancy,
            r.max_even_discrepancy
        );
    }

    let mobius = WeightFamily::mobius(dim)?;
    let b = SubsetMask::singleton(1, dim)?;
    let (dev, at) = mobius.palindromic_deviation(b);
    let witness = find_self_duality_counterexample(&mobius, b)?;
    println!(
        "\nmobius weights are not palindromic for B = {b} (deviation {dev} at {}); indicator of {} separates I and I*",
        at.map(|m| m.to_string()).unwrap_or_default(),
        witness.map(|m| m.to_string()).unwrap_or_default()
    );
    Ok(())
}
