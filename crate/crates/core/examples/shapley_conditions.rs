//! Weight families whose singleton effects add up to `τ(D)`.
//!
//! The ordered family (inputs 3, 2, 1) satisfies the sum conditions without
//! being the Shapley family; the uniform family does not.
//!
//! `cargo run --example shapley_conditions`

use std::path::Path;

use factorial_gsa::effects::effect_table;
use factorial_gsa::{LatticeMap, WeightFamily};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data/not_shapley.txt");
    let families = [
        WeightFamily::shapley(3)?,
        WeightFamily::from_weight_file(&path, 3)?,
        WeightFamily::uniform(3)?,
    ];
    // an arbitrary map with τ(∅) = 0
    let tau = LatticeMap::new(3, vec![0.0, 2.0, 1.0, 5.0, 3.0, 4.0, 7.0, 10.0])?;

    for w in &families {
        let cond = w.check_shapley_condition();
        let singles = effect_table(&tau, w)?.singletons();
        let sum: f64 = singles.iter().sum();
        println!(
            "{:<28} condition {:<5}  sum p_i(empty) = {:<5} singletons {:?} sum {} vs tau(D) = {}",
            w.id(),
            cond.passed,
            cond.empty_sum,
            singles,
            sum,
            tau.full_value()
        );
    }
    Ok(())
}
