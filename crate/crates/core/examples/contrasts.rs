//! Contrast-based maps (mean, median, quantile) next to divergence-based ones.
//!
//! `cargo run --release --example contrasts`

use factorial_gsa::estimators::{estimate_tau, estimate_tau_contrast};
use factorial_gsa::{Contrast, Divergence, InputDistribution, Marginal, ModelSpec, SubsetMask};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = ModelSpec::linear(vec![1.0, 2.0, 3.0]);
    let dist = InputDistribution::independent(vec![Marginal::standard_normal(); 3])?;
    let contrasts = [Contrast::Mean, Contrast::Median, Contrast::quantile(0.9)?];

    println!("A        squared_half  absolute   mean      median    quantile(0.9)");
    for a in SubsetMask::all(3)?.filter(|a| !a.is_empty()) {
        let sq = estimate_tau(&model, &dist, Divergence::SquaredHalf, a, 50_000, 1)?;
        let abs = estimate_tau(&model, &dist, Divergence::Absolute, a, 50_000, 2)?;
        let mut row = format!("{:<8} {:>9.3}    {:>8.3}", a.to_string(), sq.estimate, abs.estimate);
        for c in contrasts {
            let r = estimate_tau_contrast(&model, &dist, c, a, 2000, 64, 3)?;
            row.push_str(&format!("  {:>8.3}", r.estimate));
        }
        println!("{row}");
    }
    Ok(())
}
