//! Compare uniform, Möbius and Shapley weights for one effect.
//!
//! `cargo run --example weight_families -- 3 "{2}"`

use factorial_gsa::report::explain_weights;
use factorial_gsa::{SubsetMask, WeightFamily};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let dim: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(3);
    let b = SubsetMask::parse(&args.next().unwrap_or_else(|| "{2}".into()), dim)?;

    let families = [
        WeightFamily::uniform(dim)?,
        WeightFamily::mobius(dim)?,
        WeightFamily::shapley(dim)?,
    ];
    let table = explain_weights(dim, b, &families)?;
    print!("{table}");

    println!();
    for w in &families {
        let v = w.validate();
        println!("{:>8}: rows sum to 1 within {:e} -> {}", w.id(), v.max_deviation, v.passed);
    }
    Ok(())
}
