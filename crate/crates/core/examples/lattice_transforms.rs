//! Finite differences, Möbius transform and duality on a small map.
//!
//! `cargo run --example lattice_transforms`

use factorial_gsa::lattice::{conditional_effect, delta, dual, mobius_inverse, mobius_transform, LatticeMap, SubsetMask};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // τ({1}) = 1, τ({2}) = 4, τ({1,2}) = 9
    let tau = LatticeMap::new(2, vec![0.0, 1.0, 4.0, 9.0])?;
    let s = |lit: &str| SubsetMask::parse(lit, 2);

    println!("map in design order (input 1 leftmost): {:?}", tau.design_order());
    println!("Delta_{{1,2}} tau(empty) = {}", delta(&tau, s("{1,2}")?, s("{}")?)?);
    println!("tau({{1,2}}) - tau({{2}}) = {}", conditional_effect(&tau, s("{1}")?, s("{2}")?)?);

    let effects = mobius_transform(&tau);
    println!("\nMobius transform:");
    for (b, v) in effects.iter() {
        println!("  I({b}) = {v}");
    }
    let back = mobius_inverse(&effects);
    println!("roundtrip error: {:e}", back.max_abs_diff(&tau)?.0);

    let star = dual(&tau);
    println!("\ndual map tau*(A) = tau(D) - tau(D\\A):");
    for (a, v) in star.iter() {
        println!("  tau*({a}) = {v}");
    }
    Ok(())
}
