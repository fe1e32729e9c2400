// Orders the Hermite-chaos coefficients of a lognormal field by sup norm.

use sgkron::fem2d::LognormalExpansion;
use sgkron::multiindex::build_index_set;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let expansion = LognormalExpansion::fourier(20, 2.0, 0.547);
    let candidates = build_index_set(4, 3)?;
    let ordered = expansion.order_by_magnitude(&candidates)?;
    for (l, (alpha, norm)) in ordered.iter().take(8).enumerate() {
        println!("ℓ = {l}: α = {alpha}, ‖a_α‖_∞ = {norm:.4}");
    }
    assert!(ordered[0].0.is_zero());
    assert!(ordered.windows(2).all(|w| w[0].1 >= w[1].1));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
