// Total-degree multi-index sets and the Gram matrices of the linear
// parametric terms.

use sgkron::gram::{gram_linear, split_lower};
use sgkron::multiindex::build_index_set;
use sgkron::orthopoly::PolyFamily;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let set = build_index_set(3, 2)?;
    println!("I_2^3 has {} indices:", set.len());
    for (j, alpha) in set.iter().enumerate() {
        println!("  {j:>2} {alpha}");
    }

    let g1 = gram_linear(1, &set, PolyFamily::LegendreUniform)?;
    println!("G_1 has {} nonzeros, at most {} per row", g1.nnz(), g1.max_row_nnz());
    for (i, j, v) in split_lower(&g1)?.triplets() {
        println!("  L_1[{}, {}] = {v:.6}", set.get(i), set.get(j));
    }
    assert_eq!(set.len(), 10);
    assert!(g1.max_row_nnz() <= 2);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
