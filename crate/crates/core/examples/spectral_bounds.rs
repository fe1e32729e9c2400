// Checks the eigenvalue inclusions of the truncation and block
// Gauss-Seidel preconditioners by dense generalized eigensolves.

use sgkron::fem2d::build_mesh;
use sgkron::kronsys::{build_affine_system, AlphaBar};
use sgkron::spectral::{compute_bounds, report};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let sys = build_affine_system(build_mesh(2)?, 3, 2, 2.0, AlphaBar::Auto)?;
    let m = sys.params();
    for r in 0..=m {
        let b = compute_bounds(r, 1.0, 1.0, sys.tau[m], sys.tau[r])?;
        println!("r={r}: θ={:.4} Θ={:.4} δ={:.4}", b.theta_r, b.big_theta_r, b.delta_r);
    }
    let rep = report(&sys, &[0, 1, 2, 3])?;
    print!("{rep}");
    assert!(rep.all_pass());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
