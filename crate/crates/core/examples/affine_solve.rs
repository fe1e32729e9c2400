// Solves the affine benchmark with the mean-based, Kronecker and block
// Gauss-Seidel preconditioners and prints iteration counts.

use sgkron::fem2d::build_mesh;
use sgkron::kronsys::{build_affine_system, AlphaBar};
use sgkron::pcg::{estimate_condition, pcg_solve, SolverConfig};
use sgkron::precond::{build_kron, build_mean_based, build_sbgs_from_operator};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let sys = build_affine_system(build_mesh(3)?, 4, 2, 2.0, AlphaBar::Auto)?;
    let op = &sys.operator;
    println!("{} spatial x {} parametric = {} unknowns", op.nx(), op.ny(), op.dim());

    let cfg = SolverConfig::default();
    let candidates = vec![
        ("P_0", build_mean_based(sys.k0(), op.ny())?),
        ("P_kron", build_kron(op)?),
        ("P~_1", build_sbgs_from_operator(op, 1)?),
        ("P~_4", build_sbgs_from_operator(op, 4)?),
    ];
    for (name, pre) in &candidates {
        let (_, report) = pcg_solve(op, pre, &sys.rhs, &cfg)?;
        println!(
            "{name:<7} {:>3} iterations, relres {:.2e}, κ ≈ {:.3}",
            report.iterations,
            report.final_residual(),
            estimate_condition(&report)?
        );
        assert!(report.converged);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
