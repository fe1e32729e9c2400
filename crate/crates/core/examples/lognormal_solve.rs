// Lognormal benchmark: block Gauss-Seidel preconditioners stay positive
// definite even where the truncated operator `P_r` does not.

use sgkron::fem2d::build_mesh;
use sgkron::kronsys::build_lognormal_system;
use sgkron::pcg::{pcg_solve, SolverConfig};
use sgkron::precond::{build_mean_based, build_sbgs_lognormal, Preconditioner};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let sys = build_lognormal_system(build_mesh(3)?, 3, 2, 20, 2.0, 0.547)?;
    let op = &sys.operator;
    println!("{} Kronecker terms, {} unknowns", op.terms().len(), op.dim());
    for (alpha, norm) in sys.ordering.iter().take(4) {
        println!("  α = {alpha}  ‖a_α‖ = {norm:.3}");
    }
    let cfg = SolverConfig::default();
    let (_, rep) = pcg_solve(op, &build_mean_based(sys.k0(), op.ny())?, &sys.rhs, &cfg)?;
    println!("P_0  : {} iterations", rep.iterations);
    for r in 1..=4 {
        let pre = build_sbgs_lognormal(&sys, r)?;
        if let Preconditioner::Sbgs(s) = &pre {
            print!("P~_{r} : {} distinct diagonal factorizations, ", s.distinct_factorizations());
        }
        let (_, rep) = pcg_solve(op, &pre, &sys.rhs, &cfg)?;
        println!("{} iterations", rep.iterations);
        assert!(rep.converged);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
