// Exact truncation preconditioners `P_r` next to their block Gauss-Seidel
// approximations `P̃_r` on a small affine system.

use sgkron::fem2d::build_mesh;
use sgkron::kronsys::{build_affine_system, AlphaBar};
use sgkron::pcg::{pcg_solve, SolverConfig};
use sgkron::precond::{build_sbgs_from_operator, build_trunc_exact, build_trunc_inner, INNER_TOL};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let sys = build_affine_system(build_mesh(3)?, 4, 2, 4.0, AlphaBar::Auto)?;
    let op = &sys.operator;
    let cfg = SolverConfig::default();
    println!(" r  P_r(dense)  P_r(inner)  P~_r");
    for r in 0..=4 {
        let dense = build_trunc_exact(op.terms(), r)?;
        let inner = build_trunc_inner(op.terms(), r, INNER_TOL)?;
        let sbgs = build_sbgs_from_operator(op, r)?;
        let count = |p| pcg_solve(op, p, &sys.rhs, &cfg).map(|(_, rep)| rep.iterations);
        let (a, b, c) = (count(&dense)?, count(&inner)?, count(&sbgs)?);
        println!("{r:>2} {a:>11} {b:>11} {c:>5}");
        assert!(a.abs_diff(b) <= 1);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
