// Q1 stiffness matrices for the Fourier-mode coefficient fields, their
// sup norms and the partial sums `τ_r`.

use sgkron::fem2d::{assemble_stiffness, auto_alpha_bar, build_mesh, fourier_coefficient, sup_norm, tau_r};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mesh = build_mesh(3)?;
    println!("h = {}, {} interior nodes", mesh.h(), mesh.n_interior());
    for (label, sigma) in [("slow", 2.0), ("fast", 4.0)] {
        let alpha_bar = auto_alpha_bar(sigma)?;
        let fields: Vec<_> = (0..=6).map(|m| fourier_coefficient(m, sigma, alpha_bar)).collect();
        let norms: Vec<String> = fields.iter().map(|f| format!("{:.4}", sup_norm(f))).collect();
        println!("{label}: ᾱ = {alpha_bar:.4}, ‖a_m‖ = [{}]", norms.join(", "));
        println!("{label}: τ_6 = {:.4}", tau_r(&fields[1..], 1.0)?);
        let k1 = assemble_stiffness(&mesh, &fields[1]);
        println!("{label}: K_1 has {} nonzeros, asymmetry {:e}", k1.nnz(), k1.asymmetry());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
