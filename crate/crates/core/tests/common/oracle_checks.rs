//! Oracle comparisons shared by the oracle tests and the acceptance suite.
//! Each returns the largest observed error.

use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use sgkron::fem2d::{build_mesh, fourier_coefficient, LognormalExpansion};
use sgkron::gram::{gram_general, gram_linear};
use sgkron::kronsys::{build_affine_system, build_lognormal_system, AlphaBar, BlockVector, KroneckerSumOperator};
use sgkron::multiindex::{build_index_set, MultiIndex};
use sgkron::orthopoly::PolyFamily;
use sgkron::precond::kron_factor;

use super::{hermite, legendre, normal_rule, uniform_rule};

pub const GRAM_TOL: f64 = 1e-12;
pub const LOGNORMAL_TOL: f64 = 1e-10;
pub const MATVEC_TOL: f64 = 1e-12;
pub const KRON_LS_TOL: f64 = 1e-10;

fn one_d(rule: &(Vec<f64>, Vec<f64>), f: impl Fn(f64) -> f64) -> f64 {
    rule.0.iter().zip(&rule.1).map(|(&y, &w)| w * f(y)).sum()
}

/// `G_m` for Legendre and Hermite families against tensor quadrature.
pub fn linear_gram_error() -> f64 {
    let set = build_index_set(3, 4).unwrap();
    let mut worst: f64 = 0.0;
    for (family, rule, poly) in [
        (PolyFamily::LegendreUniform, uniform_rule(12), legendre as fn(u32, f64) -> f64),
        (PolyFamily::HermiteGaussian, normal_rule(12), hermite as fn(u32, f64) -> f64),
    ] {
        for m in 1..=3 {
            let g = gram_linear(m, &set, family).unwrap();
            for (i, a) in set.iter().enumerate() {
                for (j, b) in set.iter().enumerate() {
                    let expect: f64 = (0..3)
                        .map(|s| {
                            let (p, q) = (a.entries()[s], b.entries()[s]);
                            one_d(&rule, |y| {
                                let lin = if s + 1 == m { y } else { 1.0 };
                                lin * poly(p, y) * poly(q, y)
                            })
                        })
                        .product();
                    worst = worst.max((g.get(i, j) - expect).abs());
                }
            }
        }
    }
    worst
}

/// Hermite `G_α` for every `α ∈ I_6^2` against tensor quadrature on `I_3^2`.
pub fn hermite_gram_error() -> f64 {
    let set = build_index_set(2, 3).unwrap();
    let doubled = build_index_set(2, 6).unwrap();
    let rule = normal_rule(16);
    let mut worst: f64 = 0.0;
    for alpha in doubled.iter() {
        let g = gram_general(alpha, &set).unwrap();
        for (i, b) in set.iter().enumerate() {
            for (j, c) in set.iter().enumerate() {
                let expect: f64 = (0..2)
                    .map(|s| {
                        let (a, p, q) = (alpha.entries()[s], b.entries()[s], c.entries()[s]);
                        one_d(&rule, |y| hermite(a, y) * hermite(p, y) * hermite(q, y))
                    })
                    .product();
                worst = worst.max((g.get(i, j) - expect).abs());
            }
        }
    }
    worst
}

/// Lognormal `a_α` against the Gauss–Hermite projection
/// `E[exp(1 + Σ b_m y_m) ψ_α(y)]`, relative to the mean field at the point.
/// Quadrature projections of small coefficients carry absolute round-off,
/// hence the mean-field scale.
pub fn lognormal_coefficient_error() -> f64 {
    let (n, sigma, alpha_bar) = (20, 2.0, 0.547);
    let expansion = LognormalExpansion::fourier(n, sigma, alpha_bar);
    let mean = expansion.mean_field();
    let rule = normal_rule(60);
    let b: Vec<_> = (1..=n).map(|m| fourier_coefficient(m, sigma, alpha_bar)).collect();
    let alphas = [
        MultiIndex::zero(4),
        MultiIndex::new(vec![1, 0, 0, 0]),
        MultiIndex::new(vec![3, 0, 0, 0]),
        MultiIndex::new(vec![1, 2, 0, 1]),
        MultiIndex::new(vec![0, 0, 4, 0]),
    ];
    let mut worst: f64 = 0.0;
    for &(x, y) in &[(0.1, 0.2), (0.37, 0.81), (0.5, 0.5), (0.93, 0.07)] {
        let scale = mean.eval(x, y);
        for alpha in &alphas {
            let mut expect = 1f64.exp();
            for (m, field) in b.iter().enumerate() {
                let bm = field.eval(x, y);
                let a = alpha.entries().get(m).copied().unwrap_or(0);
                expect *= one_d(&rule, |t| (bm * t).exp() * hermite(a, t));
            }
            let got = expansion.coefficient(alpha).unwrap().eval(x, y);
            worst = worst.max((got - expect).abs() / scale);
        }
    }
    worst
}

fn matvec_error_for(op: &KroneckerSumOperator, rng: &mut StdRng) -> f64 {
    assert!(op.dim() <= 2000);
    let dense = op.assemble_dense().unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let data: Vec<f64> = (0..op.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v = BlockVector::from_vec(op.nx(), op.ny(), data.clone()).unwrap();
        let fast = DVector::from_column_slice(op.matvec(&v).unwrap().as_slice());
        let slow = &dense * DVector::from_vec(data);
        worst = worst.max((&fast - &slow).norm() / slow.norm());
    }
    worst
}

/// Relative error of the Kronecker matvec against dense assembly over 20
/// random vectors per operator.
pub fn matvec_error() -> f64 {
    let mut rng = StdRng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for sigma in [2.0, 4.0] {
        let sys = build_affine_system(build_mesh(3).unwrap(), 3, 2, sigma, AlphaBar::Auto).unwrap();
        worst = worst.max(matvec_error_for(&sys.operator, &mut rng));
    }
    let sys = build_lognormal_system(build_mesh(3).unwrap(), 2, 2, 20, 2.0, 0.547).unwrap();
    worst.max(matvec_error_for(&sys.operator, &mut rng))
}

/// Brute-force least squares `min_Q ‖A − Q ⊗ K_0‖_F` over all entries of `Q`.
fn brute_force_kron(op: &KroneckerSumOperator) -> DMatrix<f64> {
    let (nx, ny) = (op.nx(), op.ny());
    let n = nx * ny;
    let a = op.assemble_dense().unwrap();
    let k0 = op.terms()[0].k.to_dense();
    let mut design = DMatrix::<f64>::zeros(n * n, ny * ny);
    for i in 0..ny {
        for j in 0..ny {
            let col = i * ny + j;
            for s in 0..nx {
                for t in 0..nx {
                    design[((i * nx + s) * n + j * nx + t, col)] = k0[(s, t)];
                }
            }
        }
    }
    let rhs = DVector::from_iterator(
        n * n,
        (0..n).flat_map(|r| (0..n).map(move |c| (r, c))).map(|(r, c)| a[(r, c)]),
    );
    let q = design.svd(true, true).solve(&rhs, 1e-14).unwrap();
    DMatrix::from_fn(ny, ny, |i, j| q[i * ny + j])
}

/// Largest entry difference between the Kronecker factor and the
/// brute-force least-squares fit, affine and lognormal.
pub fn kron_least_squares_error() -> f64 {
    let affine = build_affine_system(build_mesh(2).unwrap(), 2, 2, 2.0, AlphaBar::Auto).unwrap();
    let lognormal = build_lognormal_system(build_mesh(2).unwrap(), 2, 1, 20, 2.0, 0.547).unwrap();
    [&affine.operator, &lognormal.operator]
        .into_iter()
        .map(|op| {
            let g = kron_factor(op.terms()).unwrap();
            (g.to_dense() - brute_force_kron(op)).amax()
        })
        .fold(0.0, f64::max)
}
