//! Small-scale invariant checks run by `sgkron verify`.

use std::time::Instant;

use nalgebra::DVector;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use super::{preset, run_config, to_csv, Decay, ExperimentConfig, OneOrMany, PrecondSpec, Problem};
use crate::fem2d::build_mesh;
use crate::gram::{gram_linear, split_lower};
use crate::kronsys::{
    build_affine_system, build_lognormal_system, AlphaBar, BlockVector, KroneckerSumOperator,
};
use crate::multiindex::{binomial, build_index_set};
use crate::orthopoly::PolyFamily;
use crate::pcg::{pcg_solve, SolverConfig};
use crate::precond::{build_kron, build_mean_based, kron_factor, Preconditioner, Sbgs};
use crate::quadrature::{gauss_hermite, gauss_legendre};
use crate::spectral;

type Check = std::result::Result<(), String>;

/// Recurrence constant `c_j` of the family under test.
pub type Recurrence = fn(PolyFamily, u32) -> f64;

fn library_recurrence(family: PolyFamily, j: u32) -> f64 {
    family.recurrence_c(j).unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, Copy)]
pub struct SuiteOptions {
    pub recurrence: Recurrence,
    pub seed: u64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            recurrence: library_recurrence,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PropertyResult {
    pub name: &'static str,
    pub outcome: Check,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub results: Vec<PropertyResult>,
    pub seconds: f64,
}

impl SuiteReport {
    pub fn first_failure(&self) -> Option<&PropertyResult> {
        self.results.iter().find(|r| r.outcome.is_err())
    }
}

/// Budget for the whole suite; exceeding it is reported, not fatal.
pub const SUITE_BUDGET_SECONDS: f64 = 300.0;

pub fn property_names() -> Vec<&'static str> {
    PROPERTIES.iter().map(|(n, _)| *n).collect()
}

const PROPERTIES: [(&str, fn(&SuiteOptions) -> Check); 12] = [
    ("index-set-dimension", index_set_dimension),
    ("recurrence-orthonormality", recurrence_orthonormality),
    ("gram-linear-vs-quadrature", gram_linear_vs_quadrature),
    ("gram-structure", gram_structure),
    ("kron-matvec-vs-dense", kron_matvec_vs_dense),
    ("kron-least-squares", kron_least_squares),
    ("sbgs-dense-identity", sbgs_dense_identity),
    ("sbgs-apply-vs-dense", sbgs_apply_vs_dense),
    ("spectral-inclusions", spectral_inclusions),
    ("lognormal-sbgs-spd", lognormal_sbgs_spd),
    ("pcg-exact-preconditioner", pcg_exact_preconditioner),
    ("csv-determinism", csv_determinism),
];

pub fn run_suite(opts: &SuiteOptions) -> SuiteReport {
    let start = Instant::now();
    let results = PROPERTIES
        .iter()
        .map(|(name, f)| {
            let t = Instant::now();
            let outcome = std::panic::catch_unwind(|| f(opts))
                .unwrap_or_else(|_| Err("panicked".to_string()));
            PropertyResult {
                name,
                outcome,
                seconds: t.elapsed().as_secs_f64(),
            }
        })
        .collect();
    SuiteReport {
        results,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn index_set_dimension(_: &SuiteOptions) -> Check {
    for m in 1..=8 {
        for k in 0..=6u32 {
            let set = build_index_set(m, k).map_err(err)?;
            let expect = binomial((m + k as usize) as u64, k as u64).map_err(err)?;
            ensure(set.len() == expect, || format!("|I_{k}^{m}| = {} != {expect}", set.len()))?;
            for w in set.indices().windows(2) {
                let (a, b) = (&w[0], &w[1]);
                ensure(a.total_degree() <= b.total_degree(), || {
                    format!("order violates total degree at {a} {b}")
                })?;
            }
        }
    }
    Ok(())
}

/// Orthonormal polynomials from the recurrence constants under test.
fn eval_with(c: Recurrence, family: PolyFamily, j: u32, y: f64) -> f64 {
    let (mut prev, mut cur) = (0.0, 1.0);
    for n in 1..=j {
        let c_prev = if n > 1 { c(family, n - 1) } else { 0.0 };
        let next = (y * cur - c_prev * prev) / c(family, n);
        prev = cur;
        cur = next;
    }
    cur
}

fn family_rule(family: PolyFamily, n: usize) -> (Vec<f64>, Vec<f64>) {
    match family {
        PolyFamily::LegendreUniform => {
            let (x, w) = gauss_legendre(n);
            (x, w.into_iter().map(|w| w / 2.0).collect())
        }
        PolyFamily::HermiteGaussian => gauss_hermite(n),
    }
}

fn recurrence_orthonormality(opts: &SuiteOptions) -> Check {
    for family in [PolyFamily::LegendreUniform, PolyFamily::HermiteGaussian] {
        let (x, w) = family_rule(family, 12);
        for i in 0..=8u32 {
            for j in 0..=i {
                let s: f64 = x
                    .iter()
                    .zip(&w)
                    .map(|(&y, &w)| w * eval_with(opts.recurrence, family, i, y) * eval_with(opts.recurrence, family, j, y))
                    .sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                ensure((s - expect).abs() < 1e-10, || {
                    format!("{family:?}: <P_{i}, P_{j}> = {s:.3e}, expected {expect}")
                })?;
            }
        }
    }
    Ok(())
}

fn gram_linear_vs_quadrature(opts: &SuiteOptions) -> Check {
    let set = build_index_set(3, 3).map_err(err)?;
    for family in [PolyFamily::LegendreUniform, PolyFamily::HermiteGaussian] {
        let (x, w) = family_rule(family, 10);
        for m in 1..=3 {
            let g = gram_linear(m, &set, family).map_err(err)?;
            for (i, a) in set.iter().enumerate() {
                for (j, b) in set.iter().enumerate() {
                    let mut expect = 1.0;
                    for slot in 0..3 {
                        let (ai, bj) = (a.entries()[slot], b.entries()[slot]);
                        expect *= x
                            .iter()
                            .zip(&w)
                            .map(|(&y, &w)| {
                                let lin = if slot + 1 == m { y } else { 1.0 };
                                w * lin
                                    * eval_with(opts.recurrence, family, ai, y)
                                    * eval_with(opts.recurrence, family, bj, y)
                            })
                            .sum::<f64>();
                    }
                    let got = g.get(i, j);
                    ensure((got - expect).abs() < 1e-12, || {
                        format!("{family:?} G_{m}[{a},{b}] = {got}, quadrature {expect}")
                    })?;
                }
            }
        }
    }
    Ok(())
}

fn gram_structure(_: &SuiteOptions) -> Check {
    for params in 1..=8 {
        for k in 1..=6 {
            let set = build_index_set(params, k).map_err(err)?;
            for m in 1..=params {
                let g = gram_linear(m, &set, PolyFamily::LegendreUniform).map_err(err)?;
                ensure(g.max_row_nnz() <= 2, || format!("G_{m} (M={params}, k={k}) row with > 2 entries"))?;
                ensure(g.diagonal().iter().all(|&d| d == 0.0), || {
                    format!("G_{m} (M={params}, k={k}) has a nonzero diagonal")
                })?;
                let l = split_lower(&g).map_err(err)?;
                ensure(l.max_row_nnz() <= 1 && l.transpose().max_row_nnz() <= 1, || {
                    format!("L_{m} (M={params}, k={k}) has > 1 entry in a row or column")
                })?;
            }
        }
    }
    Ok(())
}

fn random_block(rng: &mut StdRng, nx: usize, ny: usize) -> BlockVector {
    let data = (0..nx * ny).map(|_| rng.gen_range(-1.0..1.0)).collect();
    BlockVector::from_vec(nx, ny, data).expect("sized")
}

fn tiny_affine(decay: Decay) -> std::result::Result<crate::kronsys::AffineSystem, String> {
    build_affine_system(build_mesh(2).map_err(err)?, 3, 2, decay.sigma(), AlphaBar::Auto).map_err(err)
}

fn tiny_lognormal() -> std::result::Result<crate::kronsys::LognormalSystem, String> {
    build_lognormal_system(build_mesh(2).map_err(err)?, 3, 2, 20, 2.0, 0.547).map_err(err)
}

fn check_matvec(op: &KroneckerSumOperator, rng: &mut StdRng) -> Check {
    let dense = op.assemble_dense().map_err(err)?;
    for _ in 0..5 {
        let v = random_block(rng, op.nx(), op.ny());
        let fast = op.matvec(&v).map_err(err)?;
        let slow = &dense * DVector::from_column_slice(v.as_slice());
        let diff = (DVector::from_column_slice(fast.as_slice()) - &slow).norm();
        ensure(diff <= 1e-12 * slow.norm().max(1.0), || format!("matvec mismatch {diff:e}"))?;
    }
    Ok(())
}

fn kron_matvec_vs_dense(opts: &SuiteOptions) -> Check {
    let mut rng = StdRng::seed_from_u64(opts.seed);
    check_matvec(&tiny_affine(Decay::Slow)?.operator, &mut rng)?;
    check_matvec(&tiny_lognormal()?.operator, &mut rng)
}

fn kron_least_squares(_: &SuiteOptions) -> Check {
    let sys = tiny_affine(Decay::Slow)?;
    let op = &sys.operator;
    let g = kron_factor(op.terms()).map_err(err)?;
    let a = op.assemble_dense().map_err(err)?;
    let k0 = op.terms()[0].k.to_dense();
    let k0_sq = k0.dot(&k0);
    let nx = op.nx();
    for i in 0..op.ny() {
        for j in 0..op.ny() {
            let block = a.view((i * nx, j * nx), (nx, nx));
            let q = block.dot(&k0) / k0_sq;
            ensure((q - g.get(i, j)).abs() < 1e-10, || {
                format!("G[{i},{j}] = {} vs least squares {q}", g.get(i, j))
            })?;
        }
    }
    match build_kron(op).map_err(err)? {
        Preconditioner::Kron(_) => Ok(()),
        _ => Err("unexpected preconditioner".into()),
    }
}

fn sbgs_dense_identity(_: &SuiteOptions) -> Check {
    for decay in [Decay::Fast, Decay::Slow] {
        let sys = tiny_affine(decay)?;
        for r in 0..=3 {
            let terms = &sys.operator.terms()[..r + 1];
            let sbgs = Sbgs::from_terms(terms).map_err(err)?;
            let tilde = sbgs.assemble_dense().map_err(err)?;
            let p_r = KroneckerSumOperator::new(terms.to_vec()).map_err(err)?.assemble_dense().map_err(err)?;
            let (d, s) = sbgs.dense_parts();
            let d_inv_st = d.clone().cholesky().ok_or("D_0 not SPD")?.solve(&s.transpose());
            let expect = &p_r + &s * d_inv_st;
            let diff = (&tilde - &expect).amax();
            ensure(diff <= 1e-10 * p_r.amax(), || format!("{decay} r={r}: identity off by {diff:e}"))?;
        }
    }
    Ok(())
}

fn sbgs_apply_vs_dense(opts: &SuiteOptions) -> Check {
    let mut rng = StdRng::seed_from_u64(opts.seed + 1);
    let sys = tiny_lognormal()?;
    for r in [0, 2, 5] {
        let sbgs = Sbgs::from_terms(&sys.ordered_terms[..r + 1]).map_err(err)?;
        let dense = sbgs.assemble_dense().map_err(err)?;
        let pre = Preconditioner::Sbgs(sbgs);
        let v = random_block(&mut rng, sys.operator.nx(), sys.operator.ny());
        let z = pre.apply_inverse(&v).map_err(err)?;
        let back = &dense * DVector::from_column_slice(z.as_slice());
        let diff = (back - DVector::from_column_slice(v.as_slice())).norm();
        ensure(diff < 1e-10 * v.norm(), || format!("r={r}: P̃_r P̃_r⁻¹ v differs from v by {diff:e}"))?;
    }
    Ok(())
}

fn spectral_inclusions(_: &SuiteOptions) -> Check {
    for decay in [Decay::Fast, Decay::Slow] {
        let sys = tiny_affine(decay)?;
        let report = spectral::report(&sys, &[0, 1, 2, 3]).map_err(err)?;
        if let Some(c) = report.claims.iter().find(|c| !c.pass) {
            return Err(format!("{decay}: {c}"));
        }
    }
    Ok(())
}

fn lognormal_sbgs_spd(_: &SuiteOptions) -> Check {
    let sys = tiny_lognormal()?;
    for r in 0..8.min(sys.ordered_terms.len()) {
        let sbgs = Sbgs::from_terms(&sys.ordered_terms[..r + 1]).map_err(err)?;
        let dense = sbgs.assemble_dense().map_err(err)?;
        spectral::dense_cholesky(&dense).map_err(|e| format!("r={r}: {e}"))?;
    }
    Ok(())
}

fn pcg_exact_preconditioner(_: &SuiteOptions) -> Check {
    let sys = tiny_affine(Decay::Slow)?;
    let op = &sys.operator;
    let exact = crate::precond::build_trunc_exact(op.terms(), 3).map_err(err)?;
    let cfg = SolverConfig {
        tol: 1e-10,
        ..SolverConfig::default()
    };
    let (_, rep) = pcg_solve(op, &exact, &sys.rhs, &cfg).map_err(err)?;
    ensure(rep.converged && rep.iterations <= 2, || {
        format!("P_M = A should converge at once, took {}", rep.iterations)
    })?;
    let mean = build_mean_based(&op.terms()[0].k, op.ny()).map_err(err)?;
    let (x, rep) = pcg_solve(op, &mean, &sys.rhs, &cfg).map_err(err)?;
    let dense = op.assemble_dense().map_err(err)?;
    let expect = dense
        .cholesky()
        .ok_or("A not SPD")?
        .solve(&DVector::from_column_slice(sys.rhs.as_slice()));
    let diff = (DVector::from_column_slice(x.as_slice()) - &expect).norm() / expect.norm();
    ensure(rep.converged && diff < 1e-8, || format!("mean-based PCG error {diff:e}"))
}

fn csv_determinism(_: &SuiteOptions) -> Check {
    let cfg = ExperimentConfig {
        mesh_level: OneOrMany::One(3),
        params: OneOrMany::One(3),
        degree: OneOrMany::One(2),
        timing: false,
        preconditioners: vec![PrecondSpec::Mean, PrecondSpec::Kron, PrecondSpec::Sbgs(2), PrecondSpec::TruncExact(1)],
        ..preset("table3").map_err(err)?
    };
    let a = to_csv(&run_config(&cfg).map_err(err)?);
    let b = to_csv(&run_config(&cfg).map_err(err)?);
    ensure(a == b, || "CSV differs between identical runs".into())?;
    let log = ExperimentConfig {
        problem: Problem::Lognormal,
        decay: OneOrMany::One(Decay::Slow),
        ..cfg
    };
    let rows = run_config(&log).map_err(err)?;
    ensure(rows.iter().all(|r| r.converged || r.precond.contains('[')), || {
        "lognormal run failed to converge".into()
    })
}
