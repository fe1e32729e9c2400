//! Preconditioned conjugate gradients with residual history and a Lanczos
//! estimate of the preconditioned condition number.

use std::time::Instant;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kronsys::{dot, BlockVector, KroneckerSumOperator};
use crate::precond::Preconditioner;

/// Norm used for the stopping test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualNorm {
    /// `‖r_k‖₂ / ‖f‖₂`
    #[default]
    Euclidean,
    /// `√(r_kᵀ P⁻¹ r_k) / √(fᵀ P⁻¹ f)`
    Preconditioned,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub residual_norm: ResidualNorm,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 1000,
            residual_norm: ResidualNorm::Euclidean,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// Relative residuals, starting with the initial one.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    /// Filled in by callers that time preconditioner construction.
    pub setup_seconds: f64,
    pub solve_seconds: f64,
    /// CG step lengths `α_k`.
    pub alphas: Vec<f64>,
    /// CG direction updates `β_k`.
    pub betas: Vec<f64>,
}

impl SolveReport {
    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(f64::NAN)
    }
}

/// Solves `A x = f` from a zero initial guess.
///
/// A zero right-hand side returns the zero solution after 0 iterations.
/// Non-positive curvature `pᵀAp` or a non-positive `rᵀP⁻¹r` is reported as
/// [`Error::Breakdown`].
pub fn pcg_solve(
    op: &KroneckerSumOperator,
    pre: &Preconditioner,
    f: &BlockVector,
    cfg: &SolverConfig,
) -> Result<(BlockVector, SolveReport)> {
    if f.nx() != op.nx() || f.ny() != op.ny() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            found: f.len(),
        });
    }
    if !(cfg.tol > 0.0) {
        return Err(Error::InvalidConfig(format!("tolerance must be positive, got {}", cfg.tol)));
    }
    let start = Instant::now();
    let n = f.len();
    let mut x = vec![0.0; n];
    let mut report = SolveReport::default();
    let f_norm = f.norm();
    if f_norm == 0.0 {
        report.residual_history.push(0.0);
        report.converged = true;
        report.solve_seconds = start.elapsed().as_secs_f64();
        return Ok((BlockVector::zeros(f.nx(), f.ny()), report));
    }

    let mut r = f.as_slice().to_vec();
    let mut z = vec![0.0; n];
    pre.apply_inverse_into(&r, &mut z)?;
    let mut rz = dot(&r, &z);
    if !(rz > 0.0) {
        return Err(Error::Breakdown {
            iteration: 0,
            reason: format!("rᵀP⁻¹r = {rz:e} is not positive"),
        });
    }
    let rz0 = rz;
    let relres = |r: &[f64], rz: f64| match cfg.residual_norm {
        ResidualNorm::Euclidean => dot(r, r).sqrt() / f_norm,
        ResidualNorm::Preconditioned => (rz.max(0.0) / rz0).sqrt(),
    };
    report.residual_history.push(1.0);
    let mut p = z.clone();
    let mut q = vec![0.0; n];

    while report.iterations < cfg.max_iter {
        op.apply_into(&p, &mut q);
        let pq = dot(&p, &q);
        if !(pq > 0.0) {
            return Err(Error::Breakdown {
                iteration: report.iterations,
                reason: format!("pᵀAp = {pq:e} is not positive"),
            });
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        report.alphas.push(alpha);
        report.iterations += 1;

        let euclid_done = cfg.residual_norm == ResidualNorm::Euclidean
            && relres(&r, 0.0) <= cfg.tol;
        if euclid_done {
            report.residual_history.push(relres(&r, 0.0));
            report.converged = true;
            break;
        }
        pre.apply_inverse_into(&r, &mut z)?;
        let rz_new = dot(&r, &z);
        let res = relres(&r, rz_new);
        report.residual_history.push(res);
        if res <= cfg.tol {
            report.converged = true;
            break;
        }
        if !(rz_new > 0.0) {
            return Err(Error::Breakdown {
                iteration: report.iterations,
                reason: format!("rᵀP⁻¹r = {rz_new:e} is not positive"),
            });
        }
        let beta = rz_new / rz;
        report.betas.push(beta);
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        rz = rz_new;
    }
    report.solve_seconds = start.elapsed().as_secs_f64();
    Ok((BlockVector::from_vec(f.nx(), f.ny(), x)?, report))
}

/// Ratio of extreme Ritz values of the Lanczos matrix assembled from the
/// CG coefficients. A lower estimate of `κ(P⁻¹A)`.
pub fn estimate_condition(report: &SolveReport) -> Result<f64> {
    let k = report.alphas.len();
    if k == 0 {
        return Err(Error::Unavailable(
            "condition estimate needs at least one CG iteration".into(),
        ));
    }
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        let mut d = 1.0 / report.alphas[i];
        if i > 0 {
            d += report.betas[i - 1] / report.alphas[i - 1];
        }
        t[(i, i)] = d;
        if i + 1 < k {
            let e = report.betas[i].sqrt() / report.alphas[i];
            t[(i, i + 1)] = e;
            t[(i + 1, i)] = e;
        }
    }
    let eig = SymmetricEigen::new(t).eigenvalues;
    let lo = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(lo > 0.0) {
        return Err(Error::Unavailable(format!("smallest Ritz value {lo:e} is not positive")));
    }
    Ok(hi / lo)
}
