//! Analytic spectral-equivalence constants and dense checks of the
//! eigenvalue inclusions they imply.

use std::fmt;

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kronsys::{AffineSystem, LognormalSystem};
use crate::precond::Sbgs;

/// Largest dimension accepted by the dense eigen checks.
pub const SPECTRAL_LIMIT: usize = 2000;

/// Slack applied to every inclusion test.
pub const SLACK: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundSet {
    pub r: usize,
    pub tau: f64,
    pub tau_r: f64,
    pub theta_r: f64,
    pub big_theta_r: f64,
    pub delta_r: f64,
    pub a0_min: f64,
    pub a0_max: f64,
}

/// `θ_r = (1−τ) a₀ᵐⁱⁿ / (a₀ᵐᵃˣ + a₀ᵐⁱⁿ τ_r)`,
/// `Θ_r = (a₀ᵐᵃˣ + a₀ᵐⁱⁿ τ) / ((1−τ_r) a₀ᵐⁱⁿ)` and
/// `δ_r = τ_r² / (1 − τ_r)`, where `τ_r = Σ_{m≤r} ‖a_m‖_∞ / a₀ᵐⁱⁿ`.
pub fn compute_bounds(r: usize, a0_min: f64, a0_max: f64, tau: f64, tau_r: f64) -> Result<BoundSet> {
    if !(tau < 1.0) {
        return Err(Error::InvalidConfig(format!("τ = {tau} violates τ < 1")));
    }
    if !(a0_min > 0.0) || a0_max < a0_min {
        return Err(Error::InvalidConfig(format!(
            "need 0 < a0_min ≤ a0_max, got {a0_min}, {a0_max}"
        )));
    }
    if !(0.0..=tau).contains(&tau_r) && (tau_r - tau).abs() > 1e-14 {
        return Err(Error::InvalidConfig(format!("need 0 ≤ τ_r ≤ τ, got τ_r = {tau_r}, τ = {tau}")));
    }
    Ok(BoundSet {
        r,
        tau,
        tau_r,
        theta_r: (1.0 - tau) * a0_min / (a0_max + a0_min * tau_r),
        big_theta_r: (a0_max + a0_min * tau) / ((1.0 - tau_r) * a0_min),
        delta_r: tau_r * tau_r / (1.0 - tau_r),
        a0_min,
        a0_max,
    })
}

/// Extreme eigenvalues of the pencil `A x = λ B x`, i.e. of `B⁻¹A`.
///
/// `B` must be SPD; `A` only symmetric.
pub fn eig_range(b: &DMatrix<f64>, a: &DMatrix<f64>) -> Result<(f64, f64)> {
    let n = b.nrows();
    if b.ncols() != n || a.nrows() != n || a.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.nrows(),
        });
    }
    if n > SPECTRAL_LIMIT {
        return Err(Error::SizeGuard {
            size: n,
            limit: SPECTRAL_LIMIT,
        });
    }
    let l = dense_cholesky(b)?;
    // C = L⁻¹ A L⁻ᵀ
    let mut c = a.clone();
    l.solve_lower_triangular_mut(&mut c);
    let mut ct = c.transpose();
    l.solve_lower_triangular_mut(&mut ct);
    let c = (&ct + ct.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c).eigenvalues;
    let lo = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok((lo, hi))
}

/// Lower Cholesky factor, reporting the failing pivot.
pub fn dense_cholesky(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    match Cholesky::new(m.clone()) {
        Some(c) => Ok(c.l()),
        None => {
            // locate the first non-positive pivot for the error message
            let n = m.nrows();
            let mut l = DMatrix::<f64>::zeros(n, n);
            for j in 0..n {
                let mut d = m[(j, j)];
                for k in 0..j {
                    d -= l[(j, k)] * l[(j, k)];
                }
                if !(d > 0.0) {
                    return Err(Error::NotPositiveDefinite { pivot: j, value: d });
                }
                let d = d.sqrt();
                l[(j, j)] = d;
                for i in j + 1..n {
                    let mut s = m[(i, j)];
                    for k in 0..j {
                        s -= l[(i, k)] * l[(j, k)];
                    }
                    l[(i, j)] = s / d;
                }
            }
            Err(Error::NotPositiveDefinite {
                pivot: n,
                value: f64::NAN,
            })
        }
    }
}

/// Outcome of one inclusion claim.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Claim {
    pub name: String,
    pub r: usize,
    pub bound: (f64, f64),
    pub observed: (f64, f64),
    /// `false` when the claim's hypotheses fail (e.g. indefinite `P_r`).
    pub applicable: bool,
    pub pass: bool,
}

impl Claim {
    fn check(name: &str, r: usize, bound: (f64, f64), observed: (f64, f64)) -> Self {
        let pass = observed.0 >= bound.0 - SLACK && observed.1 <= bound.1 + SLACK;
        Self {
            name: name.to_string(),
            r,
            bound,
            observed,
            applicable: true,
            pass,
        }
    }

    fn not_applicable(name: &str, r: usize) -> Self {
        Self {
            name: name.to_string(),
            r,
            bound: (f64::NAN, f64::NAN),
            observed: (f64::NAN, f64::NAN),
            applicable: false,
            pass: true,
        }
    }

    /// Smallest distance from the observed interval to the bound edges.
    pub fn margin(&self) -> f64 {
        (self.observed.0 - self.bound.0).min(self.bound.1 - self.observed.1)
    }
}

impl fmt::Display for Claim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.applicable {
            return write!(f, "r={} {:<28} n/a", self.r, self.name);
        }
        write!(
            f,
            "r={} {:<28} bound [{:.6e}, {:.6e}] observed [{:.6e}, {:.6e}] margin {:.3e} {}",
            self.r,
            self.name,
            self.bound.0,
            self.bound.1,
            self.observed.0,
            self.observed.1,
            self.margin(),
            if self.pass { "PASS" } else { "FAIL" }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralReport {
    pub claims: Vec<Claim>,
}

impl SpectralReport {
    pub fn all_pass(&self) -> bool {
        self.claims.iter().all(|c| c.pass)
    }

    /// CSV with header `claim,r,bound_lo,bound_hi,observed_lo,observed_hi,applicable,pass`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("claim,r,bound_lo,bound_hi,observed_lo,observed_hi,applicable,pass\n");
        for c in &self.claims {
            s.push_str(&format!(
                "{},{},{:e},{:e},{:e},{:e},{},{}\n",
                c.name, c.r, c.bound.0, c.bound.1, c.observed.0, c.observed.1, c.applicable, c.pass
            ));
        }
        s
    }
}

impl fmt::Display for SpectralReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.claims {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

fn size_guard(n: usize) -> Result<()> {
    if n > SPECTRAL_LIMIT {
        Err(Error::SizeGuard {
            size: n,
            limit: SPECTRAL_LIMIT,
        })
    } else {
        Ok(())
    }
}

/// Dense checks of all inclusion claims for the truncation level `r` of an
/// affine system. `τ` is taken as the exact constant of the discretized
/// expansion, `Σ_{m=1}^M ‖a_m‖_∞ / a₀ᵐⁱⁿ`.
pub fn verify_inclusions(sys: &AffineSystem, r: usize) -> Result<Vec<Claim>> {
    let op = &sys.operator;
    size_guard(op.dim())?;
    let m = sys.params();
    let r_eff = r.min(m);
    let bounds = compute_bounds(r, sys.a0_min, sys.a0_max, sys.tau[m], sys.tau[r_eff])?;

    let a = op.assemble_dense()?;
    let p_r = op.truncated(r_eff + 1)?.assemble_dense()?;
    let sbgs = Sbgs::from_terms(&op.terms()[..r_eff + 1])?;
    let p_tilde = sbgs.assemble_dense()?;
    let (d0, s) = sbgs.dense_parts();
    let d0_chol = dense_cholesky(&d0)?;
    let mut d0_inv_st = s.transpose();
    d0_chol.solve_lower_triangular_mut(&mut d0_inv_st);
    let sds = d0_inv_st.transpose() * &d0_inv_st;

    let (tau_r, theta, big_theta, delta) =
        (bounds.tau_r, bounds.theta_r, bounds.big_theta_r, bounds.delta_r);
    let sigma_bound = tau_r;
    let jobs: Vec<(&str, &DMatrix<f64>, &DMatrix<f64>, (f64, f64))> = vec![
        ("P_r^-1 A", &p_r, &a, (theta, big_theta)),
        ("P_0^-1 P_r", &d0, &p_r, (1.0 - tau_r, 1.0 + tau_r)),
        ("P_r^-1 Ptilde_r", &p_r, &p_tilde, (1.0, 1.0 + delta)),
        ("Ptilde_r^-1 A", &p_tilde, &a, (theta / (1.0 + delta), big_theta)),
        ("lambda_min(I+S+S^T)", &d0, &p_r, (1.0 - tau_r, f64::INFINITY)),
        ("sigma_max(S)^2", &d0, &sds, (f64::NEG_INFINITY, sigma_bound * sigma_bound)),
    ];
    jobs.par_iter()
        .map(|(name, b, a, bound)| {
            let (lo, hi) = eig_range(b, a)?;
            let observed = match *name {
                "lambda_min(I+S+S^T)" => (lo, lo),
                "sigma_max(S)^2" => (hi, hi),
                _ => (lo, hi),
            };
            Ok(Claim::check(name, r, *bound, observed))
        })
        .collect()
}

/// Inclusion report over several truncation levels.
pub fn report(sys: &AffineSystem, levels: &[usize]) -> Result<SpectralReport> {
    let mut claims = Vec::new();
    for &r in levels {
        claims.extend(verify_inclusions(sys, r)?);
    }
    Ok(SpectralReport { claims })
}

/// Lognormal checks: `P̃_r` must be SPD for every `r`. When the dense `P_r`
/// is SPD as well, `Λ(P_r⁻¹P̃_r)` must have lower edge 1; otherwise that
/// claim is marked not applicable.
pub fn verify_lognormal(sys: &LognormalSystem, r: usize) -> Result<Vec<Claim>> {
    size_guard(sys.operator.dim())?;
    let count = (r + 1).min(sys.ordered_terms.len());
    let sbgs = Sbgs::from_terms(&sys.ordered_terms[..count])?;
    let p_tilde = sbgs.assemble_dense()?;
    let a = sys.operator.assemble_dense()?;
    let mut claims = Vec::new();

    let tilde_spd = dense_cholesky(&p_tilde).is_ok();
    claims.push(Claim {
        name: "Ptilde_r positive definite".into(),
        r,
        bound: (0.0, f64::INFINITY),
        observed: (f64::NAN, f64::NAN),
        applicable: true,
        pass: tilde_spd,
    });
    if tilde_spd {
        let (lo, hi) = eig_range(&p_tilde, &a)?;
        claims.push(Claim::check("Ptilde_r^-1 A", r, (0.0, f64::INFINITY), (lo, hi)));
    }

    let p_r = crate::kronsys::KroneckerSumOperator::new(sys.ordered_terms[..count].to_vec())?
        .assemble_dense()?;
    if dense_cholesky(&p_r).is_ok() {
        let (lo, hi) = eig_range(&p_r, &p_tilde)?;
        claims.push(Claim::check("P_r^-1 Ptilde_r", r, (1.0, f64::INFINITY), (lo, hi)));
    } else {
        claims.push(Claim::not_applicable("P_r^-1 Ptilde_r", r));
    }
    Ok(claims)
}

/// Whether the dense truncation `P_r` of a lognormal system is SPD.
pub fn lognormal_trunc_is_spd(sys: &LognormalSystem, r: usize) -> Result<bool> {
    size_guard(sys.operator.dim())?;
    let count = (r + 1).min(sys.ordered_terms.len());
    let p_r = crate::kronsys::KroneckerSumOperator::new(sys.ordered_terms[..count].to_vec())?
        .assemble_dense()?;
    Ok(dense_cholesky(&p_r).is_ok())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds_at_stated_constants() {
        let b = compute_bounds(0, 1.0, 1.0, 0.9999, 0.0).unwrap();
        assert!((b.theta_r - 1e-4).abs() < 1e-12);
        assert!((b.big_theta_r - 1.9999).abs() < 1e-12);
        assert_eq!(b.delta_r, 0.0);
        let b = compute_bounds(1, 1.0, 1.0, 0.9999, 0.9239).unwrap();
        assert!((b.delta_r - 0.9239f64.powi(2) / (1.0 - 0.9239)).abs() < 1e-12);
        assert!((b.delta_r - 11.217).abs() < 1e-3);
    }

    #[test]
    fn tau_at_least_one_is_rejected() {
        assert!(matches!(
            compute_bounds(0, 1.0, 1.0, 1.0, 0.0),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn eig_range_trivial_cases() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let (lo, hi) = eig_range(&a, &a).unwrap();
        assert!((lo - 1.0).abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 5.0]));
        let (lo, hi) = eig_range(&DMatrix::identity(2, 2), &d).unwrap();
        assert!((lo - 2.0).abs() < 1e-12 && (hi - 5.0).abs() < 1e-12);
    }

    #[test]
    fn indefinite_b_is_reported() {
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            eig_range(&b, &b),
            Err(Error::NotPositiveDefinite { pivot: 1, .. })
        ));
    }
}
