//! Preconditioners for Kronecker-sum systems and their inverse actions.
//!
//! * mean-based `P_0 = I ⊗ K_0`
//! * Kronecker `P_⊗ = G ⊗ K_0` with the Frobenius-optimal `G`
//! * truncation `P_r` (first `r + 1` terms), applied exactly
//! * symmetric block Gauss-Seidel `P̃_r = (D + L) D⁻¹ (D + Lᵀ)` of `P_r`

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::cholesky::{factor_spd, CholeskyFactor, BATCH};
use crate::error::{Error, Result};
use crate::kronsys::{BlockVector, KronTerm, KroneckerSumOperator, LognormalSystem, DENSE_LIMIT};
use crate::pcg::{pcg_solve, SolverConfig};
use crate::sparse::{linear_combination, SparseSymMatrix};

/// Block-diagonal `I ⊗ K_0`.
#[derive(Debug, Clone)]
pub struct MeanBased {
    nx: usize,
    ny: usize,
    k0: Arc<CholeskyFactor>,
}

impl MeanBased {
    pub fn new(k0: Arc<CholeskyFactor>, ny: usize) -> Self {
        Self {
            nx: k0.dim(),
            ny,
            k0,
        }
    }

    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        out.copy_from_slice(v);
        out.par_chunks_mut(self.nx * BATCH)
            .for_each(|blocks| self.k0.solve_many_in_place(blocks));
    }
}

/// `G ⊗ K_0` with `G = Σ_m ⟨K_m, K_0⟩_F / ⟨K_0, K_0⟩_F · G_m`, the minimizer
/// of `‖A − Q ⊗ K_0‖_F` over `Q`.
#[derive(Debug, Clone)]
pub struct KronPrecond {
    nx: usize,
    ny: usize,
    g: SparseSymMatrix,
    g_factor: CholeskyFactor,
    k0: Arc<CholeskyFactor>,
}

impl KronPrecond {
    pub fn g(&self) -> &SparseSymMatrix {
        &self.g
    }

    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        let (nx, ny) = (self.nx, self.ny);
        let mut w = v.to_vec();
        w.par_chunks_mut(nx * BATCH)
            .for_each(|b| self.k0.solve_many_in_place(b));
        // transpose to spatial-major, solve with G for each spatial node
        let mut wt = vec![0.0; nx * ny];
        wt.par_chunks_mut(ny * BATCH).enumerate().for_each(|(chunk, rows)| {
            for (local, row) in rows.chunks_mut(ny).enumerate() {
                let s = chunk * BATCH + local;
                for (j, r) in row.iter_mut().enumerate() {
                    *r = w[j * nx + s];
                }
            }
            self.g_factor.solve_many_in_place(rows);
        });
        out.par_chunks_mut(nx).enumerate().for_each(|(j, block)| {
            for (s, b) in block.iter_mut().enumerate() {
                *b = wt[s * ny + j];
            }
        });
    }
}

/// Frobenius-optimal parametric factor for the Kronecker preconditioner.
/// The first term's `K` is taken as `K_0`.
pub fn kron_factor(terms: &[KronTerm]) -> Result<SparseSymMatrix> {
    let first = terms
        .first()
        .ok_or_else(|| Error::InvalidConfig("empty term list".into()))?;
    let k0 = &first.k;
    let k0_norm = k0.frobenius_dot(k0);
    let weights: Vec<f64> = terms
        .iter()
        .map(|t| t.k.frobenius_dot(k0) / k0_norm)
        .collect();
    let parts: Vec<(f64, &SparseSymMatrix)> = weights
        .iter()
        .zip(terms)
        .map(|(&w, t)| (w, &t.g))
        .collect();
    linear_combination(first.g.dim(), &parts)
}

/// Truncation preconditioner `P_r` applied exactly.
#[derive(Debug, Clone)]
pub enum TruncExact {
    /// Dense Cholesky of the materialized `P_r` (small problems only).
    Dense { l: DMatrix<f64> },
    /// `P_r⁻¹ v` by inner conjugate gradients on `P_r`, preconditioned with
    /// `P̃_r`, to a relative residual of `inner.tol`.
    Inner {
        op: KroneckerSumOperator,
        sbgs: Box<Sbgs>,
        inner: SolverConfig,
    },
}

impl TruncExact {
    fn apply_into(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        match self {
            TruncExact::Dense { l } => {
                let mut x = nalgebra::DVector::from_column_slice(v);
                l.solve_lower_triangular_mut(&mut x);
                l.tr_solve_lower_triangular_mut(&mut x);
                out.copy_from_slice(x.as_slice());
                Ok(())
            }
            TruncExact::Inner { op, sbgs, inner } => {
                let rhs = BlockVector::from_vec(op.nx(), op.ny(), v.to_vec())?;
                let pre = Preconditioner::Sbgs((**sbgs).clone());
                let (x, report) = pcg_solve(op, &pre, &rhs, inner)?;
                if !report.converged {
                    return Err(Error::Unavailable(format!(
                        "inner truncation solve stalled at relative residual {:e}",
                        report.final_residual()
                    )));
                }
                out.copy_from_slice(x.as_slice());
                Ok(())
            }
        }
    }
}

/// Symmetric block Gauss-Seidel approximation of a Kronecker sum
/// `P = D + L + Lᵀ`, where `D` is block diagonal and `L` strictly lower
/// block triangular.
#[derive(Debug, Clone)]
pub struct Sbgs {
    nx: usize,
    ny: usize,
    /// distinct diagonal-block factorizations
    factors: Vec<Arc<CholeskyFactor>>,
    /// diagonal-block matrices matching `factors`
    diag_blocks: Vec<Arc<SparseSymMatrix>>,
    /// block index -> factor index
    block_factor: Vec<usize>,
    /// per term: strictly lower part of G, strictly upper part of G, K
    lower: Vec<(SparseSymMatrix, SparseSymMatrix, Arc<SparseSymMatrix>)>,
    /// forward-sweep schedule: blocks in one level depend only on earlier
    /// levels; within a level blocks sharing a factor are contiguous
    forward_levels: Vec<Vec<usize>>,
    /// backward-sweep schedule, excluding blocks without upper couplings
    backward_levels: Vec<Vec<usize>>,
}

impl Sbgs {
    /// Builds the splitting from an arbitrary list of symmetric terms.
    /// Diagonal blocks with the same coefficient signature share one
    /// factorization.
    pub fn from_terms(terms: &[KronTerm]) -> Result<Self> {
        let op = KroneckerSumOperator::new(terms.to_vec())?;
        let (nx, ny) = (op.nx(), op.ny());
        let diag_terms: Vec<(Vec<f64>, &KronTerm)> = terms
            .iter()
            .map(|t| (t.g.diagonal(), t))
            .filter(|(d, _)| d.iter().any(|&x| x != 0.0))
            .collect();

        let mut signatures: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut block_factor = Vec::with_capacity(ny);
        let mut pending: Vec<Vec<f64>> = Vec::new();
        for j in 0..ny {
            let sig: Vec<f64> = diag_terms.iter().map(|(d, _)| d[j]).collect();
            let key: Vec<u64> = sig.iter().map(|x| x.to_bits()).collect();
            let next = pending.len();
            let idx = *signatures.entry(key).or_insert_with(|| {
                pending.push(sig);
                next
            });
            block_factor.push(idx);
        }
        let diag_blocks: Vec<Arc<SparseSymMatrix>> = pending
            .par_iter()
            .map(|sig| {
                let parts: Vec<(f64, &SparseSymMatrix)> = sig
                    .iter()
                    .zip(&diag_terms)
                    .filter(|(&c, _)| c != 0.0)
                    .map(|(&c, (_, t))| (c, t.k.as_ref()))
                    .collect();
                linear_combination(nx, &parts).map(Arc::new)
            })
            .collect::<Result<_>>()?;
        let factors: Vec<Arc<CholeskyFactor>> = diag_blocks
            .par_iter()
            .map(|d| factor_spd(d).map(Arc::new))
            .collect::<Result<_>>()?;

        let lower = terms
            .iter()
            .map(|t| {
                let l = t.g.strict_lower();
                let u = l.transpose();
                (l, u, t.k.clone())
            })
            .filter(|(l, _, _)| l.nnz() > 0)
            .collect();
        let mut sbgs = Self {
            nx,
            ny,
            factors,
            diag_blocks,
            block_factor,
            lower,
            forward_levels: Vec::new(),
            backward_levels: Vec::new(),
        };
        sbgs.schedule();
        Ok(sbgs)
    }

    fn schedule(&mut self) {
        let ny = self.ny;
        let mut fwd = vec![0usize; ny];
        for t in 0..ny {
            for (l, _, _) in &self.lower {
                for &j in l.row(t).0 {
                    fwd[t] = fwd[t].max(fwd[j] + 1);
                }
            }
        }
        // backward level 0 holds blocks with no upper coupling; they need no solve
        let mut bwd = vec![0usize; ny];
        for t in (0..ny).rev() {
            for (_, u, _) in &self.lower {
                for &j in u.row(t).0 {
                    bwd[t] = bwd[t].max(bwd[j] + 1);
                }
            }
        }
        let group = |level: &[usize], skip_zero: bool| -> Vec<Vec<usize>> {
            let depth = level.iter().copied().max().map_or(0, |d| d + 1);
            let mut out = vec![Vec::new(); depth];
            for (t, &d) in level.iter().enumerate() {
                out[d].push(t);
            }
            for blocks in &mut out {
                blocks.sort_by_key(|&t| (self.block_factor[t], t));
            }
            if skip_zero && !out.is_empty() {
                out.remove(0);
            }
            out
        };
        self.forward_levels = group(&fwd, false);
        self.backward_levels = group(&bwd, true);
    }

    /// Solves each diagonal block of a level in place; `buf` holds the
    /// level's blocks in schedule order.
    fn solve_level(&self, level: &[usize], buf: &mut [f64]) {
        let nx = self.nx;
        let mut runs = Vec::new();
        let mut begin = 0;
        for i in 1..=level.len() {
            if i == level.len() || self.block_factor[level[i]] != self.block_factor[level[begin]] {
                runs.push((begin, i));
                begin = i;
            }
        }
        let mut rest = buf;
        let mut pieces = Vec::with_capacity(runs.len());
        for &(b, e) in &runs {
            let (head, tail) = rest.split_at_mut((e - b) * nx);
            pieces.push((self.block_factor[level[b]], head));
            rest = tail;
        }
        pieces
            .into_par_iter()
            .flat_map(|(f, piece)| {
                piece
                    .par_chunks_mut(nx * BATCH)
                    .map(move |c| (f, c))
                    .collect::<Vec<_>>()
            })
            .for_each(|(f, chunk)| self.factors[f].solve_many_in_place(chunk));
    }

    /// Number of distinct diagonal-block factorizations.
    pub fn distinct_factorizations(&self) -> usize {
        self.factors.len()
    }

    /// Forward sweep `(D + L) w = v`, then backward sweep
    /// `(D + Lᵀ) z = D w`, both scheduled by dependency levels.
    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        let nx = self.nx;
        let mut w = vec![0.0; v.len()];
        for level in &self.forward_levels {
            let mut buf = vec![0.0; level.len() * nx];
            buf.par_chunks_mut(nx).zip(level.par_iter()).for_each(|(acc, &t)| {
                acc.copy_from_slice(&v[t * nx..(t + 1) * nx]);
                for (l, _, k) in &self.lower {
                    let (cols, vals) = l.row(t);
                    for (&j, &g) in cols.iter().zip(vals) {
                        k.mul_vec_add(-g, &w[j * nx..(j + 1) * nx], acc);
                    }
                }
            });
            self.solve_level(level, &mut buf);
            for (acc, &t) in buf.chunks(nx).zip(level) {
                w[t * nx..(t + 1) * nx].copy_from_slice(acc);
            }
        }
        out.copy_from_slice(&w);
        for level in &self.backward_levels {
            let mut buf = vec![0.0; level.len() * nx];
            buf.par_chunks_mut(nx).zip(level.par_iter()).for_each(|(acc, &t)| {
                for (_, u, k) in &self.lower {
                    let (cols, vals) = u.row(t);
                    for (&j, &g) in cols.iter().zip(vals) {
                        k.mul_vec_add(g, &out[j * nx..(j + 1) * nx], acc);
                    }
                }
            });
            self.solve_level(level, &mut buf);
            for (acc, &t) in buf.chunks(nx).zip(level) {
                for (d, a) in out[t * nx..(t + 1) * nx].iter_mut().zip(acc) {
                    *d -= a;
                }
            }
        }
    }

    /// Dense `(D + L) D⁻¹ (D + Lᵀ)` for small problems.
    pub fn assemble_dense(&self) -> Result<DMatrix<f64>> {
        let n = self.nx * self.ny;
        if n > DENSE_LIMIT {
            return Err(Error::SizeGuard {
                size: n,
                limit: DENSE_LIMIT,
            });
        }
        let (d, l) = self.dense_parts();
        let dl = &d + &l;
        let chol = nalgebra::Cholesky::new(d.clone()).ok_or(Error::NotPositiveDefinite {
            pivot: 0,
            value: f64::NAN,
        })?;
        let right = chol.solve(&dl.transpose());
        Ok(&dl * right)
    }

    /// Dense block diagonal `D` and strictly lower `L`.
    pub fn dense_parts(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let (nx, n) = (self.nx, self.nx * self.ny);
        let mut d = DMatrix::zeros(n, n);
        for t in 0..self.ny {
            for (s, i, v) in self.diag_blocks[self.block_factor[t]].triplets() {
                d[(t * nx + s, t * nx + i)] = v;
            }
        }
        let mut l = DMatrix::zeros(n, n);
        for (lg, _, k) in &self.lower {
            for (t, j, g) in lg.triplets() {
                for (s, i, v) in k.triplets() {
                    l[(t * nx + s, j * nx + i)] += g * v;
                }
            }
        }
        (d, l)
    }
}

/// Tagged preconditioner choice.
#[derive(Debug, Clone)]
pub enum Preconditioner {
    MeanBased(MeanBased),
    Kron(KronPrecond),
    TruncExact(TruncExact),
    Sbgs(Sbgs),
}

impl Preconditioner {
    pub fn dims(&self) -> (usize, usize) {
        match self {
            Preconditioner::MeanBased(p) => (p.nx, p.ny),
            Preconditioner::Kron(p) => (p.nx, p.ny),
            Preconditioner::TruncExact(TruncExact::Dense { l }) => (l.nrows(), 1),
            Preconditioner::TruncExact(TruncExact::Inner { op, .. }) => (op.nx(), op.ny()),
            Preconditioner::Sbgs(p) => (p.nx, p.ny),
        }
    }

    /// `out = P⁻¹ v` on raw block storage.
    pub fn apply_inverse_into(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        let (nx, ny) = self.dims();
        if v.len() != nx * ny || out.len() != v.len() {
            return Err(Error::DimensionMismatch {
                expected: nx * ny,
                found: v.len(),
            });
        }
        match self {
            Preconditioner::MeanBased(p) => p.apply_into(v, out),
            Preconditioner::Kron(p) => p.apply_into(v, out),
            Preconditioner::TruncExact(p) => p.apply_into(v, out)?,
            Preconditioner::Sbgs(p) => p.apply_into(v, out),
        }
        Ok(())
    }

    pub fn apply_inverse(&self, v: &BlockVector) -> Result<BlockVector> {
        let mut out = BlockVector::zeros(v.nx(), v.ny());
        self.apply_inverse_into(v.as_slice(), out.as_mut_slice())?;
        Ok(out)
    }
}

pub fn build_mean_based(k0: &SparseSymMatrix, ny: usize) -> Result<Preconditioner> {
    Ok(Preconditioner::MeanBased(MeanBased::new(
        Arc::new(factor_spd(k0)?),
        ny,
    )))
}

/// Kronecker preconditioner from the full term list of `A`; the first term
/// must be `I ⊗ K_0`.
pub fn build_kron(op: &KroneckerSumOperator) -> Result<Preconditioner> {
    let terms = op.terms();
    let g = kron_factor(terms)?;
    let g_factor = factor_spd(&g).map_err(|e| match e {
        Error::NotPositiveDefinite { .. } => Error::InvalidConfig(
            "Kronecker preconditioner factor G is not positive definite".into(),
        ),
        other => other,
    })?;
    Ok(Preconditioner::Kron(KronPrecond {
        nx: op.nx(),
        ny: op.ny(),
        g,
        g_factor,
        k0: Arc::new(factor_spd(&terms[0].k)?),
    }))
}

/// Exact `P_r` built from the first `r + 1` terms by dense Cholesky.
pub fn build_trunc_exact(terms: &[KronTerm], r: usize) -> Result<Preconditioner> {
    let op = KroneckerSumOperator::new(terms[..(r + 1).min(terms.len())].to_vec())?;
    let dense = op.assemble_dense()?;
    let chol = nalgebra::Cholesky::new(dense).ok_or(Error::NotPositiveDefinite {
        pivot: 0,
        value: f64::NAN,
    })?;
    Ok(Preconditioner::TruncExact(TruncExact::Dense { l: chol.l() }))
}

/// Exact `P_r` applied through an inner solve; used when `P_r` is too large
/// to factor densely.
pub fn build_trunc_inner(terms: &[KronTerm], r: usize, tol: f64) -> Result<Preconditioner> {
    let kept = terms[..(r + 1).min(terms.len())].to_vec();
    let sbgs = Sbgs::from_terms(&kept)?;
    Ok(Preconditioner::TruncExact(TruncExact::Inner {
        op: KroneckerSumOperator::new(kept)?,
        sbgs: Box::new(sbgs),
        inner: SolverConfig {
            tol,
            max_iter: 2000,
            ..SolverConfig::default()
        },
    }))
}

/// Dense factorization when the operator fits under the dense guard,
/// inner solve otherwise.
pub fn build_trunc(terms: &[KronTerm], r: usize) -> Result<Preconditioner> {
    let n = terms[0].g.dim() * terms[0].k.dim();
    if n <= DENSE_LIMIT / 4 {
        build_trunc_exact(terms, r)
    } else {
        build_trunc_inner(terms, r, INNER_TOL)
    }
}

/// Relative residual of inner truncation solves.
pub const INNER_TOL: f64 = 1e-12;

/// `P̃_r` for the affine expansion: `K_0` on every diagonal block and the
/// strictly lower parts of `G_1..G_r`.
pub fn build_sbgs_affine(k0: Arc<SparseSymMatrix>, terms: &[KronTerm]) -> Result<Preconditioner> {
    let ny = terms.first().map(|t| t.g.dim()).unwrap_or(0);
    if let Some(t) = terms.iter().find(|t| t.g.diagonal().iter().any(|&d| d != 0.0)) {
        return Err(Error::InvalidConfig(format!(
            "affine block Gauss-Seidel needs zero-diagonal Gram matrices (dim {})",
            t.g.dim()
        )));
    }
    let ny = if terms.is_empty() {
        return Err(Error::InvalidConfig(
            "use build_sbgs_affine_with_dim for r = 0".into(),
        ));
    } else {
        ny
    };
    let mut all = vec![KronTerm::new(SparseSymMatrix::identity(ny), k0)];
    all.extend_from_slice(terms);
    Ok(Preconditioner::Sbgs(Sbgs::from_terms(&all)?))
}

/// `P̃_r` for an affine operator whose first term is `I ⊗ K_0`.
pub fn build_sbgs_from_operator(op: &KroneckerSumOperator, r: usize) -> Result<Preconditioner> {
    let terms = op.terms();
    if r == 0 {
        return Ok(Preconditioner::Sbgs(Sbgs::from_terms(&terms[..1])?));
    }
    build_sbgs_affine(terms[0].k.clone(), &terms[1..(r + 1).min(terms.len())])
}

/// `P̃_r` for the lognormal expansion from the `r + 1` largest terms.
pub fn build_sbgs_lognormal(sys: &LognormalSystem, r: usize) -> Result<Preconditioner> {
    let count = (r + 1).min(sys.ordered_terms.len());
    if !sys.ordering[..count].iter().any(|(a, _)| a.is_zero()) {
        return Err(Error::InvalidConfig(
            "truncation must include the mean-field term".into(),
        ));
    }
    Ok(Preconditioner::Sbgs(Sbgs::from_terms(&sys.ordered_terms[..count])?))
}
