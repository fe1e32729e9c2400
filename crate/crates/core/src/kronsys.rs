//! Matrix-free Kronecker-sum operators `Σ G ⊗ K` and construction of the
//! affine and lognormal benchmark systems.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem2d::{
    assemble_load, assemble_stiffness, assemble_stiffness_values, auto_alpha_bar,
    fourier_coefficient, quadrature_points, sup_norm, tau_r, zeta, CoefficientField,
    LognormalExpansion, UniformMesh,
};
use crate::gram::{gram_general, gram_identity, gram_linear, GramMatrix};
use crate::multiindex::{build_index_set, MultiIndex, MultiIndexSet};
use crate::orthopoly::PolyFamily;
use crate::sparse::SparseSymMatrix;

/// Largest operator dimension that may be materialized densely.
pub const DENSE_LIMIT: usize = 20_000;

/// A vector of `ny` contiguous blocks of length `nx`; block `j` holds the
/// spatial coefficients attached to the j-th parametric basis function.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockVector {
    nx: usize,
    ny: usize,
    data: Vec<f64>,
}

impl BlockVector {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        Self {
            nx,
            ny,
            data: vec![0.0; nx * ny],
        }
    }

    pub fn from_vec(nx: usize, ny: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != nx * ny {
            return Err(Error::DimensionMismatch {
                expected: nx * ny,
                found: data.len(),
            });
        }
        Ok(Self { nx, ny, data })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn block(&self, j: usize) -> &[f64] {
        &self.data[j * self.nx..(j + 1) * self.nx]
    }

    pub fn block_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.nx..(j + 1) * self.nx]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn norm(&self) -> f64 {
        dot(&self.data, &self.data).sqrt()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        dot(&self.data, &other.data)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// One Kronecker product `G ⊗ K`.
#[derive(Debug, Clone)]
pub struct KronTerm {
    pub g: GramMatrix,
    pub k: Arc<SparseSymMatrix>,
}

impl KronTerm {
    pub fn new(g: GramMatrix, k: Arc<SparseSymMatrix>) -> Self {
        Self { g, k }
    }
}

#[derive(Debug, Clone)]
pub struct KroneckerSumOperator {
    nx: usize,
    ny: usize,
    terms: Vec<KronTerm>,
}

impl KroneckerSumOperator {
    pub fn new(terms: Vec<KronTerm>) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| Error::InvalidConfig("operator needs at least one term".into()))?;
        let (ny, nx) = (first.g.dim(), first.k.dim());
        for t in &terms {
            if t.g.dim() != ny {
                return Err(Error::DimensionMismatch {
                    expected: ny,
                    found: t.g.dim(),
                });
            }
            if t.k.dim() != nx {
                return Err(Error::DimensionMismatch {
                    expected: nx,
                    found: t.k.dim(),
                });
            }
        }
        Ok(Self { nx, ny, terms })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn dim(&self) -> usize {
        self.nx * self.ny
    }

    pub fn terms(&self) -> &[KronTerm] {
        &self.terms
    }

    /// Operator made of the first `count` terms.
    pub fn truncated(&self, count: usize) -> Result<Self> {
        Self::new(self.terms[..count.min(self.terms.len())].to_vec())
    }

    pub fn matvec(&self, v: &BlockVector) -> Result<BlockVector> {
        self.check(v)?;
        let mut out = BlockVector::zeros(self.nx, self.ny);
        self.apply_into(v.as_slice(), out.as_mut_slice());
        Ok(out)
    }

    pub(crate) fn check(&self, v: &BlockVector) -> Result<()> {
        if v.nx() != self.nx || v.ny() != self.ny {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: v.len(),
            });
        }
        Ok(())
    }

    /// `out = Σ (G ⊗ K) v` without forming the global matrix. Each `K v_j`
    /// is computed once per term; destination blocks accumulate terms in a
    /// fixed order, so the result does not depend on thread scheduling.
    pub fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        let nx = self.nx;
        out.iter_mut().for_each(|o| *o = 0.0);
        let mut kv = vec![0.0; v.len()];
        for term in &self.terms {
            kv.par_chunks_mut(nx)
                .zip(v.par_chunks(nx))
                .enumerate()
                .for_each(|(j, (dst, src))| {
                    if term.g.row_nnz(j) > 0 {
                        term.k.mul_vec_into(src, dst);
                    }
                });
            out.par_chunks_mut(nx).enumerate().for_each(|(t, dst)| {
                let (cols, vals) = term.g.row(t);
                for (&j, &g) in cols.iter().zip(vals) {
                    let src = &kv[j * nx..(j + 1) * nx];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += g * s;
                    }
                }
            });
        }
    }

    /// Explicit `Σ G ⊗ K`; only for test oracles and spectral checks.
    pub fn assemble_dense(&self) -> Result<DMatrix<f64>> {
        let n = self.dim();
        if n > DENSE_LIMIT {
            return Err(Error::SizeGuard {
                size: n,
                limit: DENSE_LIMIT,
            });
        }
        let mut a = DMatrix::zeros(n, n);
        for term in &self.terms {
            for (t, j, g) in term.g.triplets() {
                for (s, i, k) in term.k.triplets() {
                    a[(t * self.nx + s, j * self.nx + i)] += g * k;
                }
            }
        }
        Ok(a)
    }

    /// Number of nonzero blocks in the widest block row.
    pub fn max_blocks_per_row(&self) -> usize {
        (0..self.ny)
            .map(|t| {
                let mut cols: Vec<usize> = self
                    .terms
                    .iter()
                    .flat_map(|term| term.g.row(t).0.iter().copied())
                    .collect();
                cols.sort_unstable();
                cols.dedup();
                cols.len()
            })
            .max()
            .unwrap_or(0)
    }
}

/// How `ᾱ` is chosen for the Fourier coefficient family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaBar {
    /// `ᾱ ζ(σ̃) = 0.9999`.
    Auto,
    Value(f64),
}

impl AlphaBar {
    pub fn resolve(self, sigma: f64) -> Result<f64> {
        match self {
            AlphaBar::Auto => auto_alpha_bar(sigma),
            AlphaBar::Value(v) if v > 0.0 => Ok(v),
            AlphaBar::Value(v) => Err(Error::InvalidConfig(format!(
                "alpha_bar must be positive, got {v}"
            ))),
        }
    }
}

/// The affine-parametric benchmark: `a = 1 + Σ_{m=1}^M a_m y_m` with
/// uniform `y_m` and Fourier-mode `a_m`.
#[derive(Debug, Clone)]
pub struct AffineSystem {
    pub mesh: UniformMesh,
    pub index_set: MultiIndexSet,
    pub operator: KroneckerSumOperator,
    pub rhs: BlockVector,
    pub sigma: f64,
    pub alpha_bar: f64,
    pub a0_min: f64,
    pub a0_max: f64,
    /// `‖a_m‖_∞` for `m = 0..=M`.
    pub sup_norms: Vec<f64>,
    /// `τ_r` for `r = 0..=M`.
    pub tau: Vec<f64>,
    /// `τ` of the untruncated expansion, `ᾱ ζ(σ̃)`.
    pub tau_full: f64,
}

impl AffineSystem {
    pub fn params(&self) -> usize {
        self.index_set.params()
    }

    /// `K_0`, the stiffness of the mean field.
    pub fn k0(&self) -> &Arc<SparseSymMatrix> {
        &self.operator.terms()[0].k
    }
}

pub fn build_affine_system(
    mesh: UniformMesh,
    params: usize,
    degree: u32,
    sigma: f64,
    alpha_bar: AlphaBar,
) -> Result<AffineSystem> {
    if sigma <= 1.0 {
        return Err(Error::InvalidConfig(format!(
            "decay exponent must exceed 1, got {sigma}"
        )));
    }
    let alpha_bar = alpha_bar.resolve(sigma)?;
    let index_set = build_index_set(params, degree)?;
    let fields: Vec<CoefficientField> = (0..=params)
        .map(|m| fourier_coefficient(m, sigma, alpha_bar))
        .collect();
    let stiffness: Vec<Arc<SparseSymMatrix>> = fields
        .par_iter()
        .map(|f| Arc::new(assemble_stiffness(&mesh, f)))
        .collect();
    let mut terms = vec![KronTerm::new(gram_identity(&index_set), stiffness[0].clone())];
    for m in 1..=params {
        terms.push(KronTerm::new(
            gram_linear(m, &index_set, PolyFamily::LegendreUniform)?,
            stiffness[m].clone(),
        ));
    }
    let operator = KroneckerSumOperator::new(terms)?;
    let rhs = first_block_rhs(&mesh, index_set.len());
    let sup_norms = fields.iter().map(sup_norm).collect();
    let tau = (0..=params)
        .map(|r| tau_r(&fields[1..=r], 1.0))
        .collect::<Result<Vec<_>>>()?;
    let tau_full = alpha_bar * zeta(sigma)?;
    Ok(AffineSystem {
        mesh,
        index_set,
        operator,
        rhs,
        sigma,
        alpha_bar,
        a0_min: 1.0,
        a0_max: 1.0,
        sup_norms,
        tau,
        tau_full,
    })
}

/// Right-hand side for `f ≡ 1`: only the block of the constant basis
/// function is nonzero.
fn first_block_rhs(mesh: &UniformMesh, ny: usize) -> BlockVector {
    let mut rhs = BlockVector::zeros(mesh.n_interior(), ny);
    rhs.block_mut(0).copy_from_slice(&assemble_load(mesh));
    rhs
}

/// The lognormal benchmark: `a = exp(1 + Σ_{m=1}^N b_m y_m)` with Gaussian
/// `y_m`, discretized on `I_k^M` with `M < N`.
#[derive(Debug, Clone)]
pub struct LognormalSystem {
    pub mesh: UniformMesh,
    pub index_set: MultiIndexSet,
    /// Terms over `I_{2k}^M` in degree-lex order, zero Gram matrices dropped.
    pub operator: KroneckerSumOperator,
    pub alphas: Vec<MultiIndex>,
    /// Terms sorted by descending `‖a_α‖_∞` (same storage as `operator`).
    pub ordered_terms: Vec<KronTerm>,
    /// `(α_ℓ, ‖a_{α_ℓ}‖_∞)` in magnitude order.
    pub ordering: Vec<(MultiIndex, f64)>,
    pub rhs: BlockVector,
}

impl LognormalSystem {
    /// `K_0`, the stiffness of the mean field `E[a]`.
    pub fn k0(&self) -> &Arc<SparseSymMatrix> {
        &self.operator.terms()[0].k
    }
}

pub fn build_lognormal_system(
    mesh: UniformMesh,
    params: usize,
    degree: u32,
    n_terms: usize,
    sigma: f64,
    alpha_bar: f64,
) -> Result<LognormalSystem> {
    if params >= n_terms {
        return Err(Error::InvalidConfig(format!(
            "lognormal system needs M < N, got M = {params}, N = {n_terms}"
        )));
    }
    let expansion = LognormalExpansion::fourier(n_terms, sigma, alpha_bar);
    build_lognormal_from_expansion(mesh, params, degree, &expansion)
}

pub fn build_lognormal_from_expansion(
    mesh: UniformMesh,
    params: usize,
    degree: u32,
    expansion: &LognormalExpansion,
) -> Result<LognormalSystem> {
    if params >= expansion.n_terms() {
        return Err(Error::InvalidConfig(format!(
            "lognormal system needs M < N, got M = {params}, N = {}",
            expansion.n_terms()
        )));
    }
    let index_set = build_index_set(params, degree)?;
    let doubled = build_index_set(params, 2 * degree)?;
    let grams: Vec<GramMatrix> = doubled
        .indices()
        .par_iter()
        .map(|alpha| gram_general(alpha, &index_set))
        .collect::<Result<_>>()?;
    let kept: Vec<usize> = (0..doubled.len()).filter(|&i| !grams[i].is_zero()).collect();
    let alphas: Vec<MultiIndex> = kept.iter().map(|&i| doubled.get(i).clone()).collect();

    let points = quadrature_points(&mesh);
    let values = expansion.coefficient_values(&alphas, &points)?;
    let stiffness: Vec<Arc<SparseSymMatrix>> = values
        .par_iter()
        .map(|v| Arc::new(assemble_stiffness_values(&mesh, v)))
        .collect();
    let terms: Vec<KronTerm> = kept
        .iter()
        .zip(&stiffness)
        .map(|(&i, k)| KronTerm::new(grams[i].clone(), k.clone()))
        .collect();

    let slot: HashMap<&MultiIndex, usize> =
        alphas.iter().enumerate().map(|(i, a)| (a, i)).collect();
    let ordering: Vec<(MultiIndex, f64)> = expansion
        .order_by_magnitude(&doubled)?
        .into_iter()
        .filter(|(a, _)| slot.contains_key(a))
        .collect();
    let ordered_terms = ordering
        .iter()
        .map(|(a, _)| terms[slot[a]].clone())
        .collect();
    let rhs = first_block_rhs(&mesh, index_set.len());
    Ok(LognormalSystem {
        mesh,
        index_set,
        operator: KroneckerSumOperator::new(terms)?,
        alphas,
        ordered_terms,
        ordering,
        rhs,
    })
}
