//! Q1 bilinear finite elements on uniform square grids of the unit square,
//! plus the coefficient fields of the two benchmark problems.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::multiindex::{MultiIndex, MultiIndexSet};
use crate::sparse::SparseSymMatrix;

/// Side length of the sampling grid used for sup-norms.
pub const SUP_GRID: usize = 257;

/// Uniform mesh of `(0,1)²` with `2^level` square elements per side.
/// Only interior nodes carry unknowns (homogeneous Dirichlet data).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UniformMesh {
    level: u32,
}

impl UniformMesh {
    pub fn level(&self) -> u32 {
        self.level
    }

    /// Elements per side.
    pub fn cells(&self) -> usize {
        1 << self.level
    }

    pub fn h(&self) -> f64 {
        1.0 / self.cells() as f64
    }

    /// Interior nodes per side.
    pub fn interior_side(&self) -> usize {
        self.cells() - 1
    }

    pub fn n_interior(&self) -> usize {
        self.interior_side() * self.interior_side()
    }

    /// Unknown index of grid node `(i, j)` (x index, y index), if interior.
    fn dof(&self, i: usize, j: usize) -> Option<usize> {
        let n = self.cells();
        if i == 0 || j == 0 || i >= n || j >= n {
            None
        } else {
            Some((j - 1) * self.interior_side() + (i - 1))
        }
    }
}

pub fn build_mesh(level: u32) -> Result<UniformMesh> {
    if !(1..=10).contains(&level) {
        return Err(Error::InvalidConfig(format!(
            "mesh level must be in 1..=10, got {level}"
        )));
    }
    Ok(UniformMesh { level })
}

/// Where a coefficient field came from.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldKind {
    Constant(f64),
    Fourier { m: usize, sigma: f64, alpha_bar: f64 },
    LognormalMean,
    Lognormal { alpha: MultiIndex },
    Custom(String),
}

/// A scalar field on the closed unit square.
#[derive(Clone)]
pub struct CoefficientField {
    eval: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    kind: FieldKind,
}

impl fmt::Debug for CoefficientField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientField").field("kind", &self.kind).finish()
    }
}

impl CoefficientField {
    pub fn new(kind: FieldKind, eval: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            eval: Arc::new(eval),
            kind,
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(FieldKind::Constant(c), move |_, _| c)
    }

    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        (self.eval)(x, y)
    }

    pub fn kind(&self) -> &FieldKind {
        &self.kind
    }
}

/// Wave numbers `(β₁(m), β₂(m))` of the m-th planar Fourier mode.
pub fn fourier_wavenumbers(m: usize) -> (usize, usize) {
    let k = ((-0.5 + (0.25 + 2.0 * m as f64).sqrt()).floor()) as usize;
    // guard the floor against round-off at triangular numbers
    let k = if (k + 1) * (k + 2) / 2 <= m { k + 1 } else { k };
    let k = if k * (k + 1) / 2 > m { k - 1 } else { k };
    let b1 = m - k * (k + 1) / 2;
    (b1, k - b1)
}

/// `a_0 = 1`, `a_m = ᾱ m^{-σ̃} cos(2πβ₁x₁) cos(2πβ₂x₂)`.
pub fn fourier_coefficient(m: usize, sigma: f64, alpha_bar: f64) -> CoefficientField {
    if m == 0 {
        return CoefficientField::constant(1.0);
    }
    let amp = alpha_bar * (m as f64).powf(-sigma);
    let (b1, b2) = fourier_wavenumbers(m);
    let (w1, w2) = (
        2.0 * std::f64::consts::PI * b1 as f64,
        2.0 * std::f64::consts::PI * b2 as f64,
    );
    CoefficientField::new(
        FieldKind::Fourier {
            m,
            sigma,
            alpha_bar,
        },
        move |x, y| amp * (w1 * x).cos() * (w2 * y).cos(),
    )
}

/// Riemann zeta for `s > 1`: direct summation of 2000 terms plus an
/// Euler-Maclaurin tail whose remainder is far below 1e-10.
pub fn zeta(s: f64) -> Result<f64> {
    if s <= 1.0 {
        return Err(Error::InvalidConfig(format!(
            "zeta series diverges for s = {s} <= 1"
        )));
    }
    const N: usize = 2000;
    let head: f64 = (1..N).rev().map(|n| (n as f64).powf(-s)).sum();
    let n = N as f64;
    let tail = n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s) + s / 12.0 * n.powf(-s - 1.0)
        - s * (s + 1.0) * (s + 2.0) / 720.0 * n.powf(-s - 3.0);
    Ok(head + tail)
}

/// `ᾱ` with `ᾱ ζ(σ̃) = 0.9999`.
pub fn auto_alpha_bar(sigma: f64) -> Result<f64> {
    Ok(0.9999 / zeta(sigma)?)
}

// 3-point Gauss rule on [0, 1]
const GAUSS_X: [f64; 3] = [
    0.5 - 0.387_298_334_620_741_7,
    0.5,
    0.5 + 0.387_298_334_620_741_7,
];
const GAUSS_W: [f64; 3] = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];

/// Reference gradients of the four bilinear shape functions at `(s, t)`,
/// local nodes ordered (0,0), (1,0), (0,1), (1,1).
fn shape_gradients(s: f64, t: f64) -> [[f64; 2]; 4] {
    [
        [-(1.0 - t), -(1.0 - s)],
        [1.0 - t, -s],
        [-t, 1.0 - s],
        [t, s],
    ]
}

/// Quadrature points in the order `assemble_stiffness_values` consumes
/// them: elements row-major, 3×3 Gauss points row-major within each.
pub fn quadrature_points(mesh: &UniformMesh) -> Vec<(f64, f64)> {
    let n = mesh.cells();
    let h = mesh.h();
    let mut pts = Vec::with_capacity(9 * n * n);
    for ey in 0..n {
        for ex in 0..n {
            for &ty in &GAUSS_X {
                for &tx in &GAUSS_X {
                    pts.push(((ex as f64 + tx) * h, (ey as f64 + ty) * h));
                }
            }
        }
    }
    pts
}

/// Stiffness matrix `∫ a ∇φ_i · ∇φ_s` over interior nodes, 3×3 Gauss per
/// element. The result is exactly symmetric; it is positive definite when
/// the field is positive.
pub fn assemble_stiffness(mesh: &UniformMesh, field: &CoefficientField) -> SparseSymMatrix {
    let vals: Vec<f64> = quadrature_points(mesh)
        .into_iter()
        .map(|(x, y)| field.eval(x, y))
        .collect();
    assemble_stiffness_values(mesh, &vals)
}

/// Stiffness assembly from coefficient values already sampled at
/// `quadrature_points(mesh)`.
pub fn assemble_stiffness_values(mesh: &UniformMesh, values: &[f64]) -> SparseSymMatrix {
    let n = mesh.cells();
    assert_eq!(values.len(), 9 * n * n, "one value per quadrature point");
    let mut triplets = Vec::with_capacity(16 * n * n);
    let mut q = 0;
    for ey in 0..n {
        for ex in 0..n {
            let mut local = [[0.0f64; 4]; 4];
            for qy in 0..3 {
                for qx in 0..3 {
                    let w = GAUSS_W[qx] * GAUSS_W[qy] * values[q];
                    q += 1;
                    let g = shape_gradients(GAUSS_X[qx], GAUSS_X[qy]);
                    for i in 0..4 {
                        for j in i..4 {
                            local[i][j] += w * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                        }
                    }
                }
            }
            let nodes = [
                mesh.dof(ex, ey),
                mesh.dof(ex + 1, ey),
                mesh.dof(ex, ey + 1),
                mesh.dof(ex + 1, ey + 1),
            ];
            for i in 0..4 {
                let Some(ri) = nodes[i] else { continue };
                for j in 0..4 {
                    let Some(rj) = nodes[j] else { continue };
                    let v = if i <= j { local[i][j] } else { local[j][i] };
                    triplets.push((ri, rj, v));
                }
            }
        }
    }
    SparseSymMatrix::from_triplets(mesh.n_interior(), &triplets)
        .expect("interior node indices are in range")
}

/// Load vector for `f ≡ 1`: every interior hat integrates to `h²`.
pub fn assemble_load(mesh: &UniformMesh) -> Vec<f64> {
    vec![mesh.h() * mesh.h(); mesh.n_interior()]
}

/// Samples `f` on the sup-norm grid, row-major in `y`.
pub fn sample_grid(field: &CoefficientField) -> Vec<f64> {
    let step = 1.0 / (SUP_GRID - 1) as f64;
    (0..SUP_GRID * SUP_GRID)
        .map(|p| field.eval((p % SUP_GRID) as f64 * step, (p / SUP_GRID) as f64 * step))
        .collect()
}

/// Grid estimate of `ess sup |f|`.
pub fn sup_norm(field: &CoefficientField) -> f64 {
    sample_grid(field).into_iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `τ_r = ‖Σ_{m≤r} |a_m|‖_∞ / a₀^min`, with `τ_0 = 0` for an empty list.
pub fn tau_r(fields: &[CoefficientField], a0_min: f64) -> Result<f64> {
    if a0_min <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "a0_min must be positive, got {a0_min}"
        )));
    }
    if fields.is_empty() {
        return Ok(0.0);
    }
    let mut acc = vec![0.0; SUP_GRID * SUP_GRID];
    for f in fields {
        for (a, v) in acc.iter_mut().zip(sample_grid(f)) {
            *a += v.abs();
        }
    }
    Ok(acc.into_iter().fold(0.0, f64::max) / a0_min)
}

/// Denominator convention in the Hermite expansion of a lognormal field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HermiteNormalization {
    /// `Π b_m^{α_m} / sqrt(α_m!)`, the orthonormal-Hermite coefficient.
    #[default]
    Factorial,
    /// `Π b_m^{α_m} / sqrt(α_m)`; kept for comparison only.
    PlainRoot,
}

impl HermiteNormalization {
    fn denominator(self, a: u32) -> f64 {
        match self {
            HermiteNormalization::Factorial => (1..=a).map(|i| i as f64).product::<f64>().sqrt(),
            HermiteNormalization::PlainRoot => (a as f64).sqrt(),
        }
    }
}

/// The lognormal field `a = exp(b₀ + Σ_{m=1}^N b_m y_m)` with Gaussian `y_m`.
#[derive(Debug, Clone)]
pub struct LognormalExpansion {
    b0: CoefficientField,
    b: Vec<CoefficientField>,
    normalization: HermiteNormalization,
}

impl LognormalExpansion {
    pub fn new(b0: CoefficientField, b: Vec<CoefficientField>) -> Self {
        Self {
            b0,
            b,
            normalization: HermiteNormalization::Factorial,
        }
    }

    /// `b_0 = 1` and `b_m` the Fourier modes with the given decay.
    pub fn fourier(n_terms: usize, sigma: f64, alpha_bar: f64) -> Self {
        Self::new(
            CoefficientField::constant(1.0),
            (1..=n_terms)
                .map(|m| fourier_coefficient(m, sigma, alpha_bar))
                .collect(),
        )
    }

    pub fn with_normalization(mut self, normalization: HermiteNormalization) -> Self {
        self.normalization = normalization;
        self
    }

    pub fn n_terms(&self) -> usize {
        self.b.len()
    }

    /// Values of `a_α` for every `α` in `alphas`, sampled at `points`.
    /// The mean field and the `b_m` are evaluated once per point.
    pub fn coefficient_values(
        &self,
        alphas: &[MultiIndex],
        points: &[(f64, f64)],
    ) -> Result<Vec<Vec<f64>>> {
        let params = alphas.iter().map(|a| a.len()).max().unwrap_or(0);
        if params > self.b.len() {
            return Err(Error::DimensionMismatch {
                expected: self.b.len(),
                found: params,
            });
        }
        let mean_field = self.mean_field();
        let mean: Vec<f64> = points.iter().map(|&(x, y)| mean_field.eval(x, y)).collect();
        let b: Vec<Vec<f64>> = self.b[..params]
            .iter()
            .map(|f| points.iter().map(|&(x, y)| f.eval(x, y)).collect())
            .collect();
        let norm = self.normalization;
        Ok(alphas
            .par_iter()
            .map(|alpha| {
                let support: Vec<(usize, i32)> = alpha
                    .support()
                    .map(|m| (m, alpha.entries()[m] as i32))
                    .collect();
                let denom: f64 = support
                    .iter()
                    .map(|&(_, a)| norm.denominator(a as u32))
                    .product();
                (0..points.len())
                    .map(|p| {
                        support
                            .iter()
                            .fold(mean[p], |acc, &(m, a)| acc * b[m][p].powi(a))
                            / denom
                    })
                    .collect()
            })
            .collect())
    }

    /// `E[a](x) = exp(b₀ + ½ Σ b_m²)`.
    pub fn mean_field(&self) -> CoefficientField {
        let b0 = self.b0.clone();
        let b = self.b.clone();
        CoefficientField::new(FieldKind::LognormalMean, move |x, y| {
            let s: f64 = b.iter().map(|f| f.eval(x, y).powi(2)).sum();
            (b0.eval(x, y) + 0.5 * s).exp()
        })
    }

    /// Hermite coefficient field `a_α`.
    pub fn coefficient(&self, alpha: &MultiIndex) -> Result<CoefficientField> {
        if alpha.len() > self.b.len() {
            return Err(Error::DimensionMismatch {
                expected: self.b.len(),
                found: alpha.len(),
            });
        }
        let mean = self.mean_field();
        let factors: Vec<(CoefficientField, i32, f64)> = alpha
            .support()
            .map(|m| {
                let a = alpha.entries()[m];
                (self.b[m].clone(), a as i32, self.normalization.denominator(a))
            })
            .collect();
        Ok(CoefficientField::new(
            FieldKind::Lognormal {
                alpha: alpha.clone(),
            },
            move |x, y| {
                factors
                    .iter()
                    .fold(mean.eval(x, y), |acc, (f, p, d)| acc * f.eval(x, y).powi(*p) / d)
            },
        ))
    }

    /// All multi-indices of `alphas` sorted by descending `‖a_α‖_∞`;
    /// exact ties keep the degree-lex order of `alphas`.
    pub fn order_by_magnitude(&self, alphas: &MultiIndexSet) -> Result<Vec<(MultiIndex, f64)>> {
        if alphas.params() > self.b.len() {
            return Err(Error::DimensionMismatch {
                expected: self.b.len(),
                found: alphas.params(),
            });
        }
        let mean = sample_grid(&self.mean_field());
        let b: Vec<Vec<f64>> = self.b[..alphas.params()].iter().map(sample_grid).collect();
        let norm = self.normalization;
        let mags: Vec<f64> = alphas
            .indices()
            .par_iter()
            .map(|alpha| {
                let support: Vec<(usize, i32)> = alpha
                    .support()
                    .map(|m| (m, alpha.entries()[m] as i32))
                    .collect();
                let denom: f64 = support
                    .iter()
                    .map(|&(_, a)| norm.denominator(a as u32))
                    .product();
                let peak = (0..mean.len())
                    .map(|p| {
                        support
                            .iter()
                            .fold(mean[p], |acc, &(m, a)| acc * b[m][p].powi(a))
                            .abs()
                    })
                    .fold(0.0, f64::max);
                peak / denom
            })
            .collect();
        let mut order: Vec<usize> = (0..alphas.len()).collect();
        // stable: ties stay in degree-lex order
        order.sort_by(|&i, &j| mags[j].total_cmp(&mags[i]));
        Ok(order
            .into_iter()
            .map(|i| (alphas.get(i).clone(), mags[i]))
            .collect())
    }
}
