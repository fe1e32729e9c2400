//! Parametric Gram matrices `[G]_{tj} = ⟨w ψ_{κ(j)}, ψ_{κ(t)}⟩` for the
//! weights `w = 1`, `w = y_m` and `w = ψ_α`.

use crate::error::{Error, Result};
use crate::multiindex::{MultiIndex, MultiIndexSet};
use crate::orthopoly::{hermite_triple, PolyFamily};
use crate::sparse::SparseSymMatrix;

pub type GramMatrix = SparseSymMatrix;

/// `G_0`, the identity on the parametric space.
pub fn gram_identity(set: &MultiIndexSet) -> GramMatrix {
    SparseSymMatrix::identity(set.len())
}

/// `G_m` for the linear weight `y_m`, with `m` one-based.
///
/// Entry `(t, j)` is nonzero only when `κ(t)` and `κ(j)` differ by one in
/// slot `m`; the value is the recurrence coefficient of the larger degree.
pub fn gram_linear(m: usize, set: &MultiIndexSet, family: PolyFamily) -> Result<GramMatrix> {
    if m == 0 || m > set.params() {
        return Err(Error::InvalidConfig(format!(
            "parameter index {m} outside 1..={}",
            set.params()
        )));
    }
    let slot = m - 1;
    let mut triplets = Vec::new();
    for (j, beta) in set.iter().enumerate() {
        let mut raised = beta.entries().to_vec();
        raised[slot] += 1;
        if let Some(t) = set.position(&MultiIndex::new(raised)) {
            let c = family.c_unchecked(beta.entries()[slot] + 1);
            triplets.push((t, j, c));
            triplets.push((j, t, c));
        }
    }
    SparseSymMatrix::from_triplets(set.len(), &triplets)
}

/// `G_α` for the Hermite weight `ψ_α`; `alpha` must lie in `I_{2k}^M`.
///
/// Entries are products of univariate Hermite triple products. Only pairs
/// passing the per-slot parity and triangle conditions are visited.
pub fn gram_general(alpha: &MultiIndex, set: &MultiIndexSet) -> Result<GramMatrix> {
    if alpha.len() != set.params() {
        return Err(Error::DimensionMismatch {
            expected: set.params(),
            found: alpha.len(),
        });
    }
    if alpha.total_degree() > 2 * set.degree() {
        return Err(Error::InvalidConfig(format!(
            "multi-index {alpha} has degree above 2k = {}",
            2 * set.degree()
        )));
    }
    let mut triplets = Vec::new();
    let mut gamma = vec![0u32; set.params()];
    for (j, beta) in set.iter().enumerate() {
        visit_partners(
            alpha.entries(),
            beta.entries(),
            0,
            set.degree(),
            &mut gamma,
            &mut |g| {
                if let Some(t) = set.position(&MultiIndex::new(g.to_vec())) {
                    let v: f64 = alpha
                        .entries()
                        .iter()
                        .zip(beta.entries())
                        .zip(g)
                        .map(|((&a, &b), &c)| hermite_triple(a, b, c))
                        .product();
                    if v != 0.0 {
                        triplets.push((t, j, v));
                    }
                }
            },
        );
    }
    SparseSymMatrix::from_triplets(set.len(), &triplets)
}

/// Enumerates every `γ` with `|β_m - α_m| <= γ_m <= β_m + α_m`,
/// `γ_m ≡ β_m + α_m (mod 2)` and `|γ| <= budget`.
fn visit_partners(
    alpha: &[u32],
    beta: &[u32],
    slot: usize,
    budget: u32,
    gamma: &mut [u32],
    f: &mut dyn FnMut(&[u32]),
) {
    if slot == alpha.len() {
        f(gamma);
        return;
    }
    let (a, b) = (alpha[slot], beta[slot]);
    let mut g = a.abs_diff(b);
    while g <= a + b && g <= budget {
        gamma[slot] = g;
        visit_partners(alpha, beta, slot + 1, budget - g, gamma, f);
        g += 2;
    }
    gamma[slot] = 0;
}

/// Strictly lower triangle `L` of a zero-diagonal Gram matrix, `L + Lᵀ = G`.
pub fn split_lower(g: &GramMatrix) -> Result<GramMatrix> {
    if let Some(i) = (0..g.dim()).find(|&i| g.get(i, i) != 0.0) {
        return Err(Error::InvalidConfig(format!(
            "lower splitting needs a zero diagonal; entry ({i},{i}) = {}",
            g.get(i, i)
        )));
    }
    Ok(g.strict_lower())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiindex::build_index_set;

    #[test]
    fn linear_gram_single_parameter() {
        let s = build_index_set(1, 2).unwrap();
        let g = gram_linear(1, &s, PolyFamily::LegendreUniform).unwrap();
        let c1 = 1.0 / 3f64.sqrt();
        let c2 = 2.0 / 15f64.sqrt();
        assert!((g.get(1, 0) - c1).abs() < 1e-15);
        assert!((g.get(0, 1) - c1).abs() < 1e-15);
        assert!((g.get(2, 1) - c2).abs() < 1e-15);
        assert_eq!(g.get(0, 2), 0.0);
        assert!(g.diagonal().iter().all(|&d| d == 0.0));
    }

    #[test]
    fn linear_gram_second_parameter() {
        let s = build_index_set(2, 1).unwrap();
        // order: (0,0), (0,1), (1,0)
        let g = gram_linear(2, &s, PolyFamily::LegendreUniform).unwrap();
        assert_eq!(g.nnz(), 2);
        assert!((g.get(0, 1) - 1.0 / 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn parameter_out_of_range() {
        let s = build_index_set(2, 1).unwrap();
        assert!(gram_linear(0, &s, PolyFamily::LegendreUniform).is_err());
        assert!(gram_linear(3, &s, PolyFamily::LegendreUniform).is_err());
    }

    #[test]
    fn general_gram_examples() {
        let s = build_index_set(1, 1).unwrap();
        let g0 = gram_general(&MultiIndex::zero(1), &s).unwrap();
        assert_eq!(g0, SparseSymMatrix::identity(2));

        let g1 = gram_general(&MultiIndex::new(vec![1]), &s).unwrap();
        assert_eq!(g1.to_dense(), nalgebra::dmatrix![0.0, 1.0; 1.0, 0.0]);

        let g2 = gram_general(&MultiIndex::new(vec![2]), &s).unwrap();
        assert_eq!(g2.get(0, 0), 0.0);
        assert!((g2.get(1, 1) - 2f64.sqrt()).abs() < 1e-14);
        assert_eq!(g2.nnz(), 1);
    }

    #[test]
    fn general_gram_degree_guard() {
        let s = build_index_set(2, 1).unwrap();
        assert!(gram_general(&MultiIndex::new(vec![2, 1]), &s).is_err());
        assert!(gram_general(&MultiIndex::new(vec![1]), &s).is_err());
    }

    #[test]
    fn split_lower_examples() {
        let s = build_index_set(1, 2).unwrap();
        let g = gram_linear(1, &s, PolyFamily::LegendreUniform).unwrap();
        let l = split_lower(&g).unwrap();
        assert_eq!(l.nnz(), 2);
        assert!((l.get(1, 0) - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!((l.get(2, 1) - 2.0 / 15f64.sqrt()).abs() < 1e-15);

        let z = SparseSymMatrix::zeros(3);
        assert_eq!(split_lower(&z).unwrap(), z);

        assert!(split_lower(&SparseSymMatrix::identity(2)).is_err());
    }
}
