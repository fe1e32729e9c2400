//! Envelope (profile) Cholesky factorization with reverse Cuthill-McKee
//! reordering, used for `K_0`, the block-diagonal pieces of the block
//! Gauss-Seidel sweeps and the parametric factor of the Kronecker
//! preconditioner.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::sparse::SparseSymMatrix;

/// `P A Pᵀ = L Lᵀ` with `L` stored row by row over its envelope.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    n: usize,
    /// `perm[new] = old`
    perm: Vec<usize>,
    /// first stored column of each row of `L`
    first: Vec<usize>,
    /// offset of each row's first entry in `values`
    start: Vec<usize>,
    values: Vec<f64>,
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// Entries stored in the envelope (including fill).
    pub fn envelope_size(&self) -> usize {
        self.values.len()
    }

    /// `L[i][j]` in the permuted numbering.
    pub fn lower(&self, i: usize, j: usize) -> f64 {
        if j > i || j < self.first[i] {
            0.0
        } else {
            self.values[self.start[i] + j - self.first[i]]
        }
    }

    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        &self.values[self.start[i]..self.start[i] + i - self.first[i] + 1]
    }

    /// Overwrites `b` with `A⁻¹ b`.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        debug_assert_eq!(b.len(), self.n);
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..self.n {
            let row = self.row(i);
            let f = self.first[i];
            let s: f64 = row[..i - f].iter().zip(&y[f..i]).map(|(l, v)| l * v).sum();
            y[i] = (y[i] - s) / row[i - f];
        }
        for i in (0..self.n).rev() {
            let row = self.row(i);
            let f = self.first[i];
            let xi = y[i] / row[i - f];
            y[i] = xi;
            for (yk, l) in y[f..i].iter_mut().zip(&row[..i - f]) {
                *yk -= l * xi;
            }
        }
        for (new, &old) in self.perm.iter().enumerate() {
            b[old] = y[new];
        }
    }

    /// Overwrites each length-`n` chunk of `b` with `A⁻¹` applied to it.
    /// Right-hand sides are processed in interleaved batches so the factor
    /// is streamed once per batch.
    pub fn solve_many_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        if n == 0 {
            return;
        }
        debug_assert_eq!(b.len() % n, 0);
        let mut y = vec![0.0; n * BATCH];
        for group in b.chunks_mut(n * BATCH) {
            let count = group.len() / n;
            if count == 1 {
                self.solve_in_place(group);
                continue;
            }
            y.iter_mut().for_each(|v| *v = 0.0);
            for c in 0..count {
                let rhs = &group[c * n..(c + 1) * n];
                for (new, &old) in self.perm.iter().enumerate() {
                    y[new * BATCH + c] = rhs[old];
                }
            }
            for i in 0..n {
                let row = self.row(i);
                let f = self.first[i];
                let mut s = [0.0; BATCH];
                for (k, &l) in row[..i - f].iter().enumerate() {
                    let yk = &y[(f + k) * BATCH..(f + k + 1) * BATCH];
                    for c in 0..BATCH {
                        s[c] += l * yk[c];
                    }
                }
                let d = row[i - f];
                let yi = &mut y[i * BATCH..(i + 1) * BATCH];
                for c in 0..BATCH {
                    yi[c] = (yi[c] - s[c]) / d;
                }
            }
            for i in (0..n).rev() {
                let row = self.row(i);
                let f = self.first[i];
                let d = row[i - f];
                let mut xi = [0.0; BATCH];
                for c in 0..BATCH {
                    xi[c] = y[i * BATCH + c] / d;
                    y[i * BATCH + c] = xi[c];
                }
                for (k, &l) in row[..i - f].iter().enumerate() {
                    let yk = &mut y[(f + k) * BATCH..(f + k + 1) * BATCH];
                    for c in 0..BATCH {
                        yk[c] -= l * xi[c];
                    }
                }
            }
            for c in 0..count {
                let rhs = &mut group[c * n..(c + 1) * n];
                for (new, &old) in self.perm.iter().enumerate() {
                    rhs[old] = y[new * BATCH + c];
                }
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Right-hand sides per batch in [`CholeskyFactor::solve_many_in_place`].
pub const BATCH: usize = 8;

/// Sparse Cholesky of a symmetric matrix, in reverse Cuthill-McKee or
/// natural order, whichever has the smaller envelope.
pub fn factor_spd(a: &SparseSymMatrix) -> Result<CholeskyFactor> {
    let rcm = reverse_cuthill_mckee(a);
    let natural: Vec<usize> = (0..a.dim()).collect();
    if envelope_size(a, &rcm) < envelope_size(a, &natural) {
        factor_with_permutation(a, rcm)
    } else {
        factor_with_permutation(a, natural)
    }
}

/// Entries of the lower envelope of `P A Pᵀ` for `perm[new] = old`.
pub fn envelope_size(a: &SparseSymMatrix, perm: &[usize]) -> usize {
    let mut inv = vec![0usize; perm.len()];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    perm.iter()
        .enumerate()
        .map(|(new, &old)| {
            let first = a.row(old).0.iter().map(|&c| inv[c]).min().unwrap_or(new).min(new);
            new - first + 1
        })
        .sum()
}

/// Cholesky in the natural ordering.
pub fn factor_spd_natural(a: &SparseSymMatrix) -> Result<CholeskyFactor> {
    factor_with_permutation(a, (0..a.dim()).collect())
}

fn factor_with_permutation(a: &SparseSymMatrix, perm: Vec<usize>) -> Result<CholeskyFactor> {
    let n = a.dim();
    let mut inv = vec![0usize; n];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    let mut first: Vec<usize> = (0..n).collect();
    for (new, &old) in perm.iter().enumerate() {
        for &c in a.row(old).0 {
            let pc = inv[c];
            if pc < first[new] {
                first[new] = pc;
            }
        }
    }
    let mut start = Vec::with_capacity(n + 1);
    let mut total = 0;
    for i in 0..n {
        start.push(total);
        total += i - first[i] + 1;
    }
    let mut values = vec![0.0; total];
    for (new, &old) in perm.iter().enumerate() {
        let (cols, vals) = a.row(old);
        for (&c, &v) in cols.iter().zip(vals) {
            let pc = inv[c];
            if pc <= new {
                values[start[new] + pc - first[new]] += v;
            }
        }
    }

    for i in 0..n {
        let fi = first[i];
        for j in fi..=i {
            let fj = first[j];
            let lo = fi.max(fj);
            let (head, tail) = values.split_at_mut(start[i]);
            let row_i = &mut tail[..i - fi + 1];
            let dotp: f64 = if j == i {
                row_i[lo - fi..j - fi].iter().map(|v| v * v).sum()
            } else {
                let row_j = &head[start[j]..start[j] + j - fj + 1];
                row_i[lo - fi..j - fi]
                    .iter()
                    .zip(&row_j[lo - fj..j - fj])
                    .map(|(x, y)| x * y)
                    .sum()
            };
            let s = row_i[j - fi] - dotp;
            if j == i {
                if !(s > 0.0) || !s.is_finite() {
                    return Err(Error::NotPositiveDefinite {
                        pivot: perm[i],
                        value: s,
                    });
                }
                row_i[j - fi] = s.sqrt();
            } else {
                let djj = head[start[j] + j - fj];
                row_i[j - fi] = s / djj;
            }
        }
    }
    Ok(CholeskyFactor {
        n,
        perm,
        first,
        start,
        values,
    })
}

/// Reverse Cuthill-McKee ordering of the matrix graph; `result[new] = old`.
pub fn reverse_cuthill_mckee(a: &SparseSymMatrix) -> Vec<usize> {
    let n = a.dim();
    let degree: Vec<usize> = (0..n).map(|i| a.row_nnz(i)).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let seed = (0..n)
            .filter(|&i| !visited[i])
            .min_by_key(|&i| (degree[i], i))
            .expect("unvisited node remains");
        let root = peripheral_node(a, seed, &degree);
        let mut queue = VecDeque::from([root]);
        visited[root] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = a
                .row(v)
                .0
                .iter()
                .copied()
                .filter(|&u| !visited[u])
                .collect();
            next.sort_by_key(|&u| (degree[u], u));
            for u in next {
                visited[u] = true;
                queue.push_back(u);
            }
        }
    }
    order.reverse();
    order
}

/// Moves from `seed` to a node of (locally) maximal eccentricity.
fn peripheral_node(a: &SparseSymMatrix, seed: usize, degree: &[usize]) -> usize {
    let mut root = seed;
    let mut ecc = 0;
    for _ in 0..4 {
        let levels = bfs_levels(a, root);
        let max_level = levels.iter().flatten().copied().max().unwrap_or(0);
        if max_level <= ecc && ecc > 0 {
            break;
        }
        ecc = max_level;
        root = (0..levels.len())
            .filter(|&i| levels[i] == Some(max_level))
            .min_by_key(|&i| (degree[i], i))
            .unwrap_or(root);
    }
    root
}

fn bfs_levels(a: &SparseSymMatrix, root: usize) -> Vec<Option<usize>> {
    let mut level = vec![None; a.dim()];
    level[root] = Some(0);
    let mut queue = VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        let lv = level[v].unwrap_or(0);
        for &u in a.row(v).0 {
            if level[u].is_none() {
                level[u] = Some(lv + 1);
                queue.push_back(u);
            }
        }
    }
    level
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batched_solve_matches_single() {
        let n = 30;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0 + i as f64 * 0.1));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
            if i + 7 < n {
                t.push((i, i + 7, -0.5));
                t.push((i + 7, i, -0.5));
            }
        }
        let a = SparseSymMatrix::from_triplets(n, &t).unwrap();
        let f = factor_spd(&a).unwrap();
        for count in [1, 3, BATCH, BATCH + 5] {
            let b: Vec<f64> = (0..n * count).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
            let mut many = b.clone();
            f.solve_many_in_place(&mut many);
            for c in 0..count {
                let single = f.solve(&b[c * n..(c + 1) * n]);
                for (x, y) in single.iter().zip(&many[c * n..(c + 1) * n]) {
                    assert!((x - y).abs() < 1e-13 * (1.0 + x.abs()));
                }
            }
        }
    }

    #[test]
    fn identity_factor() {
        let f = factor_spd(&SparseSymMatrix::identity(4)).unwrap();
        for i in 0..4 {
            assert_eq!(f.lower(i, i), 1.0);
        }
        assert_eq!(f.solve(&[1.0, 2.0, 3.0, 4.0]), vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn hand_cholesky_2x2() {
        let a = SparseSymMatrix::from_triplets(
            2,
            &[(0, 0, 4.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 3.0)],
        )
        .unwrap();
        let f = factor_spd_natural(&a).unwrap();
        assert_eq!(f.lower(0, 0), 2.0);
        assert_eq!(f.lower(1, 0), 1.0);
        assert!((f.lower(1, 1) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn indefinite_rejected() {
        let a = SparseSymMatrix::from_triplets(
            2,
            &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)],
        )
        .unwrap();
        assert!(matches!(
            factor_spd(&a),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn laplacian_solve_residual() {
        // 1-D Laplacian with a shuffled numbering
        let n = 50;
        let p: Vec<usize> = (0..n).map(|i| (i * 17) % n).collect();
        let mut t = Vec::new();
        for i in 0..n {
            t.push((p[i], p[i], 2.0 + 1e-3));
            if i + 1 < n {
                t.push((p[i], p[i + 1], -1.0));
                t.push((p[i + 1], p[i], -1.0));
            }
        }
        let a = SparseSymMatrix::from_triplets(n, &t).unwrap();
        let f = factor_spd(&a).unwrap();
        // RCM recovers a tridiagonal envelope
        assert!(f.envelope_size() <= 2 * n);
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let x = f.solve(&b);
        let r: f64 = a
            .mul_vec(&x)
            .iter()
            .zip(&b)
            .map(|(u, v)| (u - v).powi(2))
            .sum::<f64>()
            .sqrt();
        let nb: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(r / nb < 1e-12);
    }
}
