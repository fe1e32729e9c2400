#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};

/// Golub–Welsch rule for a symmetric Jacobi matrix with zero diagonal and
/// the given off-diagonal; weights normalized to sum to one.
fn golub_welsch(offdiag: impl Fn(usize) -> f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut j = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        let b = offdiag(i);
        j[(i, i - 1)] = b;
        j[(i - 1, i)] = b;
    }
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| (eig.eigenvalues[k], eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Nodes and probability weights for the uniform density on [-1, 1].
pub fn uniform_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    golub_welsch(|i| i as f64 / ((4 * i * i - 1) as f64).sqrt(), n)
}

/// Nodes and probability weights for the standard normal density.
pub fn normal_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    golub_welsch(|i| (i as f64).sqrt(), n)
}

/// Orthonormal Legendre polynomial for the uniform density, via Bonnet's
/// recursion on the classical `P_n` and rescaling by `sqrt(2n + 1)`.
pub fn legendre(n: u32, y: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, y);
    if n == 0 {
        return 1.0;
    }
    for k in 1..n {
        let k = k as f64;
        let p2 = ((2.0 * k + 1.0) * y * p1 - k * p0) / (k + 1.0);
        p0 = p1;
        p1 = p2;
    }
    p1 * ((2 * n + 1) as f64).sqrt()
}

/// Orthonormal probabilists' Hermite polynomial `He_n / sqrt(n!)`.
pub fn hermite(n: u32, y: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, y);
    if n == 0 {
        return 1.0;
    }
    for k in 1..n {
        let h2 = y * h1 - k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    let fact: f64 = (1..=n).map(|i| i as f64).product();
    h1 / fact.sqrt()
}

pub mod oracle_checks;
