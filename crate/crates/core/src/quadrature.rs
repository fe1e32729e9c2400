//! Gauss rules computed by Newton iteration on the classical three-term
//! recurrences, independent of the orthonormal recurrence constants used
//! elsewhere in the crate.

/// Gauss–Legendre nodes and weights on `[-1, 1]` (weights sum to 2).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// `P_n(x)` and `P_n'(x)` by Bonnet's recursion.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let k = k as f64;
        let p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Hermite rule for the standard normal density (weights sum to 1).
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    // initial guesses from the eigenvalues of the Jacobi matrix of He_n
    let mut jac = nalgebra::DMatrix::<f64>::zeros(n, n);
    for j in 1..n {
        let b = (j as f64).sqrt();
        jac[(j, j - 1)] = b;
        jac[(j - 1, j)] = b;
    }
    let mut guesses: Vec<f64> = nalgebra::SymmetricEigen::new(jac).eigenvalues.iter().copied().collect();
    guesses.sort_by(f64::total_cmp);
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let log_fact: f64 = (1..=n).map(|k| (k as f64).ln()).sum();
    for mut x in guesses {
        for _ in 0..100 {
            let (h, hm1) = hermite_prob(n, x);
            let dx = h / (n as f64 * hm1);
            x -= dx;
            if dx.abs() < 1e-15 * (1.0 + x.abs()) {
                break;
            }
        }
        let (_, hm1) = hermite_prob(n, x);
        let w = (log_fact - 2.0 * (n as f64 * hm1.abs()).ln()).exp();
        nodes.push(x);
        weights.push(w);
    }
    (nodes, weights)
}

/// `(He_n(x), He_{n-1}(x))` for the probabilists' Hermite polynomials.
fn hermite_prob(n: usize, x: f64) -> (f64, f64) {
    let (mut h0, mut h1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let h2 = x * h1 - k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    (h1, h0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(5);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        let m8: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
        assert!((m8 - 2.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn hermite_moments() {
        let (x, w) = gauss_hermite(8);
        let s: f64 = w.iter().sum();
        assert!((s - 1.0).abs() < 1e-13);
        // E[y^6] = 15
        let m6: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(6)).sum();
        assert!((m6 - 15.0).abs() < 1e-11);
    }
}
