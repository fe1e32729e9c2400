//! Acceptance criteria. Each criterion prints one `criterion N: PASS|FAIL`
//! line with the measured deviation; the process fails if any criterion does.

mod common;

use std::collections::HashMap;

use common::oracle_checks::*;
use sgkron::experiment::{preset, run_config, Decay, ExperimentConfig, OneOrMany, ResultRow};
use sgkron::fem2d::{build_mesh, HermiteNormalization, LognormalExpansion};
use sgkron::gram::{gram_linear, split_lower};
use sgkron::kronsys::{build_affine_system, build_lognormal_system, AlphaBar, KroneckerSumOperator};
use sgkron::multiindex::{build_index_set, MultiIndex};
use sgkron::orthopoly::PolyFamily;
use sgkron::precond::Sbgs;
use sgkron::spectral::{dense_cholesky, lognormal_trunc_is_spd, report};

/// Allowed deviation of an iteration count from the published value.
const ITER_TOL: usize = 2;
/// Allowed relative deviation of a published sup norm.
const NORM_TOL: f64 = 0.02;

fn verdict(n: u32, name: &str, pass: bool, detail: String) {
    println!(
        "criterion {n}: {} {name} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {n} failed: {detail}");
}

/// `(decay, k)` → published counts in preconditioner order.
type Table = Vec<((Decay, u32), Vec<usize>)>;

fn observed(rows: &[ResultRow]) -> HashMap<(String, u32, String), usize> {
    rows.iter()
        .map(|r| {
            let label = format!("{}{}", r.precond, r.r.map(|x| x.to_string()).unwrap_or_default());
            ((r.decay.clone(), r.degree, label), r.iterations)
        })
        .collect()
}

/// Compares a run against a published table; returns (worst deviation,
/// mismatching cells).
fn compare(rows: &[ResultRow], labels: &[&str], table: &Table) -> (usize, Vec<String>) {
    assert!(rows.iter().all(|r| r.converged), "every run must converge");
    let got = observed(rows);
    let mut worst = 0;
    let mut bad = Vec::new();
    for ((decay, k), counts) in table {
        for (label, &expect) in labels.iter().zip(counts) {
            let key = (decay.to_string(), *k, label.to_string());
            let have = *got.get(&key).unwrap_or_else(|| panic!("missing run {key:?}"));
            let dev = have.abs_diff(expect);
            worst = worst.max(dev);
            if dev > ITER_TOL {
                bad.push(format!("{decay} k={k} {label}: {have} vs {expect}"));
            }
        }
    }
    (worst, bad)
}

fn table(rows: &[(Decay, u32, &[usize])]) -> Table {
    rows.iter().map(|&(d, k, c)| ((d, k), c.to_vec())).collect()
}

fn criterion_1_exact_truncation_iterations() {
    use Decay::{Fast, Slow};
    let published = table(&[
        (Fast, 1, &[13, 4, 3, 3, 2, 2, 2]),
        (Fast, 2, &[16, 5, 4, 3, 3, 2, 2]),
        (Fast, 3, &[21, 6, 4, 3, 3, 2, 2]),
        (Fast, 4, &[24, 6, 4, 3, 3, 3, 2]),
        (Slow, 1, &[10, 6, 4, 4, 4, 3, 3]),
        (Slow, 2, &[12, 7, 5, 5, 4, 4, 3]),
        (Slow, 3, &[14, 7, 6, 5, 4, 4, 4]),
        (Slow, 4, &[15, 8, 6, 5, 4, 4, 4]),
    ]);
    let rows = run_config(&preset("table2").unwrap()).unwrap();
    assert_eq!(rows.len(), 56);
    let labels: Vec<String> = (0..=6).map(|r| format!("trunc_exact{r}")).collect();
    let labels: Vec<&str> = labels.iter().map(String::as_str).collect();
    let (worst, bad) = compare(&rows, &labels, &published);
    verdict(1, "exact truncation preconditioners", bad.is_empty(), format!("max deviation {worst}, outside ±{ITER_TOL}: {bad:?}"));
}

const BASELINE_SBGS: [&str; 8] = ["kron", "mean0", "sbgs1", "sbgs2", "sbgs3", "sbgs4", "sbgs5", "sbgs6"];

fn criterion_2_block_gauss_seidel_iterations() {
    use Decay::{Fast, Slow};
    let published = table(&[
        (Fast, 1, &[12, 13, 7, 6, 6, 6, 6, 6]),
        (Fast, 2, &[16, 16, 8, 7, 7, 7, 7, 7]),
        (Fast, 3, &[20, 21, 9, 9, 8, 8, 8, 8]),
        (Fast, 4, &[24, 24, 10, 9, 9, 9, 9, 9]),
        (Fast, 5, &[26, 27, 11, 10, 10, 10, 10, 10]),
        (Fast, 6, &[29, 29, 12, 11, 11, 11, 11, 11]),
        (Slow, 1, &[9, 10, 6, 5, 5, 5, 5, 5]),
        (Slow, 2, &[12, 12, 7, 6, 6, 6, 5, 5]),
        (Slow, 3, &[14, 14, 8, 7, 6, 6, 6, 6]),
        (Slow, 4, &[15, 15, 9, 7, 7, 6, 6, 6]),
        (Slow, 5, &[16, 16, 9, 7, 7, 7, 6, 6]),
        (Slow, 6, &[17, 17, 10, 8, 7, 7, 7, 7]),
    ]);
    let rows = run_config(&preset("table3").unwrap()).unwrap();
    assert_eq!(rows.len(), 2 * 6 * 8);
    let (worst, bad) = compare(&rows, &BASELINE_SBGS, &published);
    verdict(2, "block Gauss-Seidel and baseline preconditioners", bad.is_empty(), format!("max deviation {worst}, outside ±{ITER_TOL}: {bad:?}"));
}

fn criterion_3_mesh_and_parameter_independence() {
    // (decay, level) -> [P_0, P~_1, P~_2] for M = 4 then M = 8
    let published: Vec<(Decay, u32, [usize; 6])> = vec![
        (Decay::Fast, 3, [18, 8, 8, 18, 8, 8]),
        (Decay::Fast, 4, [21, 9, 9, 21, 9, 9]),
        (Decay::Fast, 5, [23, 10, 9, 23, 10, 9]),
        (Decay::Slow, 3, [13, 7, 6, 13, 7, 6]),
        (Decay::Slow, 4, [14, 8, 7, 14, 8, 7]),
        (Decay::Slow, 5, [14, 8, 7, 15, 8, 7]),
    ];
    let cfg = ExperimentConfig {
        mesh_level: OneOrMany::Many(vec![3, 4, 5]),
        ..preset("table4").unwrap()
    };
    let rows = run_config(&cfg).unwrap();
    assert!(rows.iter().all(|r| r.converged));
    let labels = ["mean0", "sbgs1", "sbgs2"];
    let count = |decay: Decay, level: u32, m: usize, label: &str| -> usize {
        let h = 1.0 / (1u64 << level) as f64;
        rows.iter()
            .find(|r| {
                r.decay == decay.to_string()
                    && r.h == h
                    && r.params == m
                    && format!("{}{}", r.precond, r.r.unwrap_or(0)) == label
            })
            .map(|r| r.iterations)
            .expect("run present")
    };
    let mut problems = Vec::new();
    let mut worst = 0;
    for (decay, level, counts) in &published {
        for (i, &expect) in counts.iter().enumerate() {
            let m = if i < 3 { 4 } else { 8 };
            let have = count(*decay, *level, m, labels[i % 3]);
            worst = worst.max(have.abs_diff(expect));
            if have.abs_diff(expect) > ITER_TOL {
                problems.push(format!("{decay} L={level} M={m} {}: {have} vs {expect}", labels[i % 3]));
            }
        }
    }
    let mut spread = 0;
    for decay in [Decay::Fast, Decay::Slow] {
        for label in labels {
            for level in 3..=5 {
                let d = count(decay, level, 4, label).abs_diff(count(decay, level, 8, label));
                spread = spread.max(d);
                if d > 1 {
                    problems.push(format!("{decay} L={level} {label}: M=4 vs M=8 differ by {d}"));
                }
            }
            for m in [4, 8] {
                let d = count(decay, 4, m, label).abs_diff(count(decay, 5, m, label));
                spread = spread.max(d);
                if d > 1 {
                    problems.push(format!("{decay} M={m} {label}: L=4 vs L=5 differ by {d}"));
                }
            }
        }
    }
    // The published mean-based fast-decay counts themselves move from 21 to 23
    // between L=4 and L=5, so this sub-check cannot hold for a faithful
    // reproduction; the failure is reported rather than masked.
    verdict(
        3,
        "mesh and parameter-count independence",
        problems.is_empty(),
        format!("max deviation {worst}, max M/h spread {spread}: {problems:?}"),
    );
}

fn criterion_4_lognormal_iterations() {
    let published = table(&[
        (Decay::Slow, 1, &[12, 12, 6, 7, 6, 6, 6, 6]),
        (Decay::Slow, 2, &[18, 19, 8, 10, 9, 9, 8, 8]),
    ]);
    let cfg = ExperimentConfig {
        degree: OneOrMany::Many(vec![1, 2]),
        ..preset("table6").unwrap()
    };
    let rows = run_config(&cfg).unwrap();
    let (worst, bad) = compare(&rows, &BASELINE_SBGS, &published);
    verdict(4, "lognormal preconditioners", bad.is_empty(), format!("max deviation {worst}, outside ±{ITER_TOL}: {bad:?}"));
}

fn criterion_5_lognormal_term_ordering() {
    let m = 6;
    let unit = |e: &[u32]| {
        let mut v = vec![0u32; m];
        v[..e.len()].copy_from_slice(e);
        MultiIndex::new(v)
    };
    let published = [
        (unit(&[]), 3.1960),
        (unit(&[1]), 1.7482),
        (unit(&[2]), 0.6762),
        (unit(&[0, 1]), 0.4371),
        (unit(&[1, 1]), 0.2391),
        (unit(&[3]), 0.2135),
        (unit(&[0, 0, 1]), 0.1942),
        (unit(&[0, 0, 0, 1]), 0.1093),
    ];
    let candidates = build_index_set(m, 6).unwrap();
    let factorial = LognormalExpansion::fourier(20, 2.0, 0.547).order_by_magnitude(&candidates).unwrap();
    let check = |ordered: &[(MultiIndex, f64)]| -> (bool, f64) {
        let mut worst: f64 = 0.0;
        let mut ok = true;
        for ((alpha, expect), (got_alpha, got)) in published.iter().zip(ordered) {
            ok &= alpha == got_alpha;
            let rel = (got - expect).abs() / expect;
            worst = worst.max(rel);
            ok &= rel <= NORM_TOL;
        }
        (ok, worst)
    };
    let (ok, worst) = check(&factorial);
    let plain = LognormalExpansion::fourier(20, 2.0, 0.547)
        .with_normalization(HermiteNormalization::PlainRoot)
        .order_by_magnitude(&candidates)
        .unwrap();
    let (plain_ok, plain_worst) = check(&plain);
    let top: Vec<String> = factorial.iter().take(8).map(|(a, v)| format!("{a}:{v:.3}")).collect();
    verdict(
        5,
        "lognormal term ordering",
        ok,
        format!(
            "sqrt(α!) convention max rel. deviation {worst:.4} [{}]; plain-root convention {} ({plain_worst:.4})",
            top.join(" "),
            if plain_ok { "also matches" } else { "does not match" }
        ),
    );
}

fn criterion_6_spectral_inclusions() {
    let mut claims = Vec::new();
    for sigma in [4.0, 2.0] {
        let sys = build_affine_system(build_mesh(2).unwrap(), 3, 2, sigma, AlphaBar::Auto).unwrap();
        claims.extend(report(&sys, &[0, 1, 2, 3]).unwrap().claims);
    }
    for c in &claims {
        println!("  {c}");
    }
    let failed: Vec<String> = claims.iter().filter(|c| !c.pass).map(|c| c.to_string()).collect();
    let margin = claims.iter().map(|c| c.margin()).fold(f64::INFINITY, f64::min);
    verdict(
        6,
        "spectral inclusion bounds",
        claims.len() == 48 && failed.is_empty(),
        format!("{} claims, smallest margin {margin:.3e}, failures {failed:?}", claims.len()),
    );
}

fn criterion_7_structure() {
    let mut problems = Vec::new();
    for params in 1..=8 {
        for k in 1..=6 {
            let set = build_index_set(params, k).unwrap();
            for m in 1..=params {
                let g = gram_linear(m, &set, PolyFamily::LegendreUniform).unwrap();
                if g.max_row_nnz() > 2 || g.diagonal().iter().any(|&d| d != 0.0) {
                    problems.push(format!("G_{m} M={params} k={k}"));
                }
                let l = split_lower(&g).unwrap();
                if l.max_row_nnz() > 1 || l.transpose().max_row_nnz() > 1 {
                    problems.push(format!("L_{m} M={params} k={k}"));
                }
            }
        }
    }
    for params in 1..=8 {
        let sys = build_affine_system(build_mesh(2).unwrap(), params, 3, 2.0, AlphaBar::Auto).unwrap();
        if sys.operator.max_blocks_per_row() > 2 * params + 1 {
            problems.push(format!("A has > 2M+1 blocks per row at M={params}"));
        }
    }
    let mut identity_err: f64 = 0.0;
    for sigma in [2.0, 4.0] {
        let sys = build_affine_system(build_mesh(2).unwrap(), 3, 2, sigma, AlphaBar::Auto).unwrap();
        for r in 0..=3 {
            let terms = &sys.operator.terms()[..r + 1];
            let sbgs = Sbgs::from_terms(terms).unwrap();
            let tilde = sbgs.assemble_dense().unwrap();
            let p_r = KroneckerSumOperator::new(terms.to_vec()).unwrap().assemble_dense().unwrap();
            let (d, s) = sbgs.dense_parts();
            let correction = &s * d.cholesky().unwrap().solve(&s.transpose());
            identity_err = identity_err.max((&tilde - (&p_r + correction)).amax() / p_r.amax());
        }
    }
    if identity_err > 1e-10 {
        problems.push(format!("SBGS identity off by {identity_err:e}"));
    }
    let sys = build_lognormal_system(build_mesh(2).unwrap(), 3, 3, 20, 2.0, 0.547).unwrap();
    let mut indefinite = Vec::new();
    for r in 0..=8 {
        if !lognormal_trunc_is_spd(&sys, r).unwrap() {
            indefinite.push(r);
        }
        let tilde = Sbgs::from_terms(&sys.ordered_terms[..r + 1]).unwrap().assemble_dense().unwrap();
        if dense_cholesky(&tilde).is_err() {
            problems.push(format!("lognormal P~_{r} not SPD"));
        }
    }
    if indefinite.is_empty() {
        problems.push("no indefinite lognormal P_r exercised".into());
    }
    verdict(
        7,
        "structural properties",
        problems.is_empty(),
        format!("SBGS identity error {identity_err:.2e}, indefinite P_r at r={indefinite:?}, problems {problems:?}"),
    );
}

fn criterion_8_oracles() {
    let checks = [
        ("matvec vs dense", matvec_error(), MATVEC_TOL),
        ("linear Gram vs quadrature", linear_gram_error(), GRAM_TOL),
        ("Hermite Gram vs quadrature", hermite_gram_error(), GRAM_TOL),
        ("Kronecker factor vs least squares", kron_least_squares_error(), KRON_LS_TOL),
        ("lognormal coefficients vs Gauss-Hermite", lognormal_coefficient_error(), LOGNORMAL_TOL),
    ];
    let detail: Vec<String> = checks.iter().map(|(n, e, t)| format!("{n} {e:.1e} (tol {t:.0e})")).collect();
    verdict(8, "oracle agreement", checks.iter().all(|(_, e, t)| e < t), detail.join("; "));
}

fn main() {
    let criteria: [(&str, fn()); 8] = [
        ("criterion_1_exact_truncation_iterations", criterion_1_exact_truncation_iterations),
        ("criterion_2_block_gauss_seidel_iterations", criterion_2_block_gauss_seidel_iterations),
        ("criterion_3_mesh_and_parameter_independence", criterion_3_mesh_and_parameter_independence),
        ("criterion_4_lognormal_iterations", criterion_4_lognormal_iterations),
        ("criterion_5_lognormal_term_ordering", criterion_5_lognormal_term_ordering),
        ("criterion_6_spectral_inclusions", criterion_6_spectral_inclusions),
        ("criterion_7_structure", criterion_7_structure),
        ("criterion_8_oracles", criterion_8_oracles),
    ];
    let mut failed = Vec::new();
    for (name, check) in criteria {
        if std::panic::catch_unwind(check).is_err() {
            failed.push(name);
        }
    }
    if !failed.is_empty() {
        eprintln!("failing criteria: {failed:?}");
        std::process::exit(1);
    }
}
