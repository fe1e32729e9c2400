//! Experiment configurations, presets for the benchmark grids, the run and
//! spectrum drivers behind the `sgkron` binary, and the property suite run
//! by `sgkron verify`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem2d::build_mesh;
use crate::kronsys::{
    build_affine_system, build_lognormal_system, AffineSystem, AlphaBar, BlockVector,
    KroneckerSumOperator, LognormalSystem,
};
use crate::pcg::{pcg_solve, ResidualNorm, SolverConfig};
use crate::precond::{
    build_kron, build_mean_based, build_sbgs_from_operator, build_sbgs_lognormal, build_trunc,
    Preconditioner,
};
use crate::spectral;

pub mod properties;

/// CSV header of [`ResultRow`] output.
pub const CSV_HEADER: &str =
    "problem,decay,h,M,k,precond,r,iterations,converged,final_relres,setup_s,solve_s,n_unknowns";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    Affine,
    Lognormal,
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Problem::Affine => "affine",
            Problem::Lognormal => "lognormal",
        })
    }
}

/// Decay of the Fourier coefficients, `‖a_m‖ ∝ m^{-σ̃}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decay {
    /// `σ̃ = 4`
    Fast,
    /// `σ̃ = 2`
    Slow,
    Sigma(f64),
}

impl Decay {
    pub fn sigma(self) -> f64 {
        match self {
            Decay::Fast => 4.0,
            Decay::Slow => 2.0,
            Decay::Sigma(s) => s,
        }
    }
}

impl fmt::Display for Decay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Decay::Fast => f.write_str("fast"),
            Decay::Slow => f.write_str("slow"),
            Decay::Sigma(s) => write!(f, "sigma={s}"),
        }
    }
}

/// A scalar or a list of scalars in the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

impl<T> From<Vec<T>> for OneOrMany<T> {
    fn from(v: Vec<T>) -> Self {
        OneOrMany::Many(v)
    }
}

/// `"auto"`, `{"value": x}` or a bare number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphaBarSpec {
    Number(f64),
    Mode(AlphaBar),
}

impl AlphaBarSpec {
    pub fn to_alpha_bar(self) -> AlphaBar {
        match self {
            AlphaBarSpec::Number(v) => AlphaBar::Value(v),
            AlphaBarSpec::Mode(m) => m,
        }
    }
}

/// `"mean"`, `"kron"`, `{"trunc_exact": r}` or `{"sbgs": r}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrecondSpec {
    Mean,
    Kron,
    TruncExact(usize),
    Sbgs(usize),
}

impl PrecondSpec {
    pub fn label(self) -> &'static str {
        match self {
            PrecondSpec::Mean => "mean",
            PrecondSpec::Kron => "kron",
            PrecondSpec::TruncExact(_) => "trunc_exact",
            PrecondSpec::Sbgs(_) => "sbgs",
        }
    }

    pub fn level(self) -> Option<usize> {
        match self {
            PrecondSpec::Mean => Some(0),
            PrecondSpec::Kron => None,
            PrecondSpec::TruncExact(r) | PrecondSpec::Sbgs(r) => Some(r),
        }
    }
}

fn default_decay() -> OneOrMany<Decay> {
    OneOrMany::One(Decay::Slow)
}
fn default_n_terms() -> usize {
    20
}
fn default_tol() -> f64 {
    1e-6
}
fn default_max_iter() -> usize {
    1000
}
fn default_true() -> bool {
    true
}

/// One experiment file. List-valued grid fields expand to the Cartesian
/// product, iterated as decay, mesh level, `M`, `k` (outermost first), with
/// all preconditioners run on each system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: Problem,
    #[serde(default = "default_decay")]
    pub decay: OneOrMany<Decay>,
    /// Defaults to `"auto"` for the affine problem and 0.547 for lognormal.
    #[serde(default)]
    pub alpha_bar: Option<AlphaBarSpec>,
    pub mesh_level: OneOrMany<u32>,
    #[serde(rename = "M", alias = "params")]
    pub params: OneOrMany<usize>,
    #[serde(rename = "k", alias = "degree")]
    pub degree: OneOrMany<u32>,
    #[serde(rename = "N", alias = "n_terms", default = "default_n_terms")]
    pub n_terms: usize,
    #[serde(default)]
    pub preconditioners: Vec<PrecondSpec>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub residual_norm: ResidualNorm,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Write measured wall-clock times; `false` writes zeros so that the CSV
    /// is byte-identical across runs.
    #[serde(default = "default_true")]
    pub timing: bool,
    /// Truncation levels checked by the spectrum command (default `0..=M`).
    #[serde(default)]
    pub spectral_levels: Option<Vec<usize>>,
}

/// Lognormal `ᾱ` used when none is configured.
pub const LOGNORMAL_ALPHA_BAR: f64 = 0.547;

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| {
            Error::InvalidConfig(format!("line {}, column {}: {e}", e.line(), e.column()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn alpha_bar(&self) -> AlphaBar {
        match (self.alpha_bar, self.problem) {
            (Some(spec), _) => spec.to_alpha_bar(),
            (None, Problem::Affine) => AlphaBar::Auto,
            (None, Problem::Lognormal) => AlphaBar::Value(LOGNORMAL_ALPHA_BAR),
        }
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            tol: self.tol,
            max_iter: self.max_iter,
            residual_norm: self.residual_norm,
        }
    }

    /// Grid cells in run order.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for decay in self.decay.to_vec() {
            for level in self.mesh_level.to_vec() {
                for params in self.params.to_vec() {
                    for degree in self.degree.to_vec() {
                        out.push(Cell {
                            decay,
                            level,
                            params,
                            degree,
                        });
                    }
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        for (name, empty) in [
            ("decay", self.decay.to_vec().is_empty()),
            ("mesh_level", self.mesh_level.to_vec().is_empty()),
            ("M", self.params.to_vec().is_empty()),
            ("k", self.degree.to_vec().is_empty()),
        ] {
            if empty {
                return bad(format!("field `{name}` must not be empty"));
            }
        }
        for d in self.decay.to_vec() {
            if !(d.sigma() > 1.0) {
                return bad(format!("field `decay`: exponent must exceed 1, got {}", d.sigma()));
            }
        }
        for l in self.mesh_level.to_vec() {
            if !(1..=10).contains(&l) {
                return bad(format!("field `mesh_level`: {l} outside 1..=10"));
            }
        }
        for m in self.params.to_vec() {
            if m == 0 {
                return bad("field `M` must be positive".into());
            }
            if self.problem == Problem::Lognormal && m >= self.n_terms {
                return bad(format!(
                    "field `M`: lognormal problem needs M < N, got M = {m}, N = {}",
                    self.n_terms
                ));
            }
        }
        if let AlphaBar::Value(v) = self.alpha_bar() {
            if !(v > 0.0) {
                return bad(format!("field `alpha_bar` must be positive, got {v}"));
            }
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return bad(format!("field `tol` must lie in (0, 1), got {}", self.tol));
        }
        if self.max_iter == 0 {
            return bad("field `max_iter` must be positive".into());
        }
        if let Some(levels) = &self.spectral_levels {
            if levels.is_empty() {
                return bad("field `spectral_levels` must not be empty".into());
            }
        }
        Ok(())
    }

    /// Additional check for the run command.
    pub fn validate_for_run(&self) -> Result<()> {
        if self.preconditioners.is_empty() {
            return Err(Error::InvalidConfig(
                "field `preconditioners` must list at least one preconditioner".into(),
            ));
        }
        Ok(())
    }
}

/// One point of the parameter grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub decay: Decay,
    pub level: u32,
    pub params: usize,
    pub degree: u32,
}

/// One `(cell, preconditioner)` run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub problem: Problem,
    pub decay: String,
    pub h: f64,
    pub params: usize,
    pub degree: u32,
    /// Preconditioner label, suffixed with `[not_pd]` or `[breakdown]` when
    /// the run could not proceed.
    pub precond: String,
    pub r: Option<usize>,
    pub iterations: usize,
    pub converged: bool,
    pub final_relres: f64,
    pub setup_seconds: f64,
    pub solve_seconds: f64,
    pub n_unknowns: usize,
}

impl ResultRow {
    /// True for rows that hit the iteration limit without an error label.
    pub fn hit_max_iter(&self) -> bool {
        !self.converged && !self.precond.contains('[')
    }

    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{:.3e},{:.2},{:.2},{}",
            self.problem,
            self.decay,
            self.h,
            self.params,
            self.degree,
            self.precond,
            self.r.map(|r| r.to_string()).unwrap_or_default(),
            self.iterations,
            self.converged,
            self.final_relres,
            self.setup_seconds,
            self.solve_seconds,
            self.n_unknowns
        )
    }
}

pub fn to_csv(rows: &[ResultRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.to_csv_line());
        s.push('\n');
    }
    s
}

/// A discretized benchmark system of either kind.
#[derive(Debug, Clone)]
pub enum System {
    Affine(AffineSystem),
    Lognormal(LognormalSystem),
}

impl System {
    pub fn operator(&self) -> &KroneckerSumOperator {
        match self {
            System::Affine(s) => &s.operator,
            System::Lognormal(s) => &s.operator,
        }
    }

    pub fn rhs(&self) -> &BlockVector {
        match self {
            System::Affine(s) => &s.rhs,
            System::Lognormal(s) => &s.rhs,
        }
    }
}

pub fn build_system(cfg: &ExperimentConfig, cell: Cell) -> Result<System> {
    let mesh = build_mesh(cell.level)?;
    let sigma = cell.decay.sigma();
    match cfg.problem {
        Problem::Affine => Ok(System::Affine(build_affine_system(
            mesh,
            cell.params,
            cell.degree,
            sigma,
            cfg.alpha_bar(),
        )?)),
        Problem::Lognormal => Ok(System::Lognormal(build_lognormal_system(
            mesh,
            cell.params,
            cell.degree,
            cfg.n_terms,
            sigma,
            cfg.alpha_bar().resolve(sigma)?,
        )?)),
    }
}

/// Builds a preconditioner for `system`. Truncation levels beyond the
/// number of available terms keep every term.
pub fn build_preconditioner(system: &System, spec: PrecondSpec) -> Result<Preconditioner> {
    let op = system.operator();
    match (spec, system) {
        (PrecondSpec::Mean, _) => build_mean_based(&op.terms()[0].k, op.ny()),
        (PrecondSpec::Kron, _) => build_kron(op),
        (PrecondSpec::TruncExact(r), System::Affine(_)) => build_trunc(op.terms(), r),
        (PrecondSpec::TruncExact(r), System::Lognormal(s)) => build_trunc(&s.ordered_terms, r),
        (PrecondSpec::Sbgs(r), System::Affine(_)) => build_sbgs_from_operator(op, r),
        (PrecondSpec::Sbgs(r), System::Lognormal(s)) => build_sbgs_lognormal(s, r),
    }
}

/// Runs one preconditioner on one system. Indefinite preconditioners and
/// CG breakdowns become non-converged rows with an error label.
pub fn run_single(
    cfg: &ExperimentConfig,
    cell: Cell,
    system: &System,
    spec: PrecondSpec,
) -> Result<ResultRow> {
    let op = system.operator();
    let mut row = ResultRow {
        problem: cfg.problem,
        decay: cell.decay.to_string(),
        h: 1.0 / (1u64 << cell.level) as f64,
        params: cell.params,
        degree: cell.degree,
        precond: spec.label().to_string(),
        r: spec.level(),
        iterations: 0,
        converged: false,
        final_relres: f64::NAN,
        setup_seconds: 0.0,
        solve_seconds: 0.0,
        n_unknowns: op.dim(),
    };
    let start = Instant::now();
    let pre = match build_preconditioner(system, spec) {
        Ok(p) => p,
        Err(Error::NotPositiveDefinite { .. }) => {
            row.precond.push_str("[not_pd]");
            return Ok(row);
        }
        Err(e) => return Err(e),
    };
    let setup = start.elapsed().as_secs_f64();
    match pcg_solve(op, &pre, system.rhs(), &cfg.solver()) {
        Ok((_, report)) => {
            row.iterations = report.iterations;
            row.converged = report.converged;
            row.final_relres = report.final_residual();
            if cfg.timing {
                row.setup_seconds = setup;
                row.solve_seconds = report.solve_seconds;
            }
        }
        Err(Error::Breakdown { iteration, .. }) => {
            row.precond.push_str("[breakdown]");
            row.iterations = iteration;
        }
        Err(Error::NotPositiveDefinite { .. }) => row.precond.push_str("[not_pd]"),
        Err(Error::Unavailable(_)) => row.precond.push_str("[inner_failed]"),
        Err(e) => return Err(e),
    }
    Ok(row)
}

/// Executes every `(cell, preconditioner)` pair in declared order.
pub fn run_config(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    run_config_with(cfg, |_| {})
}

/// As [`run_config`], reporting each finished row to `progress`.
pub fn run_config_with(
    cfg: &ExperimentConfig,
    mut progress: impl FnMut(&ResultRow),
) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    cfg.validate_for_run()?;
    let mut rows = Vec::new();
    for cell in cfg.cells() {
        let system = build_system(cfg, cell)?;
        for &spec in &cfg.preconditioners {
            let row = run_single(cfg, cell, &system, spec)?;
            progress(&row);
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Spectral inclusion report for every grid cell of a tiny configuration.
pub fn spectrum_report(cfg: &ExperimentConfig) -> Result<spectral::SpectralReport> {
    cfg.validate()?;
    let mut claims = Vec::new();
    for cell in cfg.cells() {
        let system = build_system(cfg, cell)?;
        let levels = cfg
            .spectral_levels
            .clone()
            .unwrap_or_else(|| (0..=cell.params).collect());
        for r in levels {
            match &system {
                System::Affine(s) => claims.extend(spectral::verify_inclusions(s, r)?),
                System::Lognormal(s) => claims.extend(spectral::verify_lognormal(s, r)?),
            }
        }
    }
    Ok(spectral::SpectralReport { claims })
}

/// Named parameter grids of the benchmark tables.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let base = |problem, levels: Vec<u32>, params: Vec<usize>, degrees: Vec<u32>, pre| {
        ExperimentConfig {
            problem,
            decay: OneOrMany::Many(vec![Decay::Fast, Decay::Slow]),
            alpha_bar: None,
            mesh_level: levels.into(),
            params: params.into(),
            degree: degrees.into(),
            n_terms: 20,
            preconditioners: pre,
            tol: 1e-6,
            max_iter: 1000,
            residual_norm: ResidualNorm::Euclidean,
            seed: 0,
            output: None,
            timing: true,
            spectral_levels: None,
        }
    };
    let sbgs_1_6: Vec<PrecondSpec> = (1..=6).map(PrecondSpec::Sbgs).collect();
    match name {
        "table2" => Ok(base(
            Problem::Affine,
            vec![4],
            vec![8],
            (1..=4).collect(),
            (0..=6).map(PrecondSpec::TruncExact).collect(),
        )),
        "table3" => Ok(base(
            Problem::Affine,
            vec![4],
            vec![8],
            (1..=6).collect(),
            [vec![PrecondSpec::Kron, PrecondSpec::Mean], sbgs_1_6].concat(),
        )),
        "table4" => Ok(base(
            Problem::Affine,
            (3..=7).collect(),
            vec![4, 8],
            vec![3],
            vec![PrecondSpec::Mean, PrecondSpec::Sbgs(1), PrecondSpec::Sbgs(2)],
        )),
        "table6" => {
            let mut cfg = base(
                Problem::Lognormal,
                vec![4],
                vec![6],
                (1..=6).collect(),
                [vec![PrecondSpec::Kron, PrecondSpec::Mean], sbgs_1_6].concat(),
            );
            cfg.decay = OneOrMany::One(Decay::Slow);
            cfg.alpha_bar = Some(AlphaBarSpec::Number(LOGNORMAL_ALPHA_BAR));
            Ok(cfg)
        }
        other => Err(Error::InvalidConfig(format!(
            "unknown preset `{other}` (expected table2, table3, table4 or table6)"
        ))),
    }
}

pub const PRESETS: [&str; 4] = ["table2", "table3", "table4", "table6"];
