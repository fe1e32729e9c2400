use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sgkron::experiment::properties::{run_suite, SuiteOptions, SUITE_BUDGET_SECONDS};
use sgkron::experiment::{preset, run_config_with, spectrum_report, to_csv, ExperimentConfig, CSV_HEADER};
use sgkron::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_NOT_CONVERGED: u8 = 2;
const EXIT_PROPERTY: u8 = 3;

#[derive(Parser)]
#[command(name = "sgkron", version, about = "Stochastic Galerkin Kronecker solvers and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run PCG benchmarks from a JSON config or a named preset and write CSV.
    Run {
        /// JSON experiment configuration.
        config: Option<PathBuf>,
        /// Built-in grid: table2, table3, table4 or table6.
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
        /// CSV destination; defaults to the config's `output` or stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dense eigenvalue checks of the spectral bounds on a tiny config.
    Spectrum {
        /// JSON experiment configuration (affine, small).
        config: PathBuf,
        /// Also write the report as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run the built-in property suite.
    Verify,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Run { config, preset: name, out } => cmd_run(config, name, out),
        Command::Spectrum { config, csv } => cmd_spectrum(config, csv),
        Command::Verify => cmd_verify(),
    }
}

fn usage_error(e: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(EXIT_USAGE)
}

fn cmd_run(config: Option<PathBuf>, name: Option<String>, out: Option<PathBuf>) -> ExitCode {
    let cfg = match (config, name) {
        (Some(path), None) => ExperimentConfig::from_path(&path),
        (None, Some(name)) => preset(&name),
        _ => return usage_error("give either a config path or --preset"),
    };
    let cfg = match cfg.and_then(|c| c.validate_for_run().map(|_| c)) {
        Ok(c) => c,
        Err(e) => return usage_error(e),
    };
    let out = out.or_else(|| cfg.output.clone());
    eprintln!("{CSV_HEADER}");
    let rows = match run_config_with(&cfg, |row| eprintln!("{}", row.to_csv_line())) {
        Ok(rows) => rows,
        Err(e @ Error::InvalidConfig(_)) => return usage_error(e),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let csv = to_csv(&rows);
    match out {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, &csv) {
                return usage_error(format!("{}: {e}", path.display()));
            }
        }
        None => print!("{csv}"),
    }
    if rows.iter().any(|r| r.hit_max_iter()) {
        ExitCode::from(EXIT_NOT_CONVERGED)
    } else {
        ExitCode::SUCCESS
    }
}

fn cmd_spectrum(config: PathBuf, csv: Option<PathBuf>) -> ExitCode {
    let report = match ExperimentConfig::from_path(&config).and_then(|c| spectrum_report(&c)) {
        Ok(r) => r,
        Err(e @ Error::SizeGuard { .. }) => {
            return usage_error(format!(
                "{e}; spectral checks need a tiny system, lower mesh_level, M or k"
            ))
        }
        Err(e) => return usage_error(e),
    };
    print!("{report}");
    if let Some(path) = csv {
        if let Err(e) = std::fs::write(&path, report.to_csv()) {
            return usage_error(format!("{}: {e}", path.display()));
        }
    }
    if report.all_pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_PROPERTY)
    }
}

fn cmd_verify() -> ExitCode {
    let report = run_suite(&SuiteOptions::default());
    for r in &report.results {
        match &r.outcome {
            Ok(()) => println!("ok    {:<28} {:.2}s", r.name, r.seconds),
            Err(msg) => println!("FAIL  {:<28} {msg}", r.name),
        }
    }
    println!("total {:.2}s", report.seconds);
    if report.seconds > SUITE_BUDGET_SECONDS {
        println!("warning: suite exceeded its {SUITE_BUDGET_SECONDS:.0}s budget");
    }
    match report.first_failure() {
        Some(f) => {
            eprintln!("property failed: {}", f.name);
            ExitCode::from(EXIT_PROPERTY)
        }
        None => ExitCode::SUCCESS,
    }
}
