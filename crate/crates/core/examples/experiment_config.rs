// Runs a small benchmark grid from a JSON configuration and prints the CSV.

use sgkron::experiment::{run_config, to_csv, ExperimentConfig};

const CONFIG: &str = r#"{
    "problem": "affine",
    "decay": ["fast", "slow"],
    "mesh_level": 3,
    "M": 4,
    "k": [1, 2],
    "preconditioners": ["mean", "kron", {"trunc_exact": 1}, {"sbgs": 1}, {"sbgs": 2}],
    "timing": false
}"#;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ExperimentConfig::from_json(CONFIG)?;
    let rows = run_config(&cfg)?;
    print!("{}", to_csv(&rows));
    assert_eq!(rows.len(), 2 * 2 * 5);
    assert!(rows.iter().all(|r| r.converged));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
