mod index_sets {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/index_sets.rs"));
}

#[test]
fn index_sets_example_runs() {
    index_sets::run_example().expect("index_sets example should run");
}

mod stiffness_assembly {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/stiffness_assembly.rs"));
}

#[test]
fn stiffness_assembly_example_runs() {
    stiffness_assembly::run_example().expect("stiffness_assembly example should run");
}

mod affine_solve {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/affine_solve.rs"));
}

#[test]
fn affine_solve_example_runs() {
    affine_solve::run_example().expect("affine_solve example should run");
}

mod truncation_preconditioners {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/truncation_preconditioners.rs"));
}

#[test]
fn truncation_preconditioners_example_runs() {
    truncation_preconditioners::run_example().expect("truncation_preconditioners example should run");
}

mod lognormal_ordering {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/lognormal_ordering.rs"));
}

#[test]
fn lognormal_ordering_example_runs() {
    lognormal_ordering::run_example().expect("lognormal_ordering example should run");
}

mod lognormal_solve {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/lognormal_solve.rs"));
}

#[test]
fn lognormal_solve_example_runs() {
    lognormal_solve::run_example().expect("lognormal_solve example should run");
}

mod spectral_bounds {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/spectral_bounds.rs"));
}

#[test]
fn spectral_bounds_example_runs() {
    spectral_bounds::run_example().expect("spectral_bounds example should run");
}

mod experiment_config {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/experiment_config.rs"));
}

#[test]
fn experiment_config_example_runs() {
    experiment_config::run_example().expect("experiment_config example should run");
}
