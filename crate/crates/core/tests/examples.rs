//! Runs every example end to end so they cannot silently rot.

mod certify {
    include!("../examples/certify.rs");
}
mod gradients {
    include!("../examples/gradients.rs");
}
mod invariants {
    include!("../examples/invariants.rs");
}
mod stress_table {
    include!("../examples/stress_table.rs");
}
mod symmetry_breakage {
    include!("../examples/symmetry_breakage.rs");
}
mod taylor_green {
    include!("../examples/taylor_green.rs");
}

#[test]
fn certify_runs() {
    certify::main();
}

#[test]
fn gradients_run() {
    gradients::main();
}

#[test]
fn invariants_run() {
    invariants::main();
}

#[test]
fn stress_table_runs() {
    stress_table::main();
}

#[test]
fn symmetry_breakage_runs() {
    symmetry_breakage::main();
}

#[test]
fn taylor_green_runs() {
    taylor_green::main();
}
