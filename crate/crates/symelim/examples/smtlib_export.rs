//! SMT-LIB scripts for the reduced problem of every task in a task file.
//!
//! cargo run --example smtlib_export -- tasks/check_sat.yaml

use std::path::PathBuf;

use symelim::locality::reduce_chain;
use symelim::parser::parse_tasks_file;
use symelim::runner::export_smtlib;

fn main() {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tasks/water_tank_flow_s1.yaml"));
    let tasks = parse_tasks_file(&path).unwrap_or_else(|e| {
        eprintln!("{e}");
        std::process::exit(2);
    });
    for t in &tasks {
        println!("; {}", t.name);
        match reduce_chain(&t.problem) {
            Ok(rp) => print!("{}", export_smtlib(&rp)),
            Err(e) => println!("; error: {e}"),
        }
    }
}
