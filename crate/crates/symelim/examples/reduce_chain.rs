//! Hierarchical reduction of every task in a task file, printed per level.
//!
//! cargo run --example reduce_chain -- tasks/lane_change.yaml

use std::path::PathBuf;

use symelim::locality::reduce_chain;
use symelim::parser::parse_tasks_file;

fn main() {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tasks/water_tank_flow_s1.yaml"));
    let tasks = match parse_tasks_file(&path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(2);
        }
    };
    for t in tasks {
        println!("== {}", t.name);
        match reduce_chain(&t.problem) {
            Ok(rp) => print!("{}", rp.dump()),
            Err(e) => println!("error: {e}"),
        }
    }
}
