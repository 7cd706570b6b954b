//! Satisfiability of every task's problem, with a witness when one exists.
//!
//! cargo run --example check_sat -- tasks/check_sat.yaml

use std::path::PathBuf;

use symelim::elim::{check_sat, SatResult};
use symelim::parser::parse_tasks_file;

fn main() {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tasks/check_sat.yaml"));
    let tasks = parse_tasks_file(&path).unwrap_or_else(|e| {
        eprintln!("{e}");
        std::process::exit(2);
    });
    for t in &tasks {
        match check_sat(&t.problem) {
            Ok((SatResult::Unsat, _)) => println!("{}: unsat", t.name),
            Ok((SatResult::Sat(None), _)) => println!("{}: sat (no exact witness)", t.name),
            Ok((SatResult::Sat(Some(m)), _)) => {
                println!("{}: sat", t.name);
                for (k, v) in m {
                    println!("  {k} = {}", v);
                }
            }
            Err(e) => println!("{}: error: {e}", t.name),
        }
    }
}
