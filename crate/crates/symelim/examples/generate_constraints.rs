//! Symbol elimination for every GENERATE_CONSTRAINTS task of a task file,
//! with the constant classification and per-step timings.
//!
//! cargo run --example generate_constraints -- tasks/car_platoon_flow.yaml

use std::path::PathBuf;

use symelim::elim::generate_constraint;
use symelim::parser::{parse_tasks_file, Mode};

fn main() {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tasks/bounded_slopes.yaml"));
    let tasks = match parse_tasks_file(&path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(2);
        }
    };
    for t in tasks.iter().filter(|t| t.mode == Mode::GenerateConstraints) {
        println!("== {}", t.name);
        let r = match generate_constraint(t) {
            Ok(r) => r,
            Err(e) => {
                println!("error: {e}");
                continue;
            }
        };
        let c = &r.classification;
        let show = |s: &std::collections::BTreeSet<String>| s.iter().cloned().collect::<Vec<_>>().join(", ");
        println!("c_f: {{{}}}", show(&c.c_f));
        println!("c_p: {{{}}}", show(&c.c_p));
        println!("c:   {{{}}}", show(&c.c));
        if !r.defined_parameters.is_empty() {
            println!("defined parameters eliminated: {}", show(&r.defined_parameters));
        }
        for s in &r.stats.steps {
            println!("  {:<24} {:>8.3} ms", s.name, s.time.as_secs_f64() * 1e3);
        }
        println!("Result: {}", r.formula);
    }
}
