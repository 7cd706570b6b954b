//! Verification conditions for an automaton or family description, each
//! printed as a problem file and then turned into a parameter constraint.
//!
//! cargo run --example vcgen -- models/lane_change.ha

use std::path::PathBuf;

use symelim::elim::generate_constraint;
use symelim::hybrid::parse_model;

fn main() {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("models/water_tank.ha"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| {
        eprintln!("{}: {e}", path.display());
        std::process::exit(2);
    });
    let model = parse_model(&text).unwrap_or_else(|e| {
        eprintln!("{}: {e}", path.display());
        std::process::exit(2);
    });
    let vcs = model.vcs().unwrap_or_else(|e| {
        eprintln!("{e}");
        std::process::exit(3);
    });
    for vc in vcs {
        println!("== {} (parameters: {})", vc.name, vc.parameters.join(", "));
        println!("{}", vc.spec);
        match generate_constraint(&vc.task(model.assumptions().to_vec())) {
            Ok(r) => println!("constraint: {}\n", r.formula),
            Err(e) => println!("error: {e}\n"),
        }
    }
}
