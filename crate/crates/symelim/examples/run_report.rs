//! The batch runner used by `symelim run`, called as a library: runs a task
//! file on four threads and prints the golden report.
//!
//! cargo run --example run_report -- tasks/water_tank_flow_s2.yaml

use std::path::PathBuf;

use symelim::runner::{run, RunOptions};

fn main() {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tasks/car_platoon_flow.yaml"));
    let out = run(&path, &RunOptions { golden: true, jobs: 4, ..Default::default() });
    eprint!("{}", out.diagnostics);
    print!("{}", out.report);
    std::process::exit(out.exit_code);
}
