use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use symelim::runner::{run, RunOptions};

#[derive(Parser)]
#[command(name = "symelim", version, about = "Parameter synthesis by symbol elimination")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every task of a task file and print the report.
    Run {
        task_file: PathBuf,
        /// Fixed date and zero timings in the report.
        #[arg(long)]
        golden: bool,
        /// Run up to N tasks concurrently.
        #[arg(long, value_name = "N", default_value_t = 1)]
        jobs: usize,
        /// Print each reduced problem to stderr.
        #[arg(long)]
        dump_reduction: bool,
        /// Write one SMT-LIB script per task into DIR.
        #[arg(long, value_name = "DIR")]
        export_smtlib: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let Command::Run { task_file, golden, jobs, dump_reduction, export_smtlib } = Cli::parse().command;
    let out = run(&task_file, &RunOptions { golden, jobs, dump_reduction, export_smtlib });
    eprint!("{}", out.diagnostics);
    let mut stdout = std::io::stdout().lock();
    if stdout.write_all(out.report.as_bytes()).and_then(|_| stdout.flush()).is_err() {
        return ExitCode::from(1);
    }
    ExitCode::from(out.exit_code as u8)
}
