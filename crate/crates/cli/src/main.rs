//! `vortex <command> key=value ... [spec=FILE]`
//!
//! Commands: solve-log-zero, solve-log-plateau, solve-sat-constrained,
//! verify, sweep. Exit status: 0 success, 2 invalid input, 3 non-convergence
//! or failed check, 4 I/O error.

mod emit;
mod error;
mod run;
mod spec;

use std::process::ExitCode;

use spec::RunSpec;

const USAGE: &str = "usage: vortex <solve-log-zero|solve-log-plateau|solve-sat-constrained|verify|sweep> [key=value ...] [spec=FILE]";

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.is_empty() || args.iter().any(|a| a == "-h" || a == "--help") {
        println!("{USAGE}");
        return if args.is_empty() { ExitCode::from(2) } else { ExitCode::SUCCESS };
    }
    let outcome = RunSpec::from_args(&args).and_then(|spec| run::run(&spec));
    match outcome {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            if e.exit_code() == 2 {
                eprintln!("{USAGE}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
