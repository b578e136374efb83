use std::process::ExitCode;

use clap::Parser;
use fibspace_cli::cli::{run, Cli};

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let cli = Cli::parse();
    match run(cli, args) {
        Ok(report) => {
            println!("{}", report.to_json());
            for c in report.failures() {
                eprintln!(
                    "FAIL {}: {:?} vs {:e}{}",
                    c.name,
                    c.residual,
                    c.threshold,
                    c.error.as_deref().map(|e| format!(" ({e})")).unwrap_or_default()
                );
            }
            if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
