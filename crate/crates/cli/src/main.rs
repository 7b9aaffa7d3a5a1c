use std::process::ExitCode;

use clap::Parser;

use schedsim_cli::{run_experiments, run_mapping_report, Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Some(Command::Mapping(m)) => {
            run_mapping_report(m.path.as_deref(), m.report, m.k as usize).map(|csv| print!("{csv}"))
        }
        None => run_experiments(&cli.run).map(|summary| {
            for w in &summary.warnings {
                eprintln!("warning: {w}");
            }
            for f in &summary.files {
                eprintln!("wrote {}", f.display());
            }
        }),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
