mod args;
mod commands;
mod error;
mod output;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command, Format};
use commands::Sink;
use error::{usage, CliError, EXIT_USAGE};

fn configure_threads(threads: Option<usize>) -> Result<(), CliError> {
    match threads {
        Some(0) => Err(usage("--threads must be positive")),
        #[cfg(feature = "parallel")]
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| usage(e.to_string())),
        _ => Ok(()),
    }
}

fn run(cli: &Cli) -> Result<i32, CliError> {
    configure_threads(cli.threads)?;
    let sink = Sink {
        dir: &cli.out,
        json: cli.format.contains(&Format::Json),
        csv: cli.format.contains(&Format::Csv),
    };
    match &cli.command {
        Command::Indexes(a) => commands::indexes(a, &sink),
        Command::Fit(a) => commands::fit(a, &sink),
        Command::Smooth(a) => commands::smooth(a, &sink),
        Command::Diagnose(a) => commands::diagnose_cmd(a, &sink),
        Command::MoSim(a) => commands::mo_sim(a, &sink),
        Command::KernelsProbe(a) => commands::probe(a, &sink),
        Command::Fixture(a) => commands::fixture(a, &cli.out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE as u8),
            };
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
