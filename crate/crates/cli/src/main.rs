mod args;
mod commands;

use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use commands::CliError;

/// Arguments after the program name with any `--workers` setting removed,
/// so the manifest is the same for every worker count.
fn manifest_argv() -> Vec<String> {
    let mut out = Vec::new();
    let mut skip = false;
    for a in std::env::args().skip(1) {
        if skip {
            skip = false;
            continue;
        }
        if a == "--workers" {
            skip = true;
            continue;
        }
        if a.starts_with("--workers=") {
            continue;
        }
        out.push(a);
    }
    out
}

fn run(cli: Cli) -> Result<(), CliError> {
    let argv = manifest_argv();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(k) = cli.workers {
        if k == 0 {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        pool = pool.num_threads(k);
    }
    let pool = pool.build().map_err(|e| CliError::Domain(format!("cannot start worker pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::SimulateFa(a) => commands::simulate_fa(a, &argv),
        Command::SimulatePd(a) => commands::simulate_pd(a, &argv),
        Command::Threshold(a) => commands::threshold(a, &argv).map(|line| {
            let _ = writeln!(std::io::stdout(), "{line}");
        }),
        Command::Detect(a) => commands::detect(a, &argv),
        Command::Complexify(a) => commands::complexify(a, &argv),
        Command::Qqplot(a) => commands::qqplot(a, &argv),
        Command::GenCube(a) => commands::gen_cube(a, &argv),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            let err = CliError::Usage(first.to_string());
            eprintln!("{err}");
            return ExitCode::from(err.code() as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code() as u8)
        }
    }
}
