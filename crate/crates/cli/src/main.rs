use std::fs::File;
use std::io::{self, Write};
use std::process::ExitCode;

use clap::Parser;
use tailwedge_cli::args::{Cli, Command};
use tailwedge_cli::commands::{cmd_validate, run_to_string};
use tailwedge_cli::{config, CliError, CliResult};

fn open(out: Option<&std::path::Path>) -> CliResult<Box<dyn Write>> {
    match out {
        Some(path) => File::create(path)
            .map(|f| Box::new(io::BufWriter::new(f)) as Box<dyn Write>)
            .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", path.display()))),
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn run() -> CliResult<()> {
    let argv = config::expand(std::env::args_os().collect())?;
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            if code == 0 {
                return Ok(());
            }
            return Err(CliError::Usage(String::new()));
        }
    };
    let mut out = open(cli.command.common().out.as_deref())?;
    let result = match &cli.command {
        Command::Validate(args) => cmd_validate(args, &mut out),
        other => run_to_string(other).and_then(|text| {
            out.write_all(text.as_bytes()).map_err(|e| CliError::Numeric(format!("write failed: {e}")))
        }),
    };
    out.flush().map_err(|e| CliError::Numeric(format!("write failed: {e}")))?;
    result
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .init();
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string();
            if !msg.is_empty() && !matches!(e, CliError::Validation) {
                eprintln!("error: {msg}");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
