use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use knowsum::cli::{Cli, Command};
use knowsum::commands::{self, Output};
use knowsum::{Error, Result};

fn out_path(cmd: &Command) -> Option<std::path::PathBuf> {
    match cmd {
        Command::Estimate(a) => a.run.out.clone(),
        Command::Validate(a) => a.run.out.clone(),
        Command::SelectK(a) => a.run.out.clone(),
        Command::Simulate(a) => a.run.out.clone(),
        Command::Sweep(a) => a.run.out.clone(),
        Command::Cluster(a) => a.run.out.clone(),
    }
}

fn write_stdout(text: &str) -> Result<()> {
    std::io::stdout().write_all(text.as_bytes()).map_err(|e| Error::Io { path: "<stdout>".into(), source: e })
}

fn run(cli: Cli) -> Result<()> {
    let out = out_path(&cli.command);
    let Output { text, side_report } = commands::run(cli.command)?;
    match out {
        Some(path) => std::fs::write(&path, text).map_err(|e| Error::Io { path, source: e })?,
        None => write_stdout(&text)?,
    }
    if let Some(report) = side_report {
        write_stdout(&report)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = e.exit_code();
            let body = serde_json::json!({
                "error": { "kind": e.kind(), "message": e.to_string(), "exit_code": code }
            });
            eprintln!("{body}");
            ExitCode::from(code as u8)
        }
    }
}
