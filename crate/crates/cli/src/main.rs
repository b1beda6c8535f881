//! `nstorus`: exact spectra, near-degenerate pairs and semiclassical splitting predictions.
//!
//! Exit codes: 0 on success, 1 on a numerical failure, 2 on a usage or configuration error.
//! Errors are reported on stderr as `{"error": {"kind", "message"}, "exit_code"}`.

mod commands;
mod config;
mod table;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::Parser;
use nstorus::{Error, Result};
use serde_json::json;

use commands::{Command, Meta, Output};
use config::{Common, Format};

#[derive(Debug, Parser)]
#[command(name = "nstorus", version, about = "Energy-level splittings of non-smooth periodic Hamiltonians")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Spectrum => "spectrum",
        Command::Pairs => "pairs",
        Command::Predict { .. } => "predict",
        Command::Compare { .. } => "compare",
        Command::Scan { .. } => "scan",
        Command::Wsum { .. } => "wsum",
        Command::Catalog { .. } => "catalog",
    }
}

fn report(kind: &str, message: &str, code: u8) -> ExitCode {
    let doc = json!({ "error": { "kind": kind, "message": message }, "exit_code": code });
    eprintln!("{doc}");
    ExitCode::from(code)
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn execute(cli: Cli) -> Result<()> {
    let started = Instant::now();
    let common = cli.common.resolve()?;
    if common.gnuplot && (common.out.is_none() || common.format() != Format::Csv) {
        return Err(Error::Configuration("--gnuplot needs --out and CSV output".into()));
    }
    let mut meta = Meta::default();
    let output = commands::run(&cli.command, &common, &mut meta)?;
    let out = common.out.as_deref();
    match &output {
        Output::Table { table, plot } => {
            table::emit(out, &table.render(common.format())?)?;
            if let (true, Some(path), Some(plot)) = (common.gnuplot, out, plot) {
                let script = table.gnuplot(path, plot.x, &plot.y, plot.log);
                table::emit(Some(&with_suffix(path, ".gp")), script.as_bytes())?;
            }
        }
        Output::Document(doc) => {
            let mut bytes = serde_json::to_vec_pretty(doc).map_err(table::io_err)?;
            bytes.push(b'\n');
            table::emit(out, &bytes)?;
        }
    }
    if let Some(path) = out {
        let sidecar = json!({
            "command": command_name(&cli.command),
            "version": env!("CARGO_PKG_VERSION"),
            "schema_version": table::SCHEMA_VERSION,
            "config": common,
            "basis_dimension": meta.basis_dimension,
            "warnings": meta.warnings,
            "extra": meta.extra,
            "elapsed_seconds": started.elapsed().as_secs_f64(),
        });
        let mut bytes = serde_json::to_vec_pretty(&sidecar).map_err(table::io_err)?;
        bytes.push(b'\n');
        table::emit(Some(&with_suffix(path, ".meta.json")), &bytes)?;
    } else {
        for w in &meta.warnings {
            eprintln!("{}", json!({ "warning": w }));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
            eprint!("{e}");
            return ExitCode::from(2);
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            return report("usage", first, 2);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(e.kind(), &e.to_string(), if e.is_usage() { 2 } else { 1 }),
    }
}
