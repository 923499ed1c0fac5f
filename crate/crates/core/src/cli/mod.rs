//! Command-line front end. Every subcommand writes its data files and a
//! `<command>_report.json` into the output directory.

mod args;
mod commands;
mod report;

use std::process::ExitCode;

use clap::Parser;
use serde_json::Value;

pub use args::*;
pub use report::{digest_file, InputDigest, Report};

use crate::error::{Error, Result};
use commands::Ctx;

/// Exit status for a failed run: 2 for invalid input or configuration, 1 otherwise.
pub fn exit_code(e: &Error) -> u8 {
    if e.is_user_error() {
        2
    } else {
        1
    }
}

fn config_echo(global: &GlobalArgs, command: &Command) -> Result<Value> {
    let args = match command {
        Command::Embed(a) => serde_json::to_value(a)?,
        Command::Pca(a) => serde_json::to_value(a)?,
        Command::Lda(a) => serde_json::to_value(a)?,
        Command::Regress(a) => serde_json::to_value(a)?,
        Command::Detect(a) => serde_json::to_value(a)?,
        Command::Kde(a) => serde_json::to_value(a)?,
        Command::Scree(a) => serde_json::to_value(a)?,
    };
    Ok(serde_json::json!({ "global": global, "args": args }))
}

/// Runs a parsed invocation and returns the path of the written report.
pub fn execute(cli: &Cli) -> Result<std::path::PathBuf> {
    let name = cli.command.name();
    let report = Report::new(name, cli.global.seed, config_echo(&cli.global, &cli.command)?);
    let mut ctx = Ctx {
        global: &cli.global,
        report,
    };
    let dir = match &cli.command {
        Command::Embed(a) => commands::cmd_embed(&mut ctx, a)?,
        Command::Pca(a) => commands::cmd_pca(&mut ctx, a)?,
        Command::Lda(a) => commands::cmd_lda(&mut ctx, a)?,
        Command::Regress(a) => commands::cmd_regress(&mut ctx, a)?,
        Command::Detect(a) => commands::cmd_detect(&mut ctx, a)?,
        Command::Kde(a) => commands::cmd_kde(&mut ctx, a)?,
        Command::Scree(a) => commands::cmd_scree(&mut ctx, a)?,
    };
    ctx.report.write(&dir, cli.global.deterministic)
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(&cli) {
        Ok(path) => {
            log::info!("wrote {}", path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
