//! `fpp`: command-line front end.
//!
//! Exit status 0 on success, 2 for usage or configuration errors, 1 when a
//! valid run fails. Failures leave `error.json` in the output directory.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fpp_lab::config::KvConfig;
use fpp_lab::{dispatch, Command, Invocation, LabError};

#[derive(Parser, Debug)]
#[command(name = "fpp", version, about = "First passage percolation lab")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Sample an edge field and dump it (CSV or binary).
    Sample(Common),
    /// Passage time and geodesic between two vertices.
    Geodesic(Common),
    /// Passage time and geodesic using only edges of weight at most M.
    Restricted(Common),
    /// Black-cube map of a box.
    Blackcube(Common),
    /// Find a shortcutable stretch of the restricted geodesic and its detour.
    Shortcut(Common),
    /// Escape plan, certificate and pursuit; batch mode with `batch = K`.
    Game(Common),
    /// Monte Carlo experiment.
    Experiment(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// Configuration file (`key = value` lines).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Replaces the configured seed; recorded in the metadata.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Worker threads (0 = all cores). Outputs do not depend on it.
    #[arg(long, value_name = "N", default_value_t = 0)]
    threads: usize,
    /// Suppress progress messages.
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let (command, common) = match cli.command {
        Cmd::Sample(c) => (Command::Sample, c),
        Cmd::Geodesic(c) => (Command::Geodesic, c),
        Cmd::Restricted(c) => (Command::Restricted, c),
        Cmd::Blackcube(c) => (Command::Blackcube, c),
        Cmd::Shortcut(c) => (Command::Shortcut, c),
        Cmd::Game(c) => (Command::Game, c),
        Cmd::Experiment(c) => (Command::Experiment, c),
    };
    let config = std::fs::read_to_string(&common.config)
        .map_err(|e| LabError::config(format!("cannot read {}: {e}", common.config.display())))
        .and_then(|text| KvConfig::parse(&text));
    let result = config.and_then(|config| {
        dispatch(&Invocation {
            command,
            config,
            seed: common.seed,
            out: common.out.clone(),
            threads: common.threads,
            quiet: common.quiet,
        })
    });
    match result {
        Ok(files) => {
            if !common.quiet {
                eprintln!("wrote {} in {}", files.join(", "), common.out.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            if std::fs::create_dir_all(&common.out).is_ok() {
                let _ = fpp_lab::meta::write_json(
                    &common.out.join(fpp_lab::meta::ERROR_FILE),
                    &fpp_lab::meta::ErrorRecord::from(&e),
                );
            }
            eprintln!("error ({}): {e}", e.kind());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
