// SPDX-License-Identifier: MIT OR Apache-2.0

//! `chronosteer`: era steering pipeline runs from the command line.

mod commands;
mod config;
mod error;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{align, disentangle, eval, extract, manifold, steer, toygen};
use config::ConfigFile;
use error::{exit, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "chronosteer",
    version,
    about = "Era steering vectors, manifolds and evaluation"
)]
struct Cli {
    /// TOML config; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory [default: config `out`, then $CHRONOSTEER_OUT, then ./chronosteer-out].
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize era corpora and capture toy-model activations.
    Toygen(toygen::ToygenArgs),
    /// Extract CAA, Real or EnsCAA vectors for every (layer, era, language) cell.
    Extract(extract::ExtractArgs),
    /// Fit era manifolds and embed activation trajectories.
    Manifold(manifold::ManifoldArgs),
    /// Generate with and without a steering hook on the toy model.
    Steer(steer::SteerArgs),
    /// Remove a paired-style subspace from time vectors.
    Disentangle(disentangle::DisentangleArgs),
    /// Transfer vectors between languages, directly or through a rotation.
    Align(align::AlignArgs),
    /// Score generations (FLR/PR) and perplexity matrices.
    Eval(eval::EvalArgs),
}

fn dispatch(cli: Cli) -> CliResult<()> {
    let file = ConfigFile::load(cli.config.as_deref())?;
    let out = file.out_dir(cli.out.as_deref());
    match cli.command {
        Command::Toygen(a) => toygen::run(file.resolve("toygen", &a)?, out),
        Command::Extract(a) => extract::run(file.resolve("extract", &a)?, out),
        Command::Manifold(a) => manifold::run(file.resolve("manifold", &a)?, out),
        Command::Steer(a) => steer::run(file.resolve("steer", &a)?, out),
        Command::Disentangle(a) => disentangle::run(file.resolve("disentangle", &a)?, out),
        Command::Align(a) => align::run(file.resolve("align", &a)?, out),
        Command::Eval(a) => eval::run(file.resolve("eval", &a)?, out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                exit::USAGE
            } else {
                exit::OK
            });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::from(exit::OK),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
