//! `factguard`: data preparation, teacher training, distillation,
//! evaluation and sweeps.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 configuration or usage error.

mod cli;
mod config;
mod data;
mod infer;
mod prepare;
mod run;
mod sweep;

use std::ffi::OsString;

use clap::Parser;

use cli::{Cli, Command};

fn exit_code(err: &anyhow::Error) -> u8 {
    let config = err
        .chain()
        .any(|e| e.downcast_ref::<factguard::Error>().is_some_and(factguard::Error::is_config));
    if config {
        2
    } else {
        1
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return u8::try_from(e.exit_code()).unwrap_or(2);
        }
    };
    // A second call in the same process keeps the first logger.
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(cli.log_level()))
        .target(env_logger::Target::Stderr)
        .format_timestamp(None)
        .try_init();
    let result = match cli.command {
        Command::PrepareData(a) => prepare::run(a),
        Command::Synth(a) => run::synth(a),
        Command::Train(a) => run::train(a),
        Command::Ablate(a) => run::ablate(a),
        Command::Distill(a) => run::distill(a),
        Command::Infer(a) => infer::infer(a),
        Command::Eval(a) => infer::eval(a),
        Command::GridSearch(a) => sweep::grid(a),
        Command::LambdaSweep(a) => sweep::lambda(a),
        Command::Gradcheck(a) => run::gradcheck(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            log::error!("{e:#}");
            exit_code(&e)
        }
    }
}
