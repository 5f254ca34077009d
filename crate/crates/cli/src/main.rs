mod args;
mod commands;
mod config;
mod error;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::Context;
use config::RunConfig;
use error::CliError;

fn run(cli: &Cli) -> Result<(), CliError> {
    let file = cli.config.as_deref().map(RunConfig::from_file).transpose()?;
    let ctx = Context {
        format: cli.format,
        quiet: cli.quiet,
        file,
        seed: cli.seed,
    };
    match &cli.command {
        Command::Model(a) => commands::model(&ctx, a),
        Command::Eval(a) => commands::eval(&ctx, a),
        Command::SsReport(a) => commands::ss_report_cmd(&ctx, a),
        Command::Ablate(a) => commands::ablate(&ctx, a),
        Command::Validate(a) => commands::validate(&ctx, a),
        Command::Synth(a) => commands::synth(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
