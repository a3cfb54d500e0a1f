mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use commands::CliError;

fn report(err: &CliError) {
    let line = serde_json::json!({ "code": err.code(), "message": err.message() });
    eprintln!("{line}");
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let text: Vec<&str> = msg
                .lines()
                .map(str::trim)
                .take_while(|l| !l.starts_with("Usage:") && !l.starts_with("For more information"))
                .filter(|l| !l.is_empty())
                .collect();
            let text = text.join(" ");
            report(&CliError::Usage(
                text.trim_start_matches("error: ").to_string(),
            ));
            return ExitCode::from(2);
        }
    };

    let result = match cli.command {
        Command::Analyze(a) => commands::analyze(a),
        Command::Discard(a) => commands::discard_cmd(a),
        Command::Sensitivity(a) => commands::sensitivity(a),
        Command::Bound(a) => commands::bound(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::ReproduceTable(a) => commands::reproduce(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(&e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
