//! `qgroup`: command-line front end for Magnus expansions, finite p-quotients
//! and mod-p Betti number approximation.

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = args::Cli::parse();
    match commands::run(&cli) {
        Ok(out) => match output::emit(&out.json, cli.output.as_deref()) {
            Ok(()) => ExitCode::from(out.code),
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(output::EXIT_OTHER)
            }
        },
        Err(failure) => {
            let code = failure.code();
            let json = failure.to_json(&cli);
            eprintln!("{}", serde_json::to_string(&json).expect("serializable"));
            ExitCode::from(code)
        }
    }
}
