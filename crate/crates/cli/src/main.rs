use std::ffi::OsString;
use std::process::ExitCode;

use clap::Parser;

mod args;
mod commands;
mod config;
mod svg;

use args::Cli;

fn usage_error(message: &str) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let mut argv: Vec<OsString> = std::env::args_os().collect();

    // The config may supply required flags, so it is merged before clap sees argv.
    if let Some(path) = config::path_arg(&argv) {
        let merged = config::load(&path).and_then(|cfg| config::merge(argv.clone(), &cfg));
        match merged {
            Ok(m) => argv = m,
            Err(msg) => return usage_error(&msg),
        }
    }
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };

    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads as usize).build_global() {
            log::warn!("could not configure the thread pool: {e}");
        }
    }

    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(1)
        }
    }
}
