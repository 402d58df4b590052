use std::process::ExitCode;

use clap::Parser;
use coaforge_service::api;
use coaforge_service::cli::{run_plan, Cli, Command, EXIT_PIPELINE};
use coaforge_service::session::SessionStore;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Plan(args) => match run_plan(&args) {
            Ok(out) => {
                print!("{out}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        },
        Command::Serve(args) => {
            let store = match SessionStore::open(&args.data) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_PIPELINE as u8);
                }
            };
            let rt = tokio::runtime::Runtime::new().expect("tokio runtime");
            eprintln!(
                "serving on port {} with data in {}",
                args.port,
                args.data.display()
            );
            match rt.block_on(api::serve(store, args.port)) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_PIPELINE as u8)
                }
            }
        }
    }
}
