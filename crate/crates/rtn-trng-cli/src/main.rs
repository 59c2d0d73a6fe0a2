use clap::Parser;

use rtn_trng_cli::config::Cli;
use rtn_trng_cli::pipeline;

fn main() {
    let cli = Cli::parse();
    let code = match cli.resolve() {
        Ok(config) => pipeline::run_pipeline(&config),
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    };
    std::process::exit(code);
}
