mod cli;

use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let parsed = cli::args::Cli::parse();
    if let Err(e) = cli::run(parsed.command) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
