use clap::Parser;
use lrsparse_cli::cli::{run, Cli};

fn main() {
    if let Err(err) = run(Cli::parse()) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
