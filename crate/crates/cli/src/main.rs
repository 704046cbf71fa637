use clap::Parser;
use dhtbound_cli::{run, Cli};

fn main() {
    let cfg = match Cli::parse().into_config() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(e.exit_code());
        }
    };
    if let Err(e) = run(&cfg, &mut std::io::stdout().lock(), &mut std::io::stderr().lock()) {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
