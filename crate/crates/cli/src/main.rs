use clap::Parser;
use hebran_cli::args::Cli;

fn main() {
    let cli = Cli::parse();
    let argv = std::env::args().skip(1).collect();
    if let Err(e) = hebran_cli::commands::run(&cli, argv) {
        eprintln!("error: {e:#}");
        std::process::exit(hebran_cli::exit_code(&e));
    }
}
