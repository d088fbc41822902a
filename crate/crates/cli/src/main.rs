use clap::Parser;

fn main() {
    std::process::exit(sbpi_cli::run(sbpi_cli::Cli::parse()));
}
