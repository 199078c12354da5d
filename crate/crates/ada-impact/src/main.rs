use clap::Parser;

fn main() {
    let cli = ada_impact::cli::Cli::parse();
    std::process::exit(ada_impact::cli::run(cli));
}
