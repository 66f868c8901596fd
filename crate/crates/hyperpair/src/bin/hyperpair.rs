use clap::Parser;

fn main() {
    let cli = hyperpair::cli::Cli::parse();
    std::process::exit(hyperpair::cli::main_with(cli));
}
