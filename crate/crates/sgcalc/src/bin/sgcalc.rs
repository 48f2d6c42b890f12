use clap::Parser;

fn main() {
    let cli = sgcalc::cli::Cli::parse();
    std::process::exit(sgcalc::cli::run(&cli));
}
