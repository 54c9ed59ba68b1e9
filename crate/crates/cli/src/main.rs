use clap::Parser;

fn main() {
    let args = qjc_cli::cli::Args::parse();
    std::process::exit(qjc_cli::cli::run(args));
}
