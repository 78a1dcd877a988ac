use clap::Parser;

fn main() {
    let cli = grise::cli::Cli::parse();
    if let Err(error) = grise::cli::run(cli) {
        eprintln!("error: {error}");
        std::process::exit(error.exit_code());
    }
}
