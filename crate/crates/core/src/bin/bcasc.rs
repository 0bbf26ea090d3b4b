use clap::Parser;

fn main() {
    let cli = bcresnet_asc::cli::Cli::parse();
    if let Err(e) = bcresnet_asc::cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
