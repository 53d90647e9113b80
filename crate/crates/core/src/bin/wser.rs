use clap::Parser;

fn main() {
    let cli = wser::cli::Cli::parse();
    if let Err(e) = wser::cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
