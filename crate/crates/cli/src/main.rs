use clap::Parser;

fn main() {
    let cli = ctl_cli::Cli::parse();
    if let Err(e) = ctl_cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
