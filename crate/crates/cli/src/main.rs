use clap::Parser;
use eccpow_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(text) => println!("{text}"),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
