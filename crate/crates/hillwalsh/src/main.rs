use clap::Parser;

use hillwalsh::cli::{error_category, run, Cli};

fn main() {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            let (category, code) = error_category(&err);
            eprintln!("error[{category}]: {err}");
            std::process::exit(code);
        }
    }
}
