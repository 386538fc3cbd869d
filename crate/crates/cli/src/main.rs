use clap::Parser;
use handid_cli::{init_threads, run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("{}", handid_cli::error_record("handid", &e));
        std::process::exit(1);
    }
    std::process::exit(run(cli));
}
