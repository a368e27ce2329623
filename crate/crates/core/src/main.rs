use clap::Parser;
use logtriage::cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
