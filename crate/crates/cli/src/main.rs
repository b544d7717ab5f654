use clap::Parser;
use gaussphase_cli::{run, RunConfig};

fn main() {
    let code = run(RunConfig::parse());
    std::process::exit(code);
}
