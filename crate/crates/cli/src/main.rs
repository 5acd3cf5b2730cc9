mod args;
mod commands;
mod plot;

use clap::Parser;

use args::{Cli, Command};

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(a) => commands::fit(a),
        Command::Project(a) => commands::project(a),
        Command::Reconstruct(a) => commands::reconstruct(a),
        Command::Generate(a) => commands::generate(a),
        Command::Report(a) => commands::report(a),
        Command::Toy(a) => commands::toy(a),
    };
    if let Err(e) = result {
        eprintln!("kppca: {}", e.describe());
        std::process::exit(e.exit_code());
    }
}
