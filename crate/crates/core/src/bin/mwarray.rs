use clap::Parser;

fn main() -> std::process::ExitCode {
    std::process::ExitCode::from(mwarray::cli::main_with(mwarray::cli::Cli::parse()))
}
