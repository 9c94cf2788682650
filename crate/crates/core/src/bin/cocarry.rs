use std::process::ExitCode;

fn main() -> ExitCode {
    let quiet = std::env::args().any(|a| a == "--quiet" || a == "-q");
    cocarry::cli::init_logging(quiet);
    ExitCode::from(cocarry::cli::run_cli(std::env::args_os()))
}
