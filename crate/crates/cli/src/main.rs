use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(factguard_cli::run(std::env::args_os()))
}
