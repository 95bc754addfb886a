use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(whim::cli::run(std::env::args_os()))
}
