use std::process::ExitCode;

fn main() -> ExitCode {
    polyshrink::cli::run(std::env::args_os())
}
