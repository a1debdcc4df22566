use std::process::ExitCode;

fn main() -> ExitCode {
    heisengap::cli::main_from(std::env::args_os())
}
