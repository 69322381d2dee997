use std::process::ExitCode;

fn main() -> ExitCode {
    sourcecount::cli::main_with_args(std::env::args_os())
}
