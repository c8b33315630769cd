use std::process::ExitCode;

fn main() -> ExitCode {
    liqss::cli::main_with_args(std::env::args_os())
}
