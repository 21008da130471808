use std::process::ExitCode;

fn main() -> ExitCode {
    optbench::harness::cli::run(std::env::args_os())
}
