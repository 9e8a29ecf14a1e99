use std::process::ExitCode;

fn main() -> ExitCode {
    cran_coexist::cli::main_with_args(std::env::args_os())
}
