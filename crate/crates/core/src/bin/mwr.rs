use std::process::ExitCode;

fn main() -> ExitCode {
    matched_wr::cli::main_with_args(std::env::args_os())
}
