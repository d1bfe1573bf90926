use std::process::ExitCode;

fn main() -> ExitCode {
    loewner_lft::cli::main_with_args(std::env::args_os())
}
