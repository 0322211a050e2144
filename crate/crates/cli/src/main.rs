use std::process::ExitCode;

fn main() -> ExitCode {
    pointlip_cli::main_with_args(std::env::args_os())
}
