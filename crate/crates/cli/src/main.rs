use std::process::ExitCode;

fn main() -> ExitCode {
    encdetect_cli::run(std::env::args_os())
}
