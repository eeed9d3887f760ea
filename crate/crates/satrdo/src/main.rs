use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(satrdo::run_cli(std::env::args_os()))
}
