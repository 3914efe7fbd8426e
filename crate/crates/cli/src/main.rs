use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(logistic_rds_cli::run(std::env::args_os()))
}
