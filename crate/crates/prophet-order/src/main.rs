use std::process::ExitCode;

fn main() -> ExitCode {
    prophet_order::cli::run()
}
