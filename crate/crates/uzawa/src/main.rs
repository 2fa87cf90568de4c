use std::process::ExitCode;

fn main() -> ExitCode {
    uzawa::cli::run()
}
