use std::io;
use std::panic;
use std::process::ExitCode;

use bisim::cli::{main_with, EXIT_INTERNAL};

fn main() -> ExitCode {
    let code = panic::catch_unwind(|| {
        let stdout = io::stdout();
        let stderr = io::stderr();
        main_with(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
    })
    .unwrap_or(EXIT_INTERNAL);
    ExitCode::from(code)
}
