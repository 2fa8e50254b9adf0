use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    let budget = std::env::var(dpath::cli::BUDGET_VAR).ok();
    let code = dpath::cli::run(
        std::env::args_os(),
        budget,
        &mut io::stdout(),
        &mut io::stderr(),
    );
    ExitCode::from(code as u8)
}
