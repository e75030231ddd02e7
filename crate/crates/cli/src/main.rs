use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use ni_freebody_cli::cli::Cli;
use ni_freebody_cli::execute;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let code = match execute(&cli, &mut out) {
        Ok(code) => code,
        Err(e) => {
            let _ = out.flush();
            eprintln!("nifb: {e}");
            e.exit_code()
        }
    };
    let _ = out.flush();
    ExitCode::from(code as u8)
}
