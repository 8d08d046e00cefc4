use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use dssep_cli::{exit, run, Cli};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE as u8 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(out.stdout.as_bytes()).and_then(|()| stdout.flush()).is_err() {
                return ExitCode::from(exit::IO as u8);
            }
            ExitCode::from(out.code as u8)
        }
        Err(f) => {
            eprintln!("dssep: {}", f.message);
            ExitCode::from(f.code as u8)
        }
    }
}
