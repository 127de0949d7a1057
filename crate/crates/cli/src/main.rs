use std::process::ExitCode;

use clap::Parser;
use dirac_cli::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = dirac_core::reduce::thread_cap() {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("dirac: cannot size thread pool: {e}");
        }
    }
    let stdout = std::io::stdout();
    match dirac_cli::run(&cli, &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dirac: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
