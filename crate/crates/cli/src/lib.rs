//! Command-line front end: argument types, value-list parsing, probability
//! rendering and one function per subcommand. `main` only parses and maps
//! errors to exit codes.

pub mod args;
pub mod commands;
mod error;
pub mod render;
pub mod values;

use std::fs::File;
use std::io::{self, BufWriter, Write};

pub use args::{Cli, Command};
pub use error::CliError;

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Bounds(a) => commands::bounds(a, out),
        Command::Markov(a) => commands::markov(a, out),
        Command::Simulate(a) => commands::simulate(a, out),
        Command::ReproduceTable => commands::reproduce_table(out),
        Command::Deadline(a) => commands::deadline(a, out),
        Command::SearchK(a) => commands::search_k(a, out),
        Command::Signal(a) => commands::signal(a, out),
    }
}

/// Runs one parsed command, writing to `--out` or stdout.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let mut out: Box<dyn Write + Send> = match &cli.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    };
    match cli.threads {
        Some(0) => return Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Usage(e.to_string()))?;
            pool.install(|| dispatch(cli, &mut out))?;
        }
        None => dispatch(cli, &mut out)?,
    }
    out.flush()?;
    Ok(())
}
