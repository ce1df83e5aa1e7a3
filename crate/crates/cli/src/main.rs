use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use fatigue_cli::config::SeedSource;
use fatigue_cli::{invalid_json, run, Cli, CliError, Outcome};

fn fail(e: &CliError) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.global.threads {
        if n == 0 {
            return fail(&CliError::config("--threads must be >= 1"));
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return fail(&CliError::config(format!("thread pool: {e}")));
        }
    }
    let outcome = match run(&cli) {
        Ok(o) => o,
        Err(e) if cli.global.dry_run && e.kind == fatigue_cli::Kind::Config => {
            print!("{}", invalid_json(&e));
            return ExitCode::from(e.exit_code() as u8);
        }
        Err(e) => return fail(&e),
    };
    if let Outcome::Report(r) = &outcome {
        if let (Some(seed), Some(SeedSource::Derived)) = (r.provenance.seed, r.provenance.seed_source) {
            eprintln!("fatigue: no seed given, using {seed} derived from the configuration hash");
        }
    }
    let text = match outcome.render(cli.global.format) {
        Ok(t) => t,
        Err(e) => return fail(&e),
    };
    let written = match &cli.global.output {
        Some(path) => std::fs::write(path, &text).map_err(|e| CliError::io(format!("{}: {e}", path.display()))),
        // A closed pipe (`| head`) is not a failure of the run.
        None => match std::io::stdout().write_all(text.as_bytes()) {
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
            other => other.map_err(|e| CliError::io(format!("stdout: {e}"))),
        },
    };
    match written {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}
