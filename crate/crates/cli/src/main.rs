use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use qcausal_cli::{parse_spec, run_command, AlgebraPairSpec, CliError, Command, RunOptions};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Text,
    Machine,
}

/// Operator-algebra locality checks on finite-dimensional algebra pairs.
///
/// Exit codes: 0 success, 1 obstruction found (verify-theorem), 2 input
/// error, 3 inconclusive or budget exhausted.
#[derive(Debug, Parser)]
#[command(name = "qcausal", version)]
struct Cli {
    command: Command,

    /// Algebra-pair spec file (JSON).
    #[arg(long, value_name = "FILE", required_unless_present = "preset", conflicts_with = "preset")]
    spec: Option<PathBuf>,

    /// Use a built-in preset instead of a spec file.
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,

    #[arg(long, value_enum, default_value = "text")]
    format: Format,

    #[arg(long)]
    seed: Option<u64>,

    /// Sampled projection pairs for the correlation searches.
    #[arg(long)]
    pairs: Option<usize>,

    /// Multistarts of the outer (state) search, or of the CHSH optimiser.
    #[arg(long)]
    starts: Option<usize>,

    /// Uncorrelatedness tolerance.
    #[arg(long)]
    tol: Option<f64>,

    /// Iteration cap: iterative meet for `meet`, outer search otherwise.
    #[arg(long = "max-iter")]
    max_iter: Option<usize>,

    /// Restrict to one central sector of the joint algebra.
    #[arg(long)]
    sector: Option<usize>,
}

fn load(cli: &Cli) -> Result<AlgebraPairSpec, CliError> {
    match (&cli.spec, &cli.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
            parse_spec(&text)
        }
        (None, Some(name)) => AlgebraPairSpec::from_preset(name),
        (None, None) => Err(CliError::Usage("give --spec FILE or --preset NAME".into())),
    }
}

fn run(cli: &Cli) -> Result<(String, i32), CliError> {
    if let Some(t) = cli.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::Usage("--tol must be positive".into()));
        }
    }
    let spec = load(cli)?;
    let options = RunOptions {
        seed: cli.seed,
        pairs: cli.pairs,
        starts: cli.starts,
        tol: cli.tol,
        max_iter: cli.max_iter,
        sector: cli.sector,
    };
    let report = run_command(cli.command, &spec, &options)?;
    let out = match cli.format {
        Format::Text => report.text(),
        Format::Machine => report.machine(),
    };
    Ok((out, report.exit_code))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((out, code)) => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(out.as_bytes());
            let _ = stdout.flush();
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("qcausal {}: {e}", cli.command.name());
            ExitCode::from(CliError::EXIT_CODE as u8)
        }
    }
}
