//! `privcone` command-line front end.

mod commands;
mod error;
mod files;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use privcone::noisecone::{Window, DEFAULT_GRID_POINTS};

use crate::commands::Outcome;
use crate::error::CliResult;

#[derive(Parser)]
#[command(name = "privcone", version, about = "Row-cone analysis of privacy mechanisms")]
struct Cli {
    #[command(flatten)]
    output: Output,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Output {
    /// Write the JSON report to PATH (`-` for stdout).
    #[arg(long, global = true, value_name = "PATH")]
    json: Option<PathBuf>,
    /// Print the text report even when --json is given.
    #[arg(long, global = true)]
    text: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Constraint system of a mechanism file.
    Analyze {
        file: PathBuf,
        /// Also write the exact matrix as a reloadable mechanism file.
        #[arg(long, value_name = "PATH")]
        export_matrix: Option<PathBuf>,
        /// Also write the constraint system, readable by `relax --system`.
        #[arg(long, value_name = "PATH")]
        export_system: Option<PathBuf>,
        /// Override the noise window half-width.
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Whether MECHANISM lies in the consistent normal form of AGAINST.
    Check {
        mechanism: PathBuf,
        against: PathBuf,
        /// Product test (default).
        #[arg(long, conflicts_with = "rows")]
        cnf: bool,
        /// Per-row membership with witnesses.
        #[arg(long)]
        rows: bool,
    },
    /// Parity protection against independent-bit attackers.
    VerifyParity {
        /// Randomized response as P,K.
        #[arg(long, value_name = "P,K", conflicts_with = "mechanism")]
        rr: Option<String>,
        #[arg(long, value_name = "FILE")]
        mechanism: Option<PathBuf>,
        /// Bit probabilities q1,..,qk.
        #[arg(long, requires = "subset", conflicts_with = "grid")]
        prior: Option<String>,
        /// Query bits, 1-based.
        #[arg(long, requires = "prior")]
        subset: Option<String>,
        /// Sweep every product prior on the grid {0, 1/D, .., 1}.
        #[arg(long, value_name = "D")]
        grid: Option<usize>,
        /// Randomization level for --grid when it is not implied.
        #[arg(long)]
        p: Option<String>,
    },
    /// Participation parity under record sampling.
    VerifySampling {
        #[arg(long, value_name = "FILE", conflicts_with_all = ["p", "n", "w"])]
        mechanism: Option<PathBuf>,
        #[arg(long)]
        p: Option<String>,
        /// Number of tuple values.
        #[arg(long)]
        n: Option<usize>,
        /// Number of individuals.
        #[arg(long)]
        w: Option<usize>,
        /// Prior probability of each record being kept; defaults to 1/(2-p).
        #[arg(long)]
        q: Option<String>,
        /// Known records, as tuple labels or indices.
        #[arg(long)]
        records: String,
    },
    /// Fourier-Motzkin relaxation.
    Relax {
        #[arg(long, value_name = "P,K", requires = "derive_dp", conflicts_with = "system")]
        rr: Option<String>,
        /// Derive differential privacy from randomized response.
        #[arg(long)]
        derive_dp: bool,
        /// Constraint system file.
        #[arg(long, value_name = "FILE", requires = "eliminate")]
        system: Option<PathBuf>,
        /// Labels to eliminate, in order.
        #[arg(long, value_name = "LABELS")]
        eliminate: Option<String>,
    },
    /// Constraints for additive integer noise.
    Noise {
        #[arg(long, value_parser = ["geometric", "dnb", "skellam", "custom"])]
        kind: String,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        r: Option<u32>,
        #[arg(long)]
        l1: Option<f64>,
        #[arg(long)]
        l2: Option<f64>,
        /// Two-column `k value` table for --kind custom.
        #[arg(long, value_name = "FILE")]
        pmf: Option<PathBuf>,
        #[arg(long, default_value_t = 40)]
        window: usize,
        #[arg(long, default_value_t = Window::DEFAULT_TOLERANCE)]
        tolerance: f64,
        #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
        grid_points: usize,
    },
}

fn run(command: &Command) -> CliResult<Outcome> {
    match command {
        Command::Analyze {
            file,
            export_matrix,
            export_system,
            window,
            tolerance,
        } => commands::analyze(&commands::AnalyzeArgs {
            file,
            export_matrix: export_matrix.as_deref(),
            export_system: export_system.as_deref(),
            window: *window,
            tolerance: *tolerance,
        }),
        Command::Check {
            mechanism,
            against,
            rows,
            ..
        } => commands::check(mechanism, against, *rows),
        Command::VerifyParity {
            rr,
            mechanism,
            prior,
            subset,
            grid,
            p,
        } => commands::verify_parity(&commands::ParityArgs {
            rr: rr.as_deref(),
            mechanism: mechanism.as_deref(),
            prior: prior.as_deref(),
            subset: subset.as_deref(),
            grid: *grid,
            p: p.as_deref(),
        }),
        Command::VerifySampling {
            mechanism,
            p,
            n,
            w,
            q,
            records,
        } => commands::verify_sampling(&commands::SamplingArgs {
            mechanism: mechanism.as_deref(),
            p: p.as_deref(),
            n: *n,
            w: *w,
            q: q.as_deref(),
            records,
        }),
        Command::Relax {
            rr,
            derive_dp,
            system,
            eliminate,
        } => match (rr, system) {
            (Some(rr), None) if *derive_dp => commands::relax_derive_dp(rr),
            (None, Some(path)) => commands::relax_system(path, eliminate.as_deref().unwrap_or("")),
            _ => Err(error::CliError::Usage(
                "give --rr P,K --derive-dp, or --system FILE --eliminate LABELS".into(),
            )),
        },
        Command::Noise {
            kind,
            p,
            r,
            l1,
            l2,
            pmf,
            window,
            tolerance,
            grid_points,
        } => commands::noise(&commands::NoiseArgs {
            kind,
            p: *p,
            r: *r,
            l1: *l1,
            l2: *l2,
            pmf: pmf.as_deref(),
            window: *window,
            tolerance: *tolerance,
            grid_points: *grid_points,
        }),
    }
}

fn emit(out: &Output, outcome: &Outcome) -> CliResult<()> {
    let stdout = std::io::stdout();
    let mut buf = String::new();
    match &out.json {
        Some(path) if path.as_os_str() == "-" => buf.push_str(&report::to_json(&outcome.report)),
        Some(path) => report::write_file(path, &report::to_json(&outcome.report))?,
        None => {}
    }
    if out.json.is_none() || out.text {
        buf.push_str(&report::render_text(&outcome.report));
    }
    let _ = stdout.lock().write_all(buf.as_bytes());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(&cli.command).and_then(|o| emit(&cli.output, &o).map(|_| o.code));
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            if let Some(hint) = e.hint() {
                eprintln!("hint: {hint}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
