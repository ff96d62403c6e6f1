//! `g2nilflow`: catalog inspection, single computations, Laplacian flow
//! runs, infeasibility searches and the reproduction suite.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

/// Exit status for malformed input (bad flags, files, forms).
pub const EXIT_INVALID: u8 = 2;
/// Exit status when a verification check fails.
pub const EXIT_VERIFY: u8 = 3;
/// Exit status when the flow blows up before the requested end time.
pub const EXIT_BLOWUP: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "g2nilflow", version, about = "Closed G2-structures and the Laplacian flow on 7-dimensional nilpotent Lie algebras")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

#[derive(clap::Args, Debug, Clone)]
pub struct Source {
    /// Catalog key (see `list --all`) or path to an algebra JSON file.
    #[arg(long)]
    pub algebra: String,
    /// Path to a 3-form JSON file replacing the stored form.
    #[arg(long)]
    pub form: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List the catalog with closed-G2 and nilsoliton flags.
    List {
        #[arg(long)]
        json: bool,
        /// Include the alternate presentations.
        #[arg(long)]
        all: bool,
    },
    /// Run the reproduction suite; exits 3 if any check fails.
    VerifyPaper {
        /// Only run one section (catalog, metric, ricci, soliton, flow,
        /// obstruction, search), a criterion name, or a criterion number.
        #[arg(long)]
        only: Option<String>,
        /// Catalog key whose stored form `--form` replaces.
        #[arg(long, requires = "form")]
        algebra: Option<String>,
        #[arg(long, requires = "algebra")]
        form: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate the Laplacian flow from a closed G2 form.
    Flow {
        #[command(flatten)]
        source: Source,
        #[arg(long, allow_hyphen_values = true)]
        t_end: f64,
        /// Relative tolerance (defaults to G2NILFLOW_TOL or 1e-10).
        #[arg(long)]
        tol: Option<f64>,
        /// Extra columns: riem_sup, lambda.
        #[arg(long, value_delimiter = ',')]
        emit: Vec<String>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        /// Output file; the events go to `<out>.events.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Multi-start search for a closed G2 form inducing the orthonormal metric.
    Search {
        #[arg(long)]
        algebra: String,
        #[arg(long, default_value_t = 1000)]
        restarts: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The metric induced by a G2 form.
    Metric {
        #[command(flatten)]
        source: Source,
    },
    /// The Ricci tensor of the metric induced by the form (or of the
    /// orthonormal metric when there is no form).
    Ricci {
        #[command(flatten)]
        source: Source,
    },
    /// The nilsoliton certificate `Ric = lambda I + D`.
    Soliton {
        #[command(flatten)]
        source: Source,
    },
    /// Left endpoint of the n4 and n6 flow interval by quadrature.
    Tmin,
}

/// An error carrying the exit status it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn invalid(message: impl Into<String>) -> Self {
        Failure { code: EXIT_INVALID, message: message.into() }
    }
}

impl From<g2nilflow::Error> for Failure {
    fn from(e: g2nilflow::Error) -> Self {
        Failure::invalid(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::invalid(format!("i/o error: {e}"))
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::invalid(format!("{e:#}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::List { json, all } => commands::list(json, all),
        Command::VerifyPaper { only, algebra, form, format, out } => {
            commands::verify_paper(only.as_deref(), algebra.as_deref(), form.as_deref(), format, out.as_deref())
        }
        Command::Flow { source, t_end, tol, emit, format, out } => {
            commands::flow(&source, t_end, tol, &emit, format, out.as_deref())
        }
        Command::Search { algebra, restarts, seed, format, out } => {
            commands::search(&algebra, restarts, seed, format, out.as_deref())
        }
        Command::Metric { source } => commands::metric(&source),
        Command::Ricci { source } => commands::ricci(&source),
        Command::Soliton { source } => commands::soliton(&source),
        Command::Tmin => commands::tmin(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
