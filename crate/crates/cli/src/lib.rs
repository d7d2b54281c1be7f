//! Batch front end for nilmanifold endomorphism analysis.

pub mod analyze;
pub mod run;
pub mod schema;
pub mod selfcheck;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use nilflow_core::density::DensityError;
use nilflow_core::dynlab::DynError;
use nilflow_core::endo::EndoError;
use thiserror::Error;

use crate::run::PerturbationOverrides;
use crate::schema::{parse_system, KindSpec, NamedDirection};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    NonConvergence(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Parse(_) | CliError::Validation(_) | CliError::Io(_) => 2,
            CliError::NonConvergence(_) => 3,
        }
    }

    pub(crate) fn with_context(self, ctx: &str) -> Self {
        match self {
            CliError::Parse(m) => CliError::Parse(format!("{ctx}: {m}")),
            CliError::Validation(m) => CliError::Validation(format!("{ctx}: {m}")),
            other => other,
        }
    }
}

impl From<EndoError> for CliError {
    fn from(e: EndoError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<DensityError> for CliError {
    fn from(e: DensityError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<DynError> for CliError {
    fn from(e: DynError) -> Self {
        match e {
            DynError::NoConvergence { .. } | DynError::NoOrbits | DynError::RigidityViolation { .. } => {
                CliError::NonConvergence(e.to_string())
            }
            other => CliError::Validation(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "nilflow", version, about = "Endomorphisms and Anosov maps of nilmanifolds")]
pub struct Cli {
    /// Also write the command's table to this CSV file.
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
    /// Seed for randomized self-checks.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Structure, spectrum and predicates of the linear part.
    Analyze { file: PathBuf },
    /// Preimage counts and covering radii of iterated preimages of the base point.
    Density {
        file: PathBuf,
        #[arg(long)]
        k_max: Option<usize>,
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Experiments with a perturbation of the linear part.
    Dynamics {
        file: PathBuf,
        #[command(subcommand)]
        action: DynamicsAction,
    },
}

#[derive(Debug, Clone, clap::Args)]
pub struct PerturbationArgs {
    /// Perturbation amplitude; overrides the file.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, value_enum)]
    pub kind: Option<KindSpec>,
    #[arg(long, value_enum)]
    pub direction: Option<NamedDirection>,
}

impl PerturbationArgs {
    fn overrides(&self) -> PerturbationOverrides {
        PerturbationOverrides { kind: self.kind, direction: self.direction, amplitude: self.eps }
    }
}

#[derive(Debug, Subcommand)]
pub enum DynamicsAction {
    /// Periodic orbits and their stable exponents.
    Periodic {
        #[arg(long)]
        period_max: Option<usize>,
        #[command(flatten)]
        perturbation: PerturbationArgs,
    },
    /// Fixed-point solve for the conjugacy to the linear part.
    Conjugacy {
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_sweeps: Option<usize>,
        #[command(flatten)]
        perturbation: PerturbationArgs,
    },
    /// Spread of periodic stable exponents.
    Rigidity {
        #[arg(long)]
        period_max: Option<usize>,
        #[command(flatten)]
        perturbation: PerturbationArgs,
    },
}

/// Text for stdout and, when requested, the CSV table.
#[derive(Debug, Default)]
pub struct Output {
    pub text: String,
    pub csv: String,
}

/// Runs a parsed command line.
pub fn execute(cli: &Cli) -> Result<Output, CliError> {
    match execute_partial(cli)? {
        (out, None) => Ok(out),
        (_, Some(e)) => Err(e),
    }
}

/// Like [`execute`], but a non-convergence failure still comes with its report.
/// The CSV is written in both cases.
pub fn execute_partial(cli: &Cli) -> Result<(Output, Option<CliError>), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let (out, pending) = dispatch(cli)?;
    if let Some(path) = &cli.csv {
        write_csv(path, &out.csv)?;
    }
    Ok((out, pending))
}

fn write_csv(path: &Path, csv: &str) -> Result<(), CliError> {
    std::fs::write(path, csv).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn dispatch(cli: &Cli) -> Result<(Output, Option<CliError>), CliError> {
    match &cli.command {
        Command::Analyze { file } => {
            let def = parse_system(file)?;
            let report = analyze::analyze(&def, cli.seed)?;
            Ok((Output { text: report.to_string(), csv: report.to_csv() }, None))
        }
        Command::Density { file, k_max, grid } => {
            let def = parse_system(file)?;
            let report = run::density(&def, *k_max, *grid)?;
            Ok((Output { text: run::density_summary(&report), csv: report.to_csv() }, None))
        }
        Command::Dynamics { file, action } => {
            let def = parse_system(file)?;
            match action {
                DynamicsAction::Periodic { period_max, perturbation } => {
                    let map = run::perturbed_map(&def, &perturbation.overrides(), NamedDirection::Stable)?;
                    let scan = run::periodic(&map, &def, *period_max)?;
                    let pending = scan
                        .orbits
                        .is_empty()
                        .then(|| CliError::NonConvergence("no periodic orbit could be refined".into()));
                    let out = Output { text: run::periodic_summary(&scan), csv: scan.to_csv(def.dim()) };
                    Ok((out, pending))
                }
                DynamicsAction::Rigidity { period_max, perturbation } => {
                    let map = run::perturbed_map(&def, &perturbation.overrides(), NamedDirection::Stable)?;
                    let (summary, _) = run::rigidity(&map, &def, *period_max)?;
                    Ok((Output { text: run::rigidity_summary(&summary), csv: summary.to_csv() }, None))
                }
                DynamicsAction::Conjugacy { grid, tol, max_sweeps, perturbation } => {
                    let map = run::perturbed_map(&def, &perturbation.overrides(), NamedDirection::Unstable)?;
                    let field = run::conjugacy(&map, &def, *grid, *tol, *max_sweeps)?;
                    let pending = (!field.converged).then(|| {
                        CliError::NonConvergence(format!(
                            "conjugacy solve stopped after {} sweeps with residual {:.3e}",
                            field.iterations(),
                            field.residual()
                        ))
                    });
                    let out = Output { text: run::conjugacy_summary(&field), csv: field.to_csv() };
                    Ok((out, pending))
                }
            }
        }
    }
}
