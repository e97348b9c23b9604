//! `inctele`: JSON certificates for inclusions of finite-dimensional von Neumann
//! algebras, their Pimsner-Popa bases, teleportation schemes and quantum-graph colourings.
//!
//! Exit status is 0 when every check passes, 1 when a check fails or a
//! construction cannot be completed, and 2 on malformed input.

mod commands;
mod input;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{GraphTask, Scheme, WernerArgs};
use input::Family;
use output::Certificate;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] inclusion_teleport::Error),
}

#[derive(Debug, Parser)]
#[command(name = "inctele", version, about = "Certificates for inclusion teleportation schemes")]
struct Cli {
    /// Residual tolerance for every check.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Seed for sampled elements.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Spaces per indentation level in the output; 0 prints compact JSON.
    #[arg(long, global = true, default_value_t = 2)]
    json_indent: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Blocks, inclusion matrix, traces and index.
    InclusionInfo {
        /// Inclusion description (JSON file, or `-` for stdin).
        spec: PathBuf,
    },
    /// Build a named basis family, or check given matrices.
    Basis {
        spec: PathBuf,
        #[arg(long, value_enum, conflicts_with = "matrices", required_unless_present = "matrices")]
        family: Option<Family>,
        /// JSON list of matrices.
        #[arg(long)]
        matrices: Option<PathBuf>,
        /// Run the basis checks instead of printing the elements.
        #[arg(long)]
        verify: bool,
    },
    /// Build, verify and classify a teleportation scheme.
    Teleport {
        #[arg(value_enum)]
        scheme: Scheme,
        spec: PathBuf,
        /// Basis family (standard defaults to weyl, unbiased and werner to normaliser).
        #[arg(long, value_enum)]
        family: Option<Family>,
        /// Werner unitary: `identity`, `shift`, or a JSON matrix file.
        #[arg(long, default_value = "identity")]
        unitary: String,
        /// Werner central density: `identity` or a JSON matrix file.
        #[arg(long, default_value = "identity")]
        density: String,
        /// Recover the Werner data from the scheme and rebuild it.
        #[arg(long)]
        extract: bool,
    },
    /// Quantum-graph colourings and chromatic bounds.
    Graph {
        #[arg(value_enum)]
        task: GraphTask,
        spec: PathBuf,
        /// Basis family for colour-basis (defaults to normaliser).
        #[arg(long, value_enum)]
        family: Option<Family>,
    },
}

impl Command {
    fn spec(&self) -> &PathBuf {
        match self {
            Command::InclusionInfo { spec }
            | Command::Basis { spec, .. }
            | Command::Teleport { spec, .. }
            | Command::Graph { spec, .. } => spec,
        }
    }
}

fn run(cli: &Cli, cert: &mut Certificate) -> Result<(), CliError> {
    let (tol, seed) = (cli.tol, cli.seed);
    if !(tol.is_finite() && tol > 0.0) {
        return Err(CliError::Input("--tol must be a positive number".into()));
    }
    let spec = input::parse_spec(&input::read_source(cli.command.spec())?)?;
    let inc = spec.build(tol)?;
    match &cli.command {
        Command::InclusionInfo { .. } => commands::inclusion_info(&inc, tol, cert),
        Command::Basis { family, matrices, verify, .. } => {
            let (basis, label) = match (family, matrices) {
                (Some(f), _) => (f.basis(&inc, tol)?, f.name()),
                (None, Some(path)) => {
                    let elements = input::read_matrices(path, inc.ambient_dim())?;
                    let basis = inclusion_teleport::PPBasis::new(inc.clone(), elements)
                        .map_err(|e| CliError::Input(e.to_string()))?;
                    (basis, "explicit")
                }
                (None, None) => unreachable!("clap requires a family or matrices"),
            };
            commands::basis(&basis, label, *verify, tol, cert)
        }
        Command::Teleport { scheme, family, unitary, density, extract, .. } => {
            let werner = WernerArgs { unitary, density, extract: *extract };
            commands::teleport(&inc, *scheme, *family, werner, tol, seed, cert)
        }
        Command::Graph { task, family, .. } => commands::graph(&inc, *task, *family, tol, cert),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let mut cert = Certificate::new();
    match run(&cli, &mut cert) {
        Err(CliError::Input(msg)) => {
            eprintln!("inctele: input error: {msg}");
            return ExitCode::from(2);
        }
        Err(CliError::Core(e)) => cert.fail(e),
        Ok(()) => {}
    }
    let passed = cert.passed();
    let doc = cert.into_document(&argv, cli.seed, cli.tol);
    println!("{}", output::render(&doc, cli.json_indent));
    for note in doc["notes"].as_array().into_iter().flatten() {
        eprintln!("inctele: warning: {}", note.as_str().unwrap_or_default());
    }
    match doc.get("error").and_then(|e| e.as_str()) {
        Some(e) => eprintln!("inctele: {e}"),
        None if passed => eprintln!("inctele: all checks passed"),
        None => eprintln!("inctele: some checks failed"),
    }
    ExitCode::from(if passed { 0 } else { 1 })
}
