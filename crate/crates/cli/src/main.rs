//! `cspath`: experiment runner for coherent-state path integrals.
//!
//! Exit codes: 0 success, 2 invalid configuration, 3 convergence or validation failure.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};
use serde::Serialize;

use commands::Outcome;
use config::{resolve, CliError, ConfigFile};
use output::{render, Format, Provenance};

/// Environment variable holding the worker thread count.
const THREADS_VAR: &str = "CSPATH_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "cspath",
    version,
    about = "Coherent-state path integrals: symbols, lattices and the ordering anomaly"
)]
struct Cli {
    /// Output format: csv, json or text.
    #[arg(long, global = true)]
    format: Option<String>,
    /// Write results here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// TOML file with a section per subcommand; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Gaussian ratio I_μ/I_μ0 for the equal-time prescriptions.
    GaussianRatio(GaussianRatioArgs),
    /// Lattice determinants of the Gaussian kernel over a range of N.
    GaussianLattice(GaussianLatticeArgs),
    /// Convert an operator or symbol between Wick, anti-Wick and Weyl symbols.
    Symbol(SymbolArgs),
    /// One lattice partition function, optionally refined in N.
    LatticeZ(LatticeZArgs),
    /// Bose-Hubbard lattice partition functions for the exact and Weyl kernels.
    Anomaly(AnomalyArgs),
    /// (S_z^2)_cov - ((S_z)_cov)^2 on a grid of |z|.
    SpinGap(SpinGapArgs),
    /// Resolution-of-identity diagnostics for a quadrature grid.
    IdentityCheck(IdentityArgs),
}

#[derive(Args, Serialize, Debug)]
#[serde(rename_all = "kebab-case")]
struct GaussianRatioArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    mu: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    mu0: Option<f64>,
    /// minus, plus, symmetric (or wick, antiwick, weyl), or all
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    prescription: Option<String>,
    /// closed, integral or lattice
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    method: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    quad_points: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    slices: Option<usize>,
}

#[derive(Args, Serialize, Debug)]
#[serde(rename_all = "kebab-case")]
struct GaussianLatticeArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    mu: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    prescription: Option<String>,
    /// Comma-separated slice counts.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    slices: Option<Vec<usize>>,
    /// Also report the dense LU determinant (N ≤ 1024).
    #[arg(long, action = ArgAction::SetTrue)]
    #[serde(skip_serializing_if = "is_false")]
    dense_check: bool,
}

#[derive(Args, Serialize, Debug)]
#[serde(rename_all = "kebab-case")]
struct SymbolArgs {
    /// Operator polynomial in n, e.g. "n*(n-1)/2".
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    op: Option<String>,
    /// Radial symbol polynomial in |z|^2, e.g. "1/2*|z|^4 - |z|^2".
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    symbol: Option<String>,
    /// Monomials "j,k:c; ..." for c zbar^j z^k.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    coeffs: Option<String>,
    /// Kind of --symbol / --coeffs.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    from: Option<String>,
    /// wick, antiwick, weyl, or all
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    to: Option<String>,
}

#[derive(Args, Serialize, Debug)]
#[serde(rename_all = "kebab-case")]
struct LatticeZArgs {
    /// exact or naive
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    kernel: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    op: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    symbol: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    coeffs: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    prescription: Option<String>,
    /// average or midpoint (Symmetric prescription only)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    rule: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    slices: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    qr: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    qa: Option<usize>,
    /// Fock-space truncation.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    dim: Option<usize>,
    /// auto, dense or blocked
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    method: Option<String>,
    /// Double N until converged, then double the grid once.
    #[arg(long, action = ArgAction::SetTrue)]
    #[serde(skip_serializing_if = "is_false")]
    refine: bool,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    start_slices: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    max_slices: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    tolerance: Option<f64>,
}

#[derive(Args, Serialize, Debug)]
#[serde(rename_all = "kebab-case")]
struct AnomalyArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    /// Interaction strength.
    #[arg(long = "u", visible_alias = "U")]
    #[serde(skip_serializing_if = "Option::is_none")]
    u: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    slices: Option<Vec<usize>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    qr: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    qa: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    dim: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    rule: Option<String>,
}

#[derive(Args, Serialize, Debug)]
#[serde(rename_all = "kebab-case")]
struct SpinGapArgs {
    /// Comma-separated spins, e.g. 1/2,1,3/2.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    spins: Option<Vec<String>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    points: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    zmax: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    phase: Option<f64>,
}

#[derive(Args, Serialize, Debug)]
#[serde(rename_all = "kebab-case")]
struct IdentityArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    qr: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    qa: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    max_index: Option<usize>,
    /// One row per aliased entry.
    #[arg(long, action = ArgAction::SetTrue)]
    #[serde(skip_serializing_if = "is_false")]
    list_aliased: bool,
}

fn provenance<P: Serialize>(params: &P) -> Result<Provenance, CliError> {
    let mut out = vec![("version".to_string(), serde_json::json!(env!("CARGO_PKG_VERSION")))];
    match serde_json::to_value(params).map_err(|e| CliError::Config(e.to_string()))? {
        serde_json::Value::Object(map) => out.extend(map.into_iter().filter(|(_, v)| !v.is_null())),
        other => out.push(("params".into(), other)),
    }
    Ok(out)
}

fn run_command(command: &Command, file: Option<&ConfigFile>) -> Result<(&'static str, Provenance, Outcome), CliError> {
    macro_rules! dispatch {
        ($name:literal, $args:expr, $params:ty, $run:path) => {{
            let params: $params = resolve(file, $name, $args)?;
            let prov = provenance(&params)?;
            Ok(($name, prov, $run(&params)?))
        }};
    }
    match command {
        Command::GaussianRatio(a) => dispatch!(
            "gaussian-ratio",
            a,
            commands::GaussianRatioParams,
            commands::gaussian_ratio
        ),
        Command::GaussianLattice(a) => {
            dispatch!(
                "gaussian-lattice",
                a,
                commands::GaussianLatticeParams,
                commands::gaussian_lattice
            )
        }
        Command::Symbol(a) => dispatch!("symbol", a, commands::SymbolParams, commands::symbol),
        Command::LatticeZ(a) => dispatch!("lattice-z", a, commands::LatticeZParams, commands::lattice_z),
        Command::Anomaly(a) => dispatch!("anomaly", a, commands::AnomalyParams, commands::anomaly),
        Command::SpinGap(a) => dispatch!("spin-gap", a, commands::SpinGapParams, commands::spin_gap),
        Command::IdentityCheck(a) => dispatch!("identity-check", a, commands::IdentityParams, commands::identity_check),
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("{THREADS_VAR} must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let file = cli.config.as_deref().map(ConfigFile::load).transpose()?;
    let format_name = match (&cli.format, &file) {
        (Some(f), _) => f.clone(),
        (None, Some(f)) => f.top_str("format")?.unwrap_or_else(|| "text".into()),
        (None, None) => "text".into(),
    };
    let format: Format = format_name.parse().map_err(CliError::Config)?;
    let output = match (&cli.output, &file) {
        (Some(p), _) => Some(p.clone()),
        (None, Some(f)) => f.top_str("output")?.map(PathBuf::from),
        (None, None) => None,
    };
    let (name, prov, outcome) = run_command(&cli.command, file.as_ref())?;
    let text = render(name, &prov, &outcome.table, format).map_err(CliError::Failure)?;
    match output {
        Some(path) => std::fs::write(&path, text)
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    match outcome.failure {
        Some(msg) => Err(CliError::Failure(msg)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cspath: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
