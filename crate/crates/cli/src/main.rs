use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use unitroot::laurent::ContourOptions;
use unitroot::polecore::MAX_ORDER;
use unitroot::Tolerances;

use unitroot_cli::analysis::{self, Options};
use unitroot_cli::commands::{self, write_output};
use unitroot_cli::error::{exit, CliError};
use unitroot_cli::ModelFile;

#[derive(Parser)]
#[command(
    name = "unitroot",
    version,
    about = "Pole order, Laurent principal part and cointegration projector of A(z)^-1 at z = 1"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline on a model file and emit a report.
    Analyze(AnalyzeArgs),
    /// Like `analyze`, plus oracle self-consistency, Penrose checks and a
    /// simulation cross-check.
    Verify(AnalyzeArgs),
    /// Dump contour-oracle Laurent coefficients.
    Laurent(LaurentArgs),
    /// Write a Smith-form model `E(z) diag((1 - z)^d) F(z)`.
    Generate(GenerateArgs),
    /// Simulate the VAR and write the path as CSV.
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Pretty,
}

#[derive(Args)]
struct ContourArgs {
    /// Contour radius around z = 1 (default: half the distance to the
    /// nearest other root, at most 0.5).
    #[arg(long)]
    radius: Option<f64>,
    /// Initial quadrature node count.
    #[arg(long)]
    nodes: Option<usize>,
}

impl ContourArgs {
    fn options(&self) -> Result<ContourOptions, CliError> {
        let mut o = ContourOptions::default();
        if let Some(r) = self.radius {
            if !(r.is_finite() && r > 0.0) {
                return Err(CliError::Usage("--radius must be positive".into()));
            }
            o.radius = Some(r);
        }
        if let Some(n) = self.nodes {
            if n < 8 || n > o.max_nodes {
                return Err(CliError::Usage(format!(
                    "--nodes must lie in 8..={}",
                    o.max_nodes
                )));
            }
            o.nodes = n;
        }
        Ok(o)
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Model file (JSON).
    #[arg(required_unless_present = "batch", conflicts_with = "batch")]
    model: Option<PathBuf>,
    /// Analyze every *.json model in a directory, one report per model.
    #[arg(long)]
    batch: Option<PathBuf>,
    #[arg(long)]
    tol_rank: Option<f64>,
    #[arg(long)]
    tol_nonsing: Option<f64>,
    #[command(flatten)]
    contour: ContourArgs,
    /// Highest pole order to test for (at most 4).
    #[arg(long, default_value_t = MAX_ORDER)]
    max_order: usize,
    /// Seed for the simulation check in `verify`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Output file; a directory in batch mode. Defaults to stdout, or to the
    /// model directory in batch mode.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LaurentArgs {
    model: PathBuf,
    #[arg(long, default_value_t = -5, allow_hyphen_values = true)]
    order_min: i32,
    #[arg(long, default_value_t = 2, allow_hyphen_values = true)]
    order_max: i32,
    #[command(flatten)]
    contour: ContourArgs,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    /// Dimension; must match the number of degrees when given.
    #[arg(long)]
    n: Option<usize>,
    /// Unit-root order of each diagonal slot, e.g. `2,1,0`.
    #[arg(long, value_delimiter = ',', required = true)]
    degrees: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Degree of the random unimodular factors (0 keeps them at I).
    #[arg(long, default_value_t = 1)]
    unimodular_degree: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    model: PathBuf,
    /// Number of observations.
    #[arg(long = "T", default_value_t = 1000)]
    t: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Noise standard deviation; the covariance is sigma^2 I.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn analysis_options(a: &AnalyzeArgs, full: bool) -> Result<Options, CliError> {
    if a.max_order == 0 || a.max_order > MAX_ORDER {
        return Err(CliError::Usage(format!(
            "--max-order must lie in 1..={MAX_ORDER}"
        )));
    }
    let t = Tolerances::default();
    Ok(Options {
        tol: Tolerances::new(
            a.tol_rank.unwrap_or(t.rank_rel),
            a.tol_nonsing.unwrap_or(t.nonsing_rel),
            t.residual_abs,
        )?,
        contour: a.contour.options()?,
        max_order: a.max_order,
        seed: a.seed,
        full,
    })
}

/// File tolerances apply unless overridden on the command line.
fn with_model_tolerances(
    base: &Options,
    a: &AnalyzeArgs,
    model: &ModelFile,
) -> Result<Options, CliError> {
    let mut o = base.clone();
    if let Some(mut t) = model.tolerances {
        t.rank_rel = a.tol_rank.or(t.rank_rel);
        t.nonsing_rel = a.tol_nonsing.or(t.nonsing_rel);
        o.tol = t.apply(Tolerances::default())?;
    }
    Ok(o)
}

fn run_analyze(a: &AnalyzeArgs, full: bool) -> Result<i32, CliError> {
    let opts = analysis_options(a, full)?;
    if let Some(dir) = &a.batch {
        let out_dir = a.out.clone().unwrap_or_else(|| dir.clone());
        let items = commands::batch(dir, &out_dir, &opts)?;
        for it in &items {
            println!("{}\t{}\t{}", it.code, it.model.display(), it.message);
        }
        return Ok(commands::combined_exit(items.iter().map(|i| i.code)));
    }
    let path = a.model.as_deref().expect("clap enforces a model path");
    let model = ModelFile::read(path)?;
    let opts = with_model_tolerances(&opts, a, &model)?;
    let report = analysis::analyze(&model, &opts)?;
    let text = match a.format {
        Format::Json => report.to_json() + "\n",
        Format::Pretty => report.to_pretty(),
    };
    write_output(a.out.as_deref(), &text)?;
    Ok(report.exit_code())
}

fn run_laurent(a: &LaurentArgs) -> Result<i32, CliError> {
    let model = ModelFile::read(&a.model)?;
    let dump = analysis::laurent(&model, a.order_min, a.order_max, &a.contour.options()?)?;
    let text = match a.format {
        Format::Json => serde_json::to_string_pretty(&dump).expect("dump serializes") + "\n",
        Format::Pretty => dump.to_pretty(),
    };
    write_output(a.out.as_deref(), &text)?;
    Ok(exit::OK)
}

fn run_generate(a: &GenerateArgs) -> Result<i32, CliError> {
    if let Some(n) = a.n {
        if n != a.degrees.len() {
            return Err(CliError::Usage(format!(
                "--n {n} does not match {} degrees",
                a.degrees.len()
            )));
        }
    }
    let model = commands::generate(&a.degrees, a.seed, a.unimodular_degree)?;
    let text = serde_json::to_string_pretty(&model).expect("model serializes") + "\n";
    write_output(a.out.as_deref(), &text)?;
    Ok(exit::OK)
}

fn run_simulate(a: &SimulateArgs) -> Result<i32, CliError> {
    let model = ModelFile::read(&a.model)?;
    let csv = commands::simulate_csv(&model, a.t, a.seed, a.sigma)?;
    write_output(a.out.as_deref(), &csv)?;
    Ok(exit::OK)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Analyze(a) => run_analyze(a, false),
        Command::Verify(a) => run_analyze(a, true),
        Command::Laurent(a) => run_laurent(a),
        Command::Generate(a) => run_generate(a),
        Command::Simulate(a) => run_simulate(a),
    };
    let code = result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.exit_code()
    });
    ExitCode::from(code as u8)
}
