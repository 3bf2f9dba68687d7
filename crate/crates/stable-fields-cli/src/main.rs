use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use stable_fields_cli::{run, CliError, Command, FieldSource, RunConfig};

/// Stationary stable random fields: classification, effective dimension,
/// maxima scaling and limit verification.
#[derive(Parser)]
#[command(name = "stablefield", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(clap::Args)]
struct Common {
    /// Builtin fixture name (gauss-iid, pareto-iid, z3-flip, irrational-rot,
    /// moving-avg)
    #[arg(short, long)]
    fixture: Option<String>,
    /// Path to a field config file (alternative to --fixture)
    #[arg(long)]
    field: Option<PathBuf>,
    /// Stability index in (0, 2); defaults to the fixture's canonical value
    #[arg(long)]
    alpha: Option<f64>,
    /// Index dimension for fixtures that have one
    #[arg(long)]
    dim: Option<usize>,
    /// Pareto tail index for the pareto-iid fixture
    #[arg(long)]
    theta: Option<f64>,
    /// Box size for maxima simulation
    #[arg(short, long)]
    n: Option<usize>,
    /// Comma-separated grid of box sizes for b_n curves
    #[arg(long, value_delimiter = ',')]
    n_grid: Option<Vec<usize>>,
    /// Monte Carlo replications
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    /// RNG seed (mandatory: no wall-clock defaults)
    #[arg(long)]
    seed: u64,
    /// Output directory
    #[arg(long, default_value = "stablefield-out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Sub {
    /// Conservative/dissipative/mixed verdict for the generating action
    Classify(Common),
    /// Effective dimension p, torsion order l, and the count density
    Effdim(Common),
    /// The scale sequence b_n over a grid (exact where possible)
    Bn(Common),
    /// Replicated simulation of the partial maxima M_n
    Maxima(Common),
    /// Full pipeline: classify, effdim, b_n curve, maxima, Fréchet fit
    Verify(Common),
}

fn to_config(command: Command, c: Common) -> Result<RunConfig, CliError> {
    let source = match (&c.fixture, &c.field) {
        (Some(name), None) => FieldSource::Fixture(name.clone()),
        (None, Some(path)) => FieldSource::Path(path.clone()),
        (Some(_), Some(_)) => {
            return Err(CliError::Config(
                "--fixture and --field are mutually exclusive".into(),
            ))
        }
        (None, None) => {
            return Err(CliError::Config(
                "one of --fixture or --field is required".into(),
            ))
        }
    };
    Ok(RunConfig {
        command,
        source,
        alpha: c.alpha,
        dim: c.dim,
        theta: c.theta,
        n_grid: c.n_grid,
        n: c.n,
        replications: c.reps,
        seed: c.seed,
        out_dir: c.out,
    })
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("STABLEFIELD_THREADS") {
        if let Ok(k) = threads.trim().parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(k.max(1))
                .build_global();
        }
    }
    let cli = Cli::parse();
    let cfg = match cli.command {
        Sub::Classify(c) => to_config(Command::Classify, c),
        Sub::Effdim(c) => to_config(Command::EffDim, c),
        Sub::Bn(c) => to_config(Command::Bn, c),
        Sub::Maxima(c) => to_config(Command::Maxima, c),
        Sub::Verify(c) => to_config(Command::Verify, c),
    };
    let result = cfg.and_then(|cfg| run(&cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::FAILURE
        }
    }
}
