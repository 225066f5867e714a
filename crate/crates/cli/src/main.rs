use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;
use wallperc::groups::Family;
use wallperc_cli::acceptance;
use wallperc_cli::commands::{self, PsiKind, DEFAULT_T_GRID};
use wallperc_cli::config::{ConfigArgs, ExperimentConfig};
use wallperc_cli::output::json_text;
use wallperc_cli::{init_threads, CliError, THREADS_ENV};

#[derive(Parser)]
#[command(name = "wallperc", version, about = "Invariant percolation from spaces with walls")]
#[command(after_help = format!("Set {THREADS_ENV} to fix the number of worker threads."))]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Experiment {
    /// TOML config file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    args: ConfigArgs,
}

impl Experiment {
    fn resolve(self, defaults: ConfigArgs) -> Result<ExperimentConfig, CliError> {
        let file = match &self.config {
            Some(path) => ConfigArgs::load(path)?,
            None => ConfigArgs::default(),
        };
        ExperimentConfig::resolve(&self.args.over(file).over(defaults))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sample a percolation and write two_point.csv, summary.json and optionally clusters.csv
    Simulate(Experiment),
    /// Fit exponential decay to a two_point.csv
    DecayFit {
        input: PathBuf,
        /// Leave out rows with fewer trials
        #[arg(long, default_value_t = 1)]
        min_trials: u64,
    },
    /// Conditional negative definiteness and Schoenberg checks, or Monte Carlo Gram positivity
    KernelCheck {
        #[command(flatten)]
        experiment: Experiment,
        /// `wordlength`, `walls` or `tau`
        #[arg(long, default_value = "wordlength")]
        psi: String,
        /// Radius of the point set (defaults to the window radius)
        #[arg(long)]
        f_radius: Option<u32>,
        /// Comma-separated t values for exp(-tψ)
        #[arg(long, value_delimiter = ',')]
        t_grid: Option<Vec<f64>>,
    },
    /// Per-sample check of the cluster decomposition of 1 - τ
    MdDecompose {
        #[command(flatten)]
        experiment: Experiment,
        #[arg(long, default_value_t = 1)]
        f_radius: u32,
    },
    /// Exhaustive wall-count bound and Steiner length check; optionally list walls between two elements
    LamplighterWalls {
        #[arg(long, default_value = "lamplighter:m=2,r=2")]
        family: String,
        #[arg(long, default_value_t = 6)]
        max_length: u32,
        /// Elements as generator words, `t` switching the lamp
        #[arg(long, requires = "h")]
        g: Option<String>,
        #[arg(long, requires = "g")]
        h: Option<String>,
    },
    /// Calibrate the geodesic measure and report linearity in length
    CroftonCalibrate,
    /// Hyperplane percolation on a tiling window (simulate with tiling defaults)
    TilingPercolate(Experiment),
    /// Run a verification suite
    Verify {
        /// tree, lattice, lamplighter, folner, hyperbolic, kernels or thresholds
        suite: String,
    },
}

fn tiling_defaults() -> ConfigArgs {
    ConfigArgs {
        family: Some(acceptance::TILING_FAMILY.into()),
        walls: Some("hyperplane".into()),
        p: Some(acceptance::TILING_P),
        samples: Some(acceptance::TILING_SAMPLES),
        clusters: Some(true),
        min_size: Some(acceptance::TILING_MIN_SIZE),
        ..Default::default()
    }
}

/// Prints a JSON report; a false `pass` field turns into exit status 1.
fn report(v: Value) -> ExitCode {
    print!("{}", json_text(&v));
    match v.get("pass") {
        Some(Value::Bool(false)) => ExitCode::from(1),
        _ => ExitCode::SUCCESS,
    }
}

fn simulate(config: ExperimentConfig) -> Result<ExitCode, CliError> {
    let dir = config.out.clone();
    let artifacts = commands::simulate(config)?;
    for path in artifacts.write(&dir)? {
        println!("{}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    init_threads()?;
    match cli.command {
        Command::Simulate(e) => simulate(e.resolve(ConfigArgs::default())?),
        Command::TilingPercolate(e) => simulate(e.resolve(tiling_defaults())?),
        Command::DecayFit { input, min_trials } => {
            let text = std::fs::read_to_string(&input).map_err(|e| CliError::io(&input, e))?;
            Ok(report(commands::decay_fit(&text, min_trials)?))
        }
        Command::KernelCheck {
            experiment,
            psi,
            f_radius,
            t_grid,
        } => {
            let psi: PsiKind = psi.parse()?;
            let ts = t_grid.unwrap_or_else(|| DEFAULT_T_GRID.to_vec());
            Ok(report(commands::kernel_check(experiment.resolve(ConfigArgs::default())?, psi, f_radius, &ts)?))
        }
        Command::MdDecompose { experiment, f_radius } => {
            Ok(report(commands::md_decompose(experiment.resolve(ConfigArgs::default())?, f_radius)?))
        }
        Command::LamplighterWalls {
            family,
            max_length,
            g,
            h,
        } => {
            let family: Family = family.parse()?;
            let pair = g.as_deref().zip(h.as_deref());
            Ok(report(commands::lamplighter_walls(family, max_length, pair)?))
        }
        Command::CroftonCalibrate => Ok(report(commands::crofton_calibrate()?)),
        Command::Verify { suite } => {
            let mut ok = true;
            for id in acceptance::suite_criteria(&suite)? {
                let c = acceptance::run_criterion(*id)?;
                ok &= c.pass();
                print!("{c}");
            }
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(2)
        }
    }
}
