//! Dataset loading, experiment runs, sweeps and the command-line surface of
//! the `memhtm` binary.

pub mod dataset;
pub mod error;
pub mod experiment;

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use memhtm::pipeline::{estimate_cost, CostCounts, CostTable};

pub use error::{CliError, Result};
use experiment::{BackendKind, ExperimentSpec, SweepSpec, DEFAULT_PRESET};

#[derive(Debug, Parser)]
#[command(
    name = "memhtm",
    version,
    about = "HTM simulator on ideal and memristive backends"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the synthetic recognition suite.
    Generate {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Train templates and classify the test split.
    Run(RunArgs),
    /// Repeat a run over a list of values for one config key.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// KEY=v1,v2,...
        #[arg(long)]
        sweep: SweepSpec,
    },
    /// Area and power of a block mix.
    Cost {
        #[arg(long, default_value_t = 0)]
        sp_blocks: u64,
        #[arg(long, default_value_t = 0)]
        tm_cells: u64,
        #[arg(long, default_value_t = 0)]
        matcher_cells: u64,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = BackendKind::Ideal)]
    pub backend: BackendKind,
    #[arg(long, default_value = DEFAULT_PRESET)]
    pub preset: String,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.5)]
    pub train_fraction: f64,
    /// Report path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; all cores when absent.
    #[arg(long)]
    pub threads: Option<usize>,
}

impl RunArgs {
    pub fn spec(&self) -> Result<ExperimentSpec> {
        let text = match &self.config {
            Some(p) => Some(fs::read_to_string(p).map_err(|e| CliError::io(p, e))?),
            None => None,
        };
        ExperimentSpec::new(
            &self.dataset,
            self.backend,
            &self.preset,
            text.as_deref(),
            self.seed,
        )?
        .with_train_fraction(self.train_fraction)
    }
}

fn with_threads<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> Result<T> + Send,
) -> Result<T> {
    match threads {
        None => f(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Argument(e.to_string()))?
            .install(f),
    }
}

fn emit(out: Option<&PathBuf>, text: String) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Executes a parsed command line.
pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { out, seed } => dataset::generate_synthetic(
            &out,
            dataset::SyntheticSpec {
                seed,
                ..Default::default()
            },
        ),
        Command::Run(args) => {
            let spec = args.spec()?;
            let run = with_threads(args.threads, || experiment::run_experiment(&spec))?;
            match &args.out {
                Some(p) => experiment::write_run(p, &run),
                None => emit(None, experiment::report_json(&run.report)?),
            }
        }
        Command::Sweep { run, sweep } => {
            let spec = run.spec()?;
            let report = with_threads(run.threads, || experiment::run_sweep(&spec, &sweep))?;
            emit(run.out.as_ref(), experiment::report_json(&report)?)
        }
        Command::Cost {
            sp_blocks,
            tm_cells,
            matcher_cells,
        } => {
            let counts = CostCounts {
                sp_blocks_1x4: sp_blocks,
                tm_cells_1x1: tm_cells,
                matcher_cells_1x1: matcher_cells,
            };
            let e = estimate_cost(counts, &CostTable::default());
            emit(
                None,
                serde_json::to_string_pretty(&json!({
                    "area_um2": e.area_um2,
                    "power_uw": e.power_uw,
                }))? + "\n",
            )
        }
    }
}
