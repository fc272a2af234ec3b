use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use techprox_cli::fixture::write_fixture;
use techprox_cli::{Overrides, Pipeline, PipelineConfig, Result, Stage};
use techprox_core::forecasting::Regime;

#[derive(Parser)]
#[command(name = "techprox", version, about = "Technology-proximity indices from scholarly metadata")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fetch works from the API (or read the configured dump).
    Ingest(StageArgs),
    /// Validate, deduplicate and date-bucket the works.
    Refine(StageArgs),
    /// Attach keywords (from a file or the frequency extractor).
    Annotate(StageArgs),
    /// Build h-index tables and the monthly proximity index series.
    Index(StageArgs),
    /// Interpolate, fit, normalize, smooth and classify every series.
    Process(StageArgs),
    /// Cluster the retained series and sweep k.
    Cluster(StageArgs),
    /// Backtest every model family under every regime.
    Forecast(StageArgs),
    /// Median tables, histograms, per-pair plots and the case-study page.
    Report(StageArgs),
    /// Every stage in order.
    Run(StageArgs),
    /// Write the synthetic fixture and an example config into a directory.
    Synth {
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct StageArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Case-study pair, `T1,T2` by id or label.
    #[arg(long)]
    pair: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_parser = ["3", "6", "12"])]
    horizon: Option<String>,
    #[arg(long, value_parser = Regime::ALL.map(|r| r.name()))]
    regime: Option<String>,
}

impl StageArgs {
    fn open(&self) -> Result<Pipeline> {
        let mut cfg = PipelineConfig::load(&self.config)?;
        cfg.apply(&Overrides {
            seed: self.seed,
            k: self.k,
            horizon: self.horizon.as_deref().map(|h| h.parse().expect("validated by clap")),
            regime: self.regime.as_deref().map(|r| r.parse()).transpose()?,
            pair: self.pair.clone(),
        })?;
        Pipeline::open(cfg, self.config.display().to_string())
    }
}

fn run(cli: Cli) -> Result<()> {
    let (args, stage) = match &cli.command {
        Command::Synth { out, seed } => {
            for p in write_fixture(out, *seed)? {
                println!("wrote {}", p.display());
            }
            return Ok(());
        }
        Command::Run(a) => {
            a.open()?.run_all()?;
            return Ok(());
        }
        Command::Ingest(a) => (a, Stage::Ingest),
        Command::Refine(a) => (a, Stage::Refine),
        Command::Annotate(a) => (a, Stage::Annotate),
        Command::Index(a) => (a, Stage::Index),
        Command::Process(a) => (a, Stage::Process),
        Command::Cluster(a) => (a, Stage::Cluster),
        Command::Forecast(a) => (a, Stage::Forecast),
        Command::Report(a) => (a, Stage::Report),
    };
    args.open()?.run_stage(stage)?;
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_env("TECHPROX_LOG").unwrap_or_else(|_| "warn".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
