//! Command-line front end: each subcommand maps to one pipeline stage, with
//! `run-all` walking every stage and resuming from the manifest.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use ehrsim_core::pipeline::{run_pipeline, run_stage, PipelineConfig};
use ehrsim_core::tree::Scenario;

#[derive(Parser)]
#[command(name = "ehrsim", version, about = "EMR temporal-tree embedding pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// TOML run configuration; defaults to a synthetic 100-admission cohort.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory override.
    #[arg(long, value_name = "DIR", global = true)]
    out: Option<PathBuf>,

    /// Seed override, applied to generation, training, and prediction.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Scenario override; repeat for several (S, STT, SUTT, SUTTR).
    #[arg(long = "scenario", value_name = "NAME", global = true)]
    scenarios: Vec<Scenario>,

    /// Comma-separated similarity cutoffs override, e.g. "1,5,10".
    #[arg(long, value_name = "LIST", value_delimiter = ',', global = true)]
    ks: Vec<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic cohort CSVs.
    Synth(CommonArgs),
    /// Ingest delimited input files into the canonical cohort CSVs.
    Ingest(CommonArgs),
    /// Extract note concepts and merge them with structured quadruples.
    Extract(CommonArgs),
    /// Build per-scenario temporal trees and sequence dumps.
    BuildSeqs(CommonArgs),
    /// Train one document embedding per scenario.
    Train(CommonArgs),
    /// Score scenario embeddings against the diagnosis gold standard.
    EvalSim(CommonArgs),
    /// Cross-validated mortality prediction on the document vectors.
    Predict(CommonArgs),
    /// Run every stage in order, skipping completed ones.
    RunAll(CommonArgs),
}

impl Command {
    fn common(&self) -> &CommonArgs {
        match self {
            Command::Synth(a)
            | Command::Ingest(a)
            | Command::Extract(a)
            | Command::BuildSeqs(a)
            | Command::Train(a)
            | Command::EvalSim(a)
            | Command::Predict(a)
            | Command::RunAll(a) => a,
        }
    }
}

fn load_config(args: &CommonArgs) -> Result<PipelineConfig> {
    let mut config = match &args.config {
        Some(path) => PipelineConfig::load(path)
            .with_context(|| format!("loading config {}", path.display()))?,
        None => PipelineConfig::default(),
    };
    if let Some(out) = &args.out {
        config.output_dir = out.clone();
    }
    if let Some(seed) = args.seed {
        if let Some(params) = &mut config.synthetic {
            params.seed = seed;
        }
        config.embedding.seed = seed;
        config.prediction_seed = seed;
    }
    if !args.scenarios.is_empty() {
        config.scenarios = args.scenarios.clone();
    }
    if !args.ks.is_empty() {
        config.ks = args.ks.clone();
    }
    config.validate()?;
    Ok(config)
}

fn print_file(path: &std::path::Path) {
    if let Ok(content) = std::fs::read_to_string(path) {
        println!("{content}");
    }
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let args = cli.command.common();
    let config = load_config(args)?;

    match &cli.command {
        Command::Synth(_) => {
            if config.synthetic.is_none() {
                bail!("synth requires synthetic parameters in the configuration");
            }
            run_stage(&config, "cohort")?;
            println!("cohort written to {}", config.output_dir.join("cohort").display());
        }
        Command::Ingest(_) => {
            if config.input.is_none() {
                bail!("ingest requires input paths in the configuration");
            }
            run_stage(&config, "cohort")?;
            println!("cohort written to {}", config.output_dir.join("cohort").display());
        }
        Command::Extract(_) => {
            run_stage(&config, "extract")?;
            println!("quadruples written to {}", config.output_dir.join("extract").display());
        }
        Command::BuildSeqs(_) => {
            run_stage(&config, "build-seqs")?;
            for &scenario in &config.scenarios {
                println!("sequences: {}", config.sequence_file(scenario).display());
            }
        }
        Command::Train(_) => {
            run_stage(&config, "train")?;
            for &scenario in &config.scenarios {
                println!("model: {}", config.model_file(scenario).display());
            }
        }
        Command::EvalSim(_) => {
            run_stage(&config, "eval-sim")?;
            print_file(&config.similarity_report_file());
        }
        Command::Predict(_) => {
            run_stage(&config, "predict")?;
            print_file(&config.prediction_report_file());
        }
        Command::RunAll(_) => {
            run_pipeline(&config)?;
            print_file(&config.similarity_report_file());
            print_file(&config.prediction_report_file());
        }
    }
    Ok(())
}
