use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use hybridcast::ensemble::Scheme;
use hybridcast::io::{load_config, ExperimentConfig, Pipeline, Stage};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Verb {
    GenData,
    Pretrain,
    Posttrain,
    Ensemble,
    Metrics,
    Ablation,
    All,
}

impl From<Verb> for Stage {
    fn from(v: Verb) -> Stage {
        match v {
            Verb::GenData => Stage::GenData,
            Verb::Pretrain => Stage::Pretrain,
            Verb::Posttrain => Stage::Posttrain,
            Verb::Ensemble => Stage::Ensemble,
            Verb::Metrics => Stage::Metrics,
            Verb::Ablation => Stage::Ablation,
            Verb::All => Stage::All,
        }
    }
}

/// Hybrid aleatoric/epistemic ensemble experiments on a Lorenz-96 sphere.
#[derive(Debug, Parser)]
#[command(name = "hybridcast", version)]
struct Cli {
    /// Stage to run; each stage reads what the previous ones wrote.
    #[arg(value_enum)]
    verb: Verb,

    /// TOML experiment config; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory (overrides `out_dir` in the config).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Master seed (overrides `seeds.master`).
    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads; results do not depend on this.
    #[arg(long)]
    workers: Option<usize>,

    /// Ensemble scheme for the `ensemble` verb (overrides `ensemble.mode`).
    #[arg(long, value_parser = parse_scheme)]
    mode: Option<Scheme>,
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse().map_err(|_| {
        let names: Vec<&str> = Scheme::ALL.iter().map(|s| s.name()).collect();
        format!("expected one of {}", names.join(", "))
    })
}

fn run(cli: Cli) -> hybridcast::Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => load_config(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seeds.master = seed;
    }
    if let Some(mode) = cli.mode {
        cfg.ensemble.mode = mode;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    cfg.out_dir = Some(out.clone());
    let pipeline = Pipeline::new(cfg, out)?;
    let stage = Stage::from(cli.verb);

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.workers {
        pool = pool.num_threads(n.max(1));
    }
    let pool = pool.build().map_err(|e| hybridcast::Error::Config {
        key: "--workers".into(),
        reason: e.to_string(),
    })?;
    let written = pool.install(|| pipeline.run(stage, cli.mode))?;
    for path in written {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hybridcast: {e}");
            ExitCode::FAILURE
        }
    }
}
