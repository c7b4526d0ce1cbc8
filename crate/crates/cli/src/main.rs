use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use confsom::ensemble::Format;
use confsom::pipeline::{
    classify, load_input, load_map, run, PipelineConfig, Stage, StageError, StageResult, Stages, Threshold,
};
use confsom::{Error, Measure};

/// Self-organizing map analysis of conformational ensembles.
#[derive(Parser)]
#[command(name = "confsom", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a map and write som.json and report.json.
    Train(Common),
    /// Assign frames to the neurons of an existing map.
    Classify(WithMap),
    /// Cluster an existing map and extract representative frames.
    Cluster(WithMap),
    /// Build per-neuron atom networks on an existing map.
    Networks(WithMap),
    /// Cluster and build networks on an existing map.
    Report(WithMap),
    /// Train, cluster and build networks in one go.
    Pipeline(Common),
}

#[derive(Args)]
struct Common {
    /// JSON configuration; command-line flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Trajectory file (pdb, xyz or csv); "-" reads stdin.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    format: Option<Format>,
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// xyz_pearson, xyz_spearman, xyz_bicor, cosine or concat_pearson.
    #[arg(long)]
    measure: Option<Measure>,
    /// Fixed hard threshold.
    #[arg(long, conflicts_with_all = ["quantile", "beta"])]
    tau: Option<f64>,
    /// Hard threshold at this quantile of the similarities.
    #[arg(long, conflicts_with = "beta")]
    quantile: Option<f64>,
    /// Soft threshold exponent.
    #[arg(long)]
    beta: Option<f64>,
}

#[derive(Args)]
struct WithMap {
    /// Trained map (som.json).
    #[arg(long)]
    map: PathBuf,
    #[command(flatten)]
    common: Common,
}

fn config_error(e: impl Into<Error>) -> StageError {
    StageError {
        stage: Stage::Config,
        source: e.into(),
    }
}

impl Common {
    fn config(&self) -> StageResult<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let bytes = std::fs::read(path).map_err(config_error)?;
                PipelineConfig::from_json(&bytes).map_err(config_error)?
            }
            None => PipelineConfig::default(),
        };
        if let Some(v) = &self.input {
            cfg.input = Some(v.clone());
        }
        if let Some(v) = self.format {
            cfg.format = Some(v);
        }
        if let Some(v) = self.stride {
            cfg.stride = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = &self.out {
            cfg.out_dir = v.clone();
        }
        if let Some(v) = self.measure {
            cfg.network.measure = v;
        }
        if let Some(v) = self.tau {
            cfg.network.threshold = Threshold::Tau(v);
        }
        if let Some(v) = self.quantile {
            cfg.network.threshold = Threshold::Quantile(v);
        }
        if let Some(v) = self.beta {
            cfg.network.threshold = Threshold::Beta(v);
        }
        cfg.resolve().map_err(config_error)
    }
}

fn execute(command: &Command, cfg: &PipelineConfig) -> StageResult<Vec<PathBuf>> {
    let written = match command {
        Command::Train(_) => run::<f64>(cfg, load_input(cfg)?, None, Stages::NONE)?.artifacts,
        Command::Pipeline(_) => run::<f64>(cfg, load_input(cfg)?, None, Stages::ALL)?.artifacts,
        Command::Classify(m) => {
            let map = load_map::<f64>(&m.map)?;
            classify(cfg, &map, load_input(cfg)?)?.1
        }
        Command::Cluster(m) | Command::Networks(m) | Command::Report(m) => {
            let stages = match command {
                Command::Cluster(_) => Stages { clustering: true, networks: false },
                Command::Networks(_) => Stages { clustering: false, networks: true },
                _ => Stages::ALL,
            };
            let map = load_map::<f64>(&m.map)?;
            run(cfg, load_input(cfg)?, Some(map), stages)?.artifacts
        }
    };
    written.write_to(&cfg.out_dir).map_err(|source| StageError {
        stage: Stage::Output,
        source,
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let common = match &cli.command {
        Command::Train(c) | Command::Pipeline(c) => c,
        Command::Classify(m) | Command::Cluster(m) | Command::Networks(m) | Command::Report(m) => &m.common,
    };
    let result = common.config().and_then(|cfg| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(common.threads.unwrap_or(0))
            .build()
            .map_err(|e| config_error(Error::InvalidArgument(e.to_string())))?;
        pool.install(|| execute(&cli.command, &cfg))
    });
    match result {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("confsom: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
