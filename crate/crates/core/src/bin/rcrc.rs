use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use rcrc::mnist::{load_mnist_pool, run_benchmark_with, BenchmarkConfig, LogRegConfig};
use rcrc::trainer::{evaluate, replay, ModelVariant, RunCheckpoint, RunConfig, Trainer, CHECKPOINT_FILE};
use rcrc::{Error, Result};

#[derive(Parser)]
#[command(name = "rcrc", version, about = "Random-feature reservoir agents trained by CMA-ES")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a controller, or continue a run with --resume.
    Train(TrainArgs),
    /// Score a checkpoint's best controller on fresh tracks.
    Evaluate {
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 100)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Play one track with a checkpoint's best controller and dump frames.
    Replay {
        checkpoint: PathBuf,
        #[arg(long)]
        track_seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Random dense features + logistic regression on MNIST.
    MnistBench(MnistArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Reference,
    Desk,
}

#[derive(Args)]
struct TrainArgs {
    /// TOML run configuration; flags below override it.
    #[arg(long, conflicts_with = "resume")]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "desk")]
    preset: Preset,
    #[arg(long)]
    variant: Option<ModelVariant>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    generations: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    lambda: Option<usize>,
    #[arg(long)]
    sigma0: Option<f64>,
    #[arg(long)]
    checkpoint_interval: Option<u64>,
    /// Output directory for logs and checkpoints.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Continue from a checkpoint file.
    #[arg(long)]
    resume: Option<PathBuf>,
}

#[derive(Args)]
struct MnistArgs {
    /// Directory holding the four standard IDX files.
    #[arg(long, env = "MNIST_DIR")]
    data_dir: PathBuf,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 512)]
    units: usize,
    #[arg(long, default_value_t = 1e-4)]
    lambda: f64,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    /// Smaller sizes take the first `train_n + test_n` pooled examples.
    #[arg(long, default_value_t = 60_000)]
    train_n: usize,
    #[arg(long, default_value_t = 10_000)]
    test_n: usize,
    /// Classify raw pixels instead of random features.
    #[arg(long)]
    raw: bool,
    /// Per-trial results.
    #[arg(long, default_value = "mnist-trials.csv")]
    csv: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(args) => train(args),
        Command::Evaluate {
            checkpoint,
            episodes,
            seed,
        } => {
            let ckpt = RunCheckpoint::load(&checkpoint)?;
            let summary = evaluate(&ckpt, episodes, seed)?;
            println!("{summary} over {episodes} tracks");
            Ok(())
        }
        Command::Replay {
            checkpoint,
            track_seed,
            out,
        } => {
            let ckpt = RunCheckpoint::load(&checkpoint)?;
            let r = replay(&ckpt, track_seed, &out)?;
            println!(
                "score {:.1} in {} frames, {}/{} tiles, ended by {:?}; frames in {}",
                r.score,
                r.frames,
                r.tiles_visited,
                r.tile_count,
                r.done_reason,
                out.display()
            );
            Ok(())
        }
        Command::MnistBench(args) => mnist(args),
    }
}

fn train(args: TrainArgs) -> Result<()> {
    let mut trainer = if let Some(path) = &args.resume {
        let mut ckpt = RunCheckpoint::load(path)?;
        if let Some(g) = args.generations {
            ckpt.config.max_generations = g;
        }
        if args.out.is_some() {
            ckpt.config.output_dir = args.out.clone();
        } else if ckpt.config.output_dir.is_none() {
            ckpt.config.output_dir = path.parent().map(PathBuf::from);
        }
        info!("resuming {} at generation {}", path.display(), ckpt.history.len());
        Trainer::resume(ckpt)?
    } else {
        let variant = args.variant.unwrap_or(ModelVariant::Full);
        let seed = args.seed.unwrap_or(0);
        let mut cfg = match &args.config {
            Some(path) => RunConfig::load(path)?,
            None => match args.preset {
                Preset::Reference => RunConfig::reference(variant, seed),
                Preset::Desk => RunConfig::desk(variant, seed),
            },
        };
        if let Some(v) = args.variant {
            cfg.variant = v;
        }
        if let Some(s) = args.seed {
            cfg.seed = s;
        }
        if let Some(g) = args.generations {
            cfg.max_generations = g;
        }
        if let Some(w) = args.workers {
            cfg.n_workers = w;
            if args.lambda.is_none() {
                cfg.lambda = w;
            }
        }
        if let Some(m) = args.episodes {
            cfg.m_episodes = m;
        }
        if let Some(l) = args.lambda {
            cfg.lambda = l;
        }
        if let Some(s) = args.sigma0 {
            cfg.sigma0 = s;
        }
        if let Some(c) = args.checkpoint_interval {
            cfg.checkpoint_interval = c;
        }
        cfg.output_dir = Some(args.out.clone().unwrap_or_else(|| PathBuf::from("runs/latest")));
        Trainer::new(cfg)?
    };
    let ckpt = trainer.run()?;
    if let (Some(best), Some(dir)) = (&ckpt.best, &ckpt.config.output_dir) {
        println!(
            "best mean score {:.1} (generation {}); checkpoint {}",
            best.score,
            best.generation,
            dir.join(CHECKPOINT_FILE).display()
        );
    }
    Ok(())
}

fn mnist(args: MnistArgs) -> Result<()> {
    let pool = load_mnist_pool(&args.data_dir)?;
    let config = BenchmarkConfig {
        units: args.units,
        train_n: args.train_n,
        test_n: args.test_n,
        raw_pixels: args.raw,
        logreg: LogRegConfig {
            l2_lambda: args.lambda,
            max_iters: args.max_iters,
            ..LogRegConfig::default()
        },
        ..BenchmarkConfig::default()
    };
    let subset = args.train_n + args.test_n;
    let pool = if subset < pool.len() {
        let idx: Vec<usize> = (0..subset).collect();
        pool.select(&idx)
    } else {
        pool
    };
    let mut writer = csv::Writer::from_path(&args.csv).map_err(|e| Error::Io {
        path: args.csv.clone(),
        source: std::io::Error::other(e),
    })?;
    let result = run_benchmark_with(&pool, &config, args.trials, args.seed, |t| {
        info!("trial {}: accuracy {:.2}%", t.trial, 100.0 * t.accuracy);
        if let Err(e) = writer.serialize(t).and_then(|_| writer.flush().map_err(Into::into)) {
            log::warn!("could not write trial row: {e}");
        }
    })?;
    println!(
        "{:.2} \u{b1} {:.2} (%) over {} trials",
        100.0 * result.mean,
        100.0 * result.stddev,
        args.trials
    );
    Ok(())
}
