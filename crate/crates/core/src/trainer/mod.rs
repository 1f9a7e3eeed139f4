//! Training loop: sample candidates, play `m` episodes per candidate in
//! parallel, average, update the optimizer, log, checkpoint.
//!
//! Every episode's track seed is `mix_seed([master, generation, worker,
//! episode])`, so scores do not depend on how episodes are scheduled across
//! threads.

mod checkpoint;
mod config;

use std::fs::{self, File, OpenOptions};
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use checkpoint::{BestCandidate, RunCheckpoint, MAGIC, VERSION};
pub use config::{EpisodeSeeding, FeatureConfig, ModelVariant, ReservoirSettings, RunConfig};

use crate::agent::{Agent, EpisodeResult};
use crate::cmaes::CmaEs;
use crate::controller::ControllerWeights;
use crate::error::{Error, Result};
use crate::racer::write_png;
use crate::rng::mix_seed;

pub const GENERATIONS_CSV: &str = "generations.csv";
pub const EPISODES_CSV: &str = "episodes.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const CONFIG_FILE: &str = "config.toml";
/// Best candidate on its own, as JSON, for use outside this crate.
pub const BEST_FILE: &str = "best.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: u64,
    pub best: f64,
    pub mean: f64,
    pub worst: f64,
    pub sigma: f64,
    /// Seconds spent on this generation.
    pub wall_time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub generation: u64,
    pub worker: usize,
    pub episode: usize,
    pub seed: u64,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenerationReport {
    pub stats: GenerationStats,
    /// Mean score of every candidate, in candidate order.
    pub candidate_scores: Vec<f64>,
    pub episodes: Vec<EpisodeLog>,
}

pub struct Trainer {
    config: RunConfig,
    agent: Agent,
    cma: CmaEs,
    best: Option<BestCandidate>,
    history: Vec<GenerationStats>,
    pool: rayon::ThreadPool,
}

impl Trainer {
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let agent = config.build_agent()?;
        let dim = agent.layout().param_count();
        let cma = CmaEs::new(dim, config.sigma0, config.lambda, config.optimizer_seed())?
            .with_eigen_refresh(config.eigen_refresh);
        Self::assemble(config, agent, cma, None, Vec::new())
    }

    pub fn resume(checkpoint: RunCheckpoint) -> Result<Self> {
        let config = checkpoint.config;
        config.validate()?;
        let agent = config.build_agent()?;
        let cma = CmaEs::restore(checkpoint.cma)?;
        if cma.dim() != agent.layout().param_count() || cma.lambda() != config.lambda {
            return Err(Error::format(0, "optimizer state does not match the stored config"));
        }
        if cma.generation() != checkpoint.history.len() as u64 {
            return Err(Error::format(0, "history length disagrees with the optimizer generation"));
        }
        Self::assemble(config, agent, cma, checkpoint.best, checkpoint.history)
    }

    fn assemble(
        config: RunConfig,
        agent: Agent,
        cma: CmaEs,
        best: Option<BestCandidate>,
        history: Vec<GenerationStats>,
    ) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.n_workers)
            .build()
            .map_err(|e| Error::config(format!("thread pool: {e}")))?;
        Ok(Self {
            config,
            agent,
            cma,
            best,
            history,
            pool,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn agent(&self) -> &Agent {
        &self.agent
    }

    pub fn optimizer(&self) -> &CmaEs {
        &self.cma
    }

    pub fn best(&self) -> Option<&BestCandidate> {
        self.best.as_ref()
    }

    pub fn history(&self) -> &[GenerationStats] {
        &self.history
    }

    /// Number of completed generations.
    pub fn generation(&self) -> u64 {
        self.cma.generation()
    }

    /// Run one full generation.
    pub fn step(&mut self) -> Result<GenerationReport> {
        let start = Instant::now();
        let generation = self.cma.generation();
        let batch = self.cma.sample_generation()?;
        let layout = self.agent.layout();
        let weights: Vec<ControllerWeights> = batch
            .candidates
            .iter()
            .map(|c| ControllerWeights::unflatten(&layout, c))
            .collect::<Result<_>>()?;

        let m = self.config.m_episodes;
        let jobs: Vec<(usize, usize, u64)> = (0..weights.len())
            .flat_map(|i| (0..m).map(move |j| (i, j)))
            .map(|(i, j)| (i, j, self.config.episode_seed(generation, i, j)))
            .collect();
        let agent = &self.agent;
        let env = &self.config.env;
        let scores: Vec<f64> = self.pool.install(|| {
            jobs.par_iter()
                .map(|&(i, _, seed)| {
                    agent
                        .evaluate_episode(&weights[i], env, seed)
                        .map_err(|e| Error::Evaluation {
                            candidate: i,
                            reason: e.to_string(),
                        })
                })
                .collect::<Result<Vec<f64>>>()
        })?;

        let candidate_scores: Vec<f64> = scores
            .chunks(m)
            .map(|c| c.iter().sum::<f64>() / m as f64)
            .collect();
        let episodes = jobs
            .iter()
            .zip(&scores)
            .map(|(&(worker, episode, seed), &score)| EpisodeLog {
                generation,
                worker,
                episode,
                seed,
                score,
            })
            .collect();

        let (mut top, mut best, mut worst) = (0, f64::NEG_INFINITY, f64::INFINITY);
        for (i, &g) in candidate_scores.iter().enumerate() {
            if g > best {
                best = g;
                top = i;
            }
            worst = worst.min(g);
        }
        let mean = candidate_scores.iter().sum::<f64>() / candidate_scores.len() as f64;
        if self.best.as_ref().is_none_or(|b| best > b.score) {
            self.best = Some(BestCandidate {
                weights: batch.candidates[top].clone(),
                score: best,
                generation,
            });
        }

        let scored = batch.with_scores(candidate_scores.clone());
        self.cma.update(&scored)?;

        let stats = GenerationStats {
            generation,
            best,
            mean,
            worst,
            sigma: self.cma.sigma(),
            wall_time: start.elapsed().as_secs_f64(),
        };
        self.history.push(stats.clone());
        info!(
            "generation {generation}: best {best:.2} mean {mean:.2} worst {worst:.2} sigma {:.4} ({:.1}s)",
            stats.sigma, stats.wall_time
        );
        Ok(GenerationReport {
            stats,
            candidate_scores,
            episodes,
        })
    }

    pub fn checkpoint(&self) -> RunCheckpoint {
        RunCheckpoint {
            config: self.config.clone(),
            cma: self.cma.snapshot(),
            best: self.best.clone(),
            history: self.history.clone(),
        }
    }

    /// Train until `max_generations`, logging and checkpointing into
    /// `output_dir` when one is configured.
    pub fn run(&mut self) -> Result<RunCheckpoint> {
        let mut logs = match &self.config.output_dir {
            Some(dir) => Some(RunLogs::open(dir, &self.config, self.generation())?),
            None => None,
        };
        let interval = self.config.checkpoint_interval;
        while self.generation() < self.config.max_generations {
            let report = self.step()?;
            if let Some(logs) = logs.as_mut() {
                logs.append(&report)?;
                let done = self.generation();
                if (interval > 0 && done % interval == 0) || done == self.config.max_generations {
                    self.checkpoint().save(&logs.dir.join(CHECKPOINT_FILE))?;
                    if let Some(best) = &self.best {
                        let path = logs.dir.join(BEST_FILE);
                        let text = serde_json::to_string_pretty(best).map_err(|e| Error::io(&path, e.into()))?;
                        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
                    }
                }
            }
        }
        Ok(self.checkpoint())
    }
}

pub fn train(config: RunConfig) -> Result<RunCheckpoint> {
    Trainer::new(config)?.run()
}

struct RunLogs {
    dir: PathBuf,
    generations: csv::Writer<File>,
    episodes: csv::Writer<File>,
}

impl RunLogs {
    /// Open the CSV logs for appending, dropping rows from generations at or
    /// after `resume_at` (they were not covered by the checkpoint).
    fn open(dir: &Path, config: &RunConfig, resume_at: u64) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let cfg_path = dir.join(CONFIG_FILE);
        fs::write(&cfg_path, config.to_toml()?).map_err(|e| Error::io(&cfg_path, e))?;
        let generations = open_csv(&dir.join(GENERATIONS_CSV), resume_at, &[
            "generation", "best", "mean", "worst", "sigma", "wall_time",
        ])?;
        let episodes = open_csv(&dir.join(EPISODES_CSV), resume_at, &[
            "generation", "worker", "episode", "seed", "score",
        ])?;
        Ok(Self {
            dir: dir.to_path_buf(),
            generations,
            episodes,
        })
    }

    fn append(&mut self, report: &GenerationReport) -> Result<()> {
        let path = self.dir.join(GENERATIONS_CSV);
        self.generations
            .serialize(&report.stats)
            .and_then(|_| self.generations.flush().map_err(csv::Error::from))
            .map_err(|e| Error::io(&path, std::io::Error::other(e)))?;
        let path = self.dir.join(EPISODES_CSV);
        for row in &report.episodes {
            self.episodes
                .serialize(row)
                .map_err(|e| Error::io(&path, std::io::Error::other(e)))?;
        }
        self.episodes.flush().map_err(|e| Error::io(&path, e))
    }
}

fn open_csv(path: &Path, resume_at: u64, header: &[&str]) -> Result<csv::Writer<File>> {
    let mut kept: Vec<csv::StringRecord> = Vec::new();
    if path.exists() {
        let mut reader = csv::Reader::from_path(path).map_err(|e| Error::io(path, std::io::Error::other(e)))?;
        for record in reader.records() {
            let record = record.map_err(|e| Error::io(path, std::io::Error::other(e)))?;
            let generation: u64 = record
                .get(0)
                .and_then(|g| g.parse().ok())
                .ok_or_else(|| Error::format(0, format!("bad row in {}", path.display())))?;
            if generation < resume_at {
                kept.push(record);
            }
        }
    }
    let file = OpenOptions::new()
        .create(true)
        .write(true)
        .truncate(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    let io = |e: csv::Error| Error::io(path, std::io::Error::other(e));
    writer.write_record(header).map_err(io)?;
    for r in &kept {
        writer.write_record(r).map_err(io)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(writer)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalSummary {
    pub scores: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation (zero for a single episode).
    pub stddev: f64,
}

impl std::fmt::Display for EvalSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.0} \u{b1} {:.0}", self.mean, self.stddev)
    }
}

pub fn mean_stddev(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn best_weights(checkpoint: &RunCheckpoint, agent: &Agent) -> Result<ControllerWeights> {
    let best = checkpoint
        .best
        .as_ref()
        .ok_or_else(|| Error::Usage("checkpoint holds no evaluated candidate yet".into()))?;
    ControllerWeights::unflatten(&agent.layout(), &best.weights)
        .map_err(|e| Error::format(0, format!("stored weights unusable: {e}")))
}

/// Play the checkpoint's best candidate on `episodes` fresh tracks, seeded
/// `mix_seed([seed, k])` for episode `k`.
pub fn evaluate(checkpoint: &RunCheckpoint, episodes: usize, seed: u64) -> Result<EvalSummary> {
    if episodes == 0 {
        return Err(Error::param("evaluate needs at least one episode"));
    }
    let agent = checkpoint.config.build_agent()?;
    let weights = best_weights(checkpoint, &agent)?;
    let env = &checkpoint.config.env;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(checkpoint.config.n_workers)
        .build()
        .map_err(|e| Error::config(format!("thread pool: {e}")))?;
    let scores = pool.install(|| {
        (0..episodes)
            .into_par_iter()
            .map(|k| agent.evaluate_episode(&weights, env, mix_seed(&[seed, k as u64])))
            .collect::<Result<Vec<f64>>>()
    })?;
    let (mean, stddev) = mean_stddev(&scores);
    Ok(EvalSummary {
        scores,
        mean,
        stddev,
    })
}

/// Replay the best candidate on one track, writing `frame_NNNNN.png` for
/// every observation and `actions.csv` with the chosen actions and rewards.
pub fn replay(checkpoint: &RunCheckpoint, track_seed: u64, dir: &Path) -> Result<EpisodeResult> {
    let agent = checkpoint.config.build_agent()?;
    let weights = best_weights(checkpoint, &agent)?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let csv_path = dir.join("actions.csv");
    let mut writer = csv::Writer::from_path(&csv_path).map_err(|e| Error::io(&csv_path, std::io::Error::other(e)))?;
    let io = |e: csv::Error| Error::io(&csv_path, std::io::Error::other(e));
    writer
        .write_record(["frame", "steer", "accel", "brake", "reward", "cumulative_reward"])
        .map_err(io)?;
    let result = agent.run_episode(&weights, &checkpoint.config.env, track_seed, |rec| {
        write_png(rec.frame, &dir.join(format!("frame_{:05}.png", rec.index)))?;
        writer
            .write_record([
                rec.index.to_string(),
                rec.action.steer.to_string(),
                rec.action.accel.to_string(),
                rec.action.brake.to_string(),
                rec.reward.to_string(),
                rec.cumulative_reward.to_string(),
            ])
            .map_err(io)
    })?;
    writer.flush().map_err(|e| Error::io(&csv_path, e))?;
    Ok(result)
}
