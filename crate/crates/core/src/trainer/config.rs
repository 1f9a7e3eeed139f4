//! Run configuration, read from and written to TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agent::Agent;
use crate::cmaes::EigenRefresh;
use crate::error::{Error, Result};
use crate::extractor::{Extractor, ExtractorConfig, ExtractorVariant};
use crate::racer::EnvConfig;
use crate::reservoir::{Reservoir, ReservoirConfig};
use crate::rng::mix_seed;
use crate::tensor::Padding;

/// Which feature pipeline feeds the controller.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelVariant {
    /// Random CNN features plus reservoir state.
    Full,
    /// Random CNN features only.
    Visual,
    /// One random dense layer over the flattened frame, no reservoir.
    Dense,
}

impl ModelVariant {
    pub fn name(self) -> &'static str {
        match self {
            ModelVariant::Full => "full",
            ModelVariant::Visual => "visual",
            ModelVariant::Dense => "dense",
        }
    }
}

impl std::str::FromStr for ModelVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(ModelVariant::Full),
            "visual" => Ok(ModelVariant::Visual),
            "dense" => Ok(ModelVariant::Dense),
            other => Err(Error::config(format!("unknown variant {other:?}"))),
        }
    }
}

/// How episode track seeds are chosen within a generation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EpisodeSeeding {
    /// Every candidate gets its own fresh tracks.
    #[default]
    Fresh,
    /// All candidates of a generation share the same `m` tracks.
    Common,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    /// Frames are resized to `input_size x input_size` before extraction.
    pub input_size: usize,
    pub conv_channels: Vec<usize>,
    pub filter_sizes: Vec<usize>,
    pub strides: Vec<usize>,
    pub d_conv: usize,
    pub weight_stddev: f64,
}

impl FeatureConfig {
    pub fn reference() -> Self {
        Self::from_extractor(&ExtractorConfig::reference(ExtractorVariant::Cnn, 0))
    }

    pub fn desk() -> Self {
        Self::from_extractor(&ExtractorConfig::desk(ExtractorVariant::Cnn, 0))
    }

    fn from_extractor(e: &ExtractorConfig) -> Self {
        Self {
            input_size: e.input_h,
            conv_channels: e.conv_channels.clone(),
            filter_sizes: e.filter_sizes.clone(),
            strides: e.strides.clone(),
            d_conv: e.d_conv,
            weight_stddev: e.weight_stddev,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReservoirSettings {
    pub d_esn: usize,
    pub leak_alpha: f64,
    pub sparsity: f64,
    pub spectral_radius: f64,
    pub w_in_stddev: f64,
}

impl Default for ReservoirSettings {
    fn default() -> Self {
        let r = ReservoirConfig::reference(1, 0);
        Self {
            d_esn: r.d_esn,
            leak_alpha: r.leak_alpha,
            sparsity: r.sparsity,
            spectral_radius: r.spectral_radius_target,
            w_in_stddev: r.w_in_stddev,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub variant: ModelVariant,
    /// Master seed; model weights, optimizer and track seeds derive from it.
    pub seed: u64,
    pub max_generations: u64,
    /// Size of the evaluation thread pool.
    pub n_workers: usize,
    pub m_episodes: usize,
    /// Population size; defaults to one candidate per worker.
    pub lambda: usize,
    pub sigma0: f64,
    /// Write a checkpoint every this many generations (0 = only at the end).
    pub checkpoint_interval: u64,
    #[serde(default)]
    pub eigen_refresh: EigenRefresh,
    #[serde(default)]
    pub episode_seeding: EpisodeSeeding,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub features: FeatureConfig,
    pub reservoir: ReservoirSettings,
    pub env: EnvConfig,
}

impl RunConfig {
    /// 16 workers, 8 episodes each, 64x64 CNN with 512 features and a 512
    /// unit reservoir, ~300 tile tracks, 1000 frames.
    pub fn reference(variant: ModelVariant, seed: u64) -> Self {
        Self {
            variant,
            seed,
            max_generations: 400,
            n_workers: 16,
            m_episodes: 8,
            lambda: 16,
            sigma0: 0.5,
            checkpoint_interval: 10,
            eigen_refresh: EigenRefresh::EveryGeneration,
            episode_seeding: EpisodeSeeding::Fresh,
            output_dir: None,
            features: FeatureConfig::reference(),
            reservoir: ReservoirSettings::default(),
            env: EnvConfig::reference(),
        }
    }

    /// Single-machine scale: 32x32 CNN with 128 features, 128 unit
    /// reservoir, ~100 tile tracks, 500 frames, population 8, 2 episodes.
    pub fn desk(variant: ModelVariant, seed: u64) -> Self {
        Self {
            max_generations: 30,
            n_workers: 8,
            m_episodes: 2,
            lambda: 8,
            checkpoint_interval: 5,
            eigen_refresh: EigenRefresh::Lazy,
            features: FeatureConfig::desk(),
            reservoir: ReservoirSettings {
                d_esn: 128,
                ..ReservoirSettings::default()
            },
            env: EnvConfig::desk(),
            ..Self::reference(variant, seed)
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_workers == 0 {
            return Err(Error::config("n_workers must be >= 1"));
        }
        if self.m_episodes == 0 {
            return Err(Error::config("m_episodes must be >= 1"));
        }
        if self.lambda < 2 {
            return Err(Error::config("lambda must be >= 2"));
        }
        if !(self.sigma0 > 0.0) || !self.sigma0.is_finite() {
            return Err(Error::config("sigma0 must be > 0"));
        }
        self.extractor_config().validate()?;
        self.env.validate()?;
        Ok(())
    }

    pub fn extractor_config(&self) -> ExtractorConfig {
        let f = &self.features;
        let variant = match self.variant {
            ModelVariant::Full | ModelVariant::Visual => ExtractorVariant::Cnn,
            ModelVariant::Dense => ExtractorVariant::Dense,
        };
        let cnn = variant == ExtractorVariant::Cnn;
        ExtractorConfig {
            variant,
            input_h: f.input_size,
            input_w: f.input_size,
            input_channels: 3,
            conv_channels: if cnn { f.conv_channels.clone() } else { vec![] },
            filter_sizes: if cnn { f.filter_sizes.clone() } else { vec![] },
            strides: if cnn { f.strides.clone() } else { vec![] },
            padding: Padding::Same,
            d_conv: f.d_conv,
            weight_stddev: f.weight_stddev,
            seed: self.extractor_seed(),
        }
    }

    pub fn reservoir_config(&self) -> Option<ReservoirConfig> {
        (self.variant == ModelVariant::Full).then(|| {
            let r = &self.reservoir;
            ReservoirConfig {
                d_in: self.features.d_conv,
                d_esn: r.d_esn,
                leak_alpha: r.leak_alpha,
                sparsity: r.sparsity,
                spectral_radius_target: r.spectral_radius,
                w_in_stddev: r.w_in_stddev,
                seed: self.reservoir_seed(),
            }
        })
    }

    pub fn extractor_seed(&self) -> u64 {
        mix_seed(&[self.seed, 1])
    }

    pub fn reservoir_seed(&self) -> u64 {
        mix_seed(&[self.seed, 2])
    }

    pub fn optimizer_seed(&self) -> u64 {
        mix_seed(&[self.seed, 3])
    }

    /// Track seed for one episode:
    /// `mix_seed([master, generation, worker, episode])`, with the worker
    /// index replaced by 0 under common seeding.
    pub fn episode_seed(&self, generation: u64, worker: usize, episode: usize) -> u64 {
        let w = match self.episode_seeding {
            EpisodeSeeding::Fresh => worker as u64,
            EpisodeSeeding::Common => 0,
        };
        mix_seed(&[self.seed, generation, w, episode as u64])
    }

    pub fn build_agent(&self) -> Result<Agent> {
        let extractor = Extractor::new(self.extractor_config())?;
        let reservoir = self.reservoir_config().map(Reservoir::new).transpose()?;
        Agent::new(extractor, reservoir)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        for v in [ModelVariant::Full, ModelVariant::Visual, ModelVariant::Dense] {
            let cfg = RunConfig::desk(v, 42);
            let text = cfg.to_toml().unwrap();
            assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg);
        }
    }

    #[test]
    fn parameter_counts() {
        let full = RunConfig::reference(ModelVariant::Full, 1).build_agent().unwrap();
        assert_eq!(full.layout().param_count(), 3075);
        let visual = RunConfig::reference(ModelVariant::Visual, 1).build_agent().unwrap();
        assert_eq!(visual.layout().param_count(), 1539);
        let dense = RunConfig::desk(ModelVariant::Dense, 1).build_agent().unwrap();
        assert_eq!(dense.layout().param_count(), 3 * 129);
    }

    #[test]
    fn invalid_values_are_rejected() {
        let mut cfg = RunConfig::desk(ModelVariant::Full, 1);
        cfg.m_episodes = 0;
        assert!(cfg.validate().is_err());
        assert!("mixed".parse::<ModelVariant>().is_err());
    }

    #[test]
    fn episode_seeds() {
        let mut cfg = RunConfig::desk(ModelVariant::Full, 5);
        assert_ne!(cfg.episode_seed(0, 0, 0), cfg.episode_seed(0, 1, 0));
        cfg.episode_seeding = EpisodeSeeding::Common;
        assert_eq!(cfg.episode_seed(0, 0, 1), cfg.episode_seed(0, 7, 1));
    }
}
