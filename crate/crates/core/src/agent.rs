//! Episode loop tying the pieces together:
//! render -> resize -> extract -> reservoir update -> act -> step.

use crate::controller::{assemble_into, ActionVector, ControllerWeights, InputLayout};
use crate::error::{Error, Result};
use crate::extractor::Extractor;
use crate::racer::{DoneReason, EnvConfig, RacerEnv};
use crate::reservoir::Reservoir;
use crate::tensor::{bilinear_resize, Tensor3D};

/// What the agent saw and did on one frame.
#[derive(Debug)]
pub struct StepRecord<'a> {
    /// Zero-based index of the step.
    pub index: u32,
    /// Observation the action was computed from.
    pub frame: &'a Tensor3D,
    pub action: ActionVector,
    pub reward: f64,
    pub cumulative_reward: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeResult {
    pub seed: u64,
    pub score: f64,
    pub frames: u32,
    pub tiles_visited: usize,
    pub tile_count: usize,
    pub done_reason: DoneReason,
}

/// Fixed random feature pipeline plus an optional reservoir.
#[derive(Clone, Debug)]
pub struct Agent {
    extractor: Extractor,
    reservoir: Option<Reservoir>,
}

impl Agent {
    pub fn new(extractor: Extractor, reservoir: Option<Reservoir>) -> Result<Self> {
        if let Some(r) = &reservoir {
            if r.config().d_in != extractor.d_conv() {
                return Err(Error::config(format!(
                    "reservoir expects {} inputs but the extractor emits {}",
                    r.config().d_in,
                    extractor.d_conv()
                )));
            }
        }
        Ok(Self {
            extractor,
            reservoir,
        })
    }

    pub fn extractor(&self) -> &Extractor {
        &self.extractor
    }

    pub fn reservoir(&self) -> Option<&Reservoir> {
        self.reservoir.as_ref()
    }

    pub fn layout(&self) -> InputLayout {
        match &self.reservoir {
            Some(r) => InputLayout::with_reservoir(self.extractor.d_conv(), r.d_esn()),
            None => InputLayout::features_only(self.extractor.d_conv()),
        }
    }

    pub fn evaluate_episode(&self, weights: &ControllerWeights, env: &EnvConfig, seed: u64) -> Result<f64> {
        self.run_episode(weights, env, seed, |_| Ok(())).map(|r| r.score)
    }

    /// Play one episode on the track generated from `seed`, calling
    /// `observe` after every step.
    pub fn run_episode<F>(
        &self,
        weights: &ControllerWeights,
        env: &EnvConfig,
        seed: u64,
        mut observe: F,
    ) -> Result<EpisodeResult>
    where
        F: FnMut(&StepRecord<'_>) -> Result<()>,
    {
        let layout = self.layout();
        if weights.input_len() != layout.input_len() {
            return Err(Error::dim(format!(
                "controller takes {} inputs, agent produces {}",
                weights.input_len(),
                layout.input_len()
            )));
        }
        let wrap = |frame: u32| move |e: Error| Error::Episode {
            seed,
            frame,
            source: Box::new(e),
        };

        let mut env = RacerEnv::with_seed(env.clone(), seed).map_err(wrap(0))?;
        let cfg = self.extractor.config();
        let (h, w) = (cfg.input_h, cfg.input_w);
        let mut esn = self.reservoir.as_ref().map(Reservoir::reset);
        let mut s = Vec::with_capacity(layout.input_len());
        let mut frame = env.restart();
        let mut index = 0u32;
        loop {
            let mut step = || -> Result<(ActionVector, Tensor3D, bool, f64)> {
                let small = bilinear_resize(&frame, h, w)?;
                let x = self.extractor.extract(&small)?;
                if let (Some(r), Some(state)) = (&self.reservoir, esn.as_mut()) {
                    r.update_in_place(state, x.as_slice())?;
                }
                assemble_into(&layout, x.as_slice(), esn.as_ref().map(|e| e.values.as_slice()), &mut s)?;
                let action = ActionVector::squash(weights.raw_outputs(&s)?);
                let (next, out) = env.step(&action)?;
                Ok((action, next, out.done, out.reward))
            };
            let (action, next, done, reward) = step().map_err(wrap(index))?;
            observe(&StepRecord {
                index,
                frame: &frame,
                action,
                reward,
                cumulative_reward: env.status().cumulative_reward,
            })
            .map_err(wrap(index))?;
            frame = next;
            index += 1;
            if done {
                break;
            }
        }
        let status = env.status();
        Ok(EpisodeResult {
            seed,
            score: status.cumulative_reward,
            frames: status.frame,
            tiles_visited: status.visited_count,
            tile_count: status.visited.len(),
            done_reason: status.done.expect("episode loop exits only when done"),
        })
    }
}
