//! Top-down racing environment rendered to 96x96 RGB frames.
//!
//! Scoring: every tile is worth `1000 / N` the first time the car centre
//! enters it, every frame costs 0.1, and leaving the playfield ends the
//! episode with a further -100. The cumulative reward is always recomputed
//! from those counts, so
//!
//! ```text
//! cumulative = visited * 1000 / N - 0.1 * frame - (100 if off field)
//! ```
//!
//! holds exactly at every step. The per-step reward is the difference of
//! consecutive cumulative values.

mod car;
pub mod geometry;
mod pilot;
mod render;
mod track;

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use car::{CarParams, CarState};
pub use geometry::Vec2;
pub use pilot::PurePursuit;
pub use render::{render_frame, RenderConfig, FRAME_CHANNELS, FRAME_SIZE};
pub use track::{generate_track, Track, TrackConfig};

use crate::controller::ActionVector;
use crate::error::{Error, Result};
use crate::tensor::Tensor3D;

pub const OFF_FIELD_PENALTY: f64 = 100.0;
pub const FRAME_COST: f64 = 0.1;
pub const LAP_REWARD: f64 = 1000.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub track: TrackConfig,
    pub car: CarParams,
    pub render: RenderConfig,
    pub max_frames: u32,
    /// End the episode with -100 when the car leaves the playfield.
    pub off_field_termination: bool,
}

impl EnvConfig {
    pub fn reference() -> Self {
        Self {
            track: TrackConfig::reference(),
            car: CarParams::default(),
            render: RenderConfig::default(),
            max_frames: 1000,
            off_field_termination: true,
        }
    }

    /// About 100 tiles and a 500 frame budget.
    pub fn desk() -> Self {
        Self {
            track: TrackConfig::desk(),
            max_frames: 500,
            ..Self::reference()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.track.validate()?;
        if self.max_frames == 0 {
            return Err(Error::config("max_frames must be >= 1"));
        }
        let c = &self.car;
        for (name, v) in [
            ("dt", c.dt),
            ("wheelbase", c.wheelbase),
            ("engine", c.engine),
            ("drag", c.drag),
            ("lateral_accel", c.lateral_accel),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::config(format!("car {name} must be > 0, got {v}")));
            }
        }
        if !(self.render.zoom > 0.0) {
            return Err(Error::config("render zoom must be > 0"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DoneReason {
    AllTiles,
    FrameLimit,
    OffField,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeStatus {
    pub frame: u32,
    pub visited: Vec<bool>,
    pub visited_count: usize,
    pub cumulative_reward: f64,
    pub off_field: bool,
    pub done: Option<DoneReason>,
}

impl EpisodeStatus {
    fn new(tiles: usize) -> Self {
        Self {
            frame: 0,
            visited: vec![false; tiles],
            visited_count: 0,
            cumulative_reward: 0.0,
            off_field: false,
            done: None,
        }
    }

    pub fn is_done(&self) -> bool {
        self.done.is_some()
    }

    /// The accounting identity, evaluated from the counts.
    pub fn expected_reward(&self) -> f64 {
        let n = self.visited.len();
        let penalty = if self.off_field { OFF_FIELD_PENALTY } else { 0.0 };
        self.visited_count as f64 * LAP_REWARD / n as f64 - FRAME_COST * self.frame as f64 - penalty
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub reward: f64,
    pub done: bool,
}

#[derive(Clone, Debug)]
pub struct RacerEnv {
    config: EnvConfig,
    track: Track,
    car: CarState,
    status: EpisodeStatus,
}

impl RacerEnv {
    pub fn new(config: EnvConfig, track: Track) -> Result<Self> {
        config.validate()?;
        let (pos, heading) = track.start_pose();
        let status = EpisodeStatus::new(track.tile_count());
        Ok(Self {
            config,
            track,
            car: CarState::at_rest(pos, heading),
            status,
        })
    }

    /// Generate the track for `seed` and start an episode on it.
    pub fn with_seed(config: EnvConfig, seed: u64) -> Result<Self> {
        let track = generate_track(seed, &config.track)?;
        Self::new(config, track)
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn track(&self) -> &Track {
        &self.track
    }

    pub fn car(&self) -> &CarState {
        &self.car
    }

    pub fn status(&self) -> &EpisodeStatus {
        &self.status
    }

    /// Put the car on tile 0 at rest and clear the score.
    pub fn reset(&mut self, track: Track) -> Tensor3D {
        self.track = track;
        self.restart()
    }

    pub fn restart(&mut self) -> Tensor3D {
        let (pos, heading) = self.track.start_pose();
        self.car = CarState::at_rest(pos, heading);
        self.status = EpisodeStatus::new(self.track.tile_count());
        self.render()
    }

    /// Teleport the car; the episode score is left alone.
    pub fn place_car(&mut self, car: CarState) {
        self.car = car;
    }

    /// One frame of physics and scoring, without rendering.
    pub fn advance(&mut self, action: &ActionVector) -> Result<StepOutcome> {
        if self.status.is_done() {
            return Err(Error::Usage("step called on a finished episode".into()));
        }
        if !action.in_range() {
            return Err(Error::param(format!("action {action:?} outside its ranges")));
        }
        let before = self.status.cumulative_reward;
        self.car.advance(&self.config.car, action);
        if !self.car.is_finite() {
            return Err(Error::Numerical(format!("car state became {:?}", self.car)));
        }
        let status = &mut self.status;
        status.frame += 1;

        if self.config.off_field_termination && !self.track.inside_playfield(self.car.position) {
            status.off_field = true;
            status.done = Some(DoneReason::OffField);
        } else if let Some(i) = self.track.tile_at(self.car.position) {
            if !status.visited[i] {
                status.visited[i] = true;
                status.visited_count += 1;
            }
        }
        status.cumulative_reward = status.expected_reward();
        if status.done.is_none() {
            if status.visited_count == status.visited.len() {
                status.done = Some(DoneReason::AllTiles);
            } else if status.frame >= self.config.max_frames {
                status.done = Some(DoneReason::FrameLimit);
            }
        }
        Ok(StepOutcome {
            reward: status.cumulative_reward - before,
            done: status.is_done(),
        })
    }

    pub fn step(&mut self, action: &ActionVector) -> Result<(Tensor3D, StepOutcome)> {
        let outcome = self.advance(action)?;
        Ok((self.render(), outcome))
    }

    pub fn render(&self) -> Tensor3D {
        render_frame(&self.track, &self.car, &self.config.car, &self.config.render)
    }
}

/// Write an RGB frame with values in `[0, 1]` as an 8-bit PNG.
pub fn write_png(frame: &Tensor3D, path: &Path) -> Result<()> {
    if frame.channels() != 3 {
        return Err(Error::dim(format!("PNG export needs 3 channels, got {}", frame.channels())));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut encoder = png::Encoder::new(
        BufWriter::new(file),
        frame.width() as u32,
        frame.height() as u32,
    );
    encoder.set_color(png::ColorType::Rgb);
    encoder.set_depth(png::BitDepth::Eight);
    let bytes: Vec<u8> = frame
        .as_slice()
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    let mut writer = encoder
        .write_header()
        .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    writer
        .write_image_data(&bytes)
        .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    Ok(())
}
