//! Procedural closed tracks.
//!
//! A ring of control points is jittered in angle and radius, passed through a
//! closed centripetal Catmull-Rom spline, and resampled at equal arc length
//! into `N = round(L / tile_length)` centerline samples. Tile `i` is the quad
//! spanning samples `i` and `i + 1`, offset by half the track width along the
//! normal of the central-difference tangent, so neighbouring tiles share an
//! edge exactly.

use serde::{Deserialize, Serialize};

use super::geometry::{circumradius, point_in_polygon, point_segment_distance, segments_intersect, Vec2};
use crate::error::{Error, Result};
use crate::rng::{mix_seed, SeededRng};

/// Dense samples per spline segment before arc-length resampling.
const SPLINE_SAMPLES: usize = 128;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackConfig {
    pub control_points: usize,
    /// Mean control point distance from the origin.
    pub radius: f64,
    /// Radii are drawn from `radius * (1 +- radius_jitter)`.
    pub radius_jitter: f64,
    /// Angular jitter as a fraction of half the control point spacing.
    pub angle_jitter: f64,
    pub track_width: f64,
    pub tile_length: f64,
    pub min_tiles: usize,
    pub max_tiles: usize,
    /// Smallest allowed circumradius of three consecutive samples.
    pub min_curve_radius: f64,
    /// Minimum distance between centerline parts that are far apart along
    /// the track, as a multiple of the width.
    pub min_clearance: f64,
    pub max_attempts: u32,
    /// Half side of the square playfield centred on the origin.
    pub playfield: f64,
}

impl TrackConfig {
    /// Roughly 300 tiles per lap.
    pub fn reference() -> Self {
        Self {
            control_points: 12,
            radius: 150.0,
            radius_jitter: 0.3,
            angle_jitter: 0.4,
            track_width: 13.0,
            tile_length: 3.5,
            min_tiles: 250,
            max_tiles: 350,
            min_curve_radius: 10.0,
            min_clearance: 1.2,
            max_attempts: 64,
            playfield: 330.0,
        }
    }

    /// Roughly 100 tiles per lap.
    pub fn desk() -> Self {
        Self {
            control_points: 8,
            radius: 54.0,
            min_tiles: 80,
            max_tiles: 120,
            playfield: 110.0,
            ..Self::reference()
        }
    }

    /// No jitter: a near-circular loop.
    pub fn circular(radius: f64) -> Self {
        let circumference = std::f64::consts::TAU * radius;
        let n = (circumference / 3.5).round() as usize;
        Self {
            radius,
            radius_jitter: 0.0,
            angle_jitter: 0.0,
            min_tiles: n.saturating_sub(n / 10).max(3),
            max_tiles: n + n / 10 + 1,
            playfield: 2.2 * radius,
            ..Self::reference()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.control_points < 4 {
            return Err(Error::config("a track needs at least 4 control points"));
        }
        let positive = [
            ("radius", self.radius),
            ("track_width", self.track_width),
            ("tile_length", self.tile_length),
            ("playfield", self.playfield),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::config(format!("track {name} must be > 0, got {v}")));
            }
        }
        if !(0.0..1.0).contains(&self.radius_jitter) {
            return Err(Error::config(format!("radius_jitter {} outside [0, 1)", self.radius_jitter)));
        }
        if !(0.0..=1.0).contains(&self.angle_jitter) {
            return Err(Error::config(format!("angle_jitter {} outside [0, 1]", self.angle_jitter)));
        }
        if self.min_tiles < 3 || self.min_tiles > self.max_tiles {
            return Err(Error::config(format!(
                "tile band [{}, {}] is empty or too small",
                self.min_tiles, self.max_tiles
            )));
        }
        if self.max_attempts == 0 {
            return Err(Error::config("max_attempts must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Track {
    /// Seed the caller asked for.
    pub seed: u64,
    /// Number of rejected candidates before this one.
    pub retries: u32,
    pub control_points: Vec<Vec2>,
    pub centerline: Vec<Vec2>,
    pub tiles: Vec<[Vec2; 4]>,
    pub track_width: f64,
    pub playfield: f64,
    bounds: Vec<(Vec2, Vec2)>,
}

impl Track {
    pub fn tile_count(&self) -> usize {
        self.tiles.len()
    }

    pub fn length(&self) -> f64 {
        let n = self.centerline.len();
        (0..n)
            .map(|i| self.centerline[(i + 1) % n].sub(self.centerline[i]).norm())
            .sum()
    }

    /// Index of the tile containing `p`, if any.
    pub fn tile_at(&self, p: Vec2) -> Option<usize> {
        self.tiles.iter().zip(&self.bounds).position(|(quad, (lo, hi))| {
            p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && point_in_polygon(p, quad)
        })
    }

    pub fn tile_bounds(&self, i: usize) -> (Vec2, Vec2) {
        self.bounds[i]
    }

    /// Midpoint of tile 0 and the direction of travel there.
    pub fn start_pose(&self) -> (Vec2, f64) {
        let a = self.centerline[0];
        let b = self.centerline[1];
        let d = b.sub(a);
        (a.add(d.scale(0.5)), libm::atan2(d.y, d.x))
    }

    pub fn inside_playfield(&self, p: Vec2) -> bool {
        p.x.abs() <= self.playfield && p.y.abs() <= self.playfield
    }
}

pub fn generate_track(seed: u64, config: &TrackConfig) -> Result<Track> {
    config.validate()?;
    let mut last_reason = String::new();
    for attempt in 0..config.max_attempts {
        let attempt_seed = if attempt == 0 {
            seed
        } else {
            mix_seed(&[seed, attempt as u64])
        };
        match candidate(attempt_seed, config) {
            Ok((control_points, centerline)) => {
                let tiles = build_tiles(&centerline, config.track_width);
                let bounds = tiles.iter().map(quad_bounds).collect();
                return Ok(Track {
                    seed,
                    retries: attempt,
                    control_points,
                    centerline,
                    tiles,
                    track_width: config.track_width,
                    playfield: config.playfield,
                    bounds,
                });
            }
            Err(reason) => last_reason = reason,
        }
    }
    Err(Error::TrackGeneration {
        attempts: config.max_attempts as usize,
        reason: last_reason,
    })
}

fn candidate(seed: u64, config: &TrackConfig) -> std::result::Result<(Vec<Vec2>, Vec<Vec2>), String> {
    let mut rng = SeededRng::new(seed);
    let k = config.control_points;
    let spacing = std::f64::consts::TAU / k as f64;
    let control: Vec<Vec2> = (0..k)
        .map(|i| {
            let theta = spacing * i as f64 + rng.uniform_range(-1.0, 1.0) * config.angle_jitter * spacing / 2.0;
            let r = config.radius * (1.0 + rng.uniform_range(-1.0, 1.0) * config.radius_jitter);
            Vec2::from_angle(theta).scale(r)
        })
        .collect();

    let dense = closed_catmull_rom(&control, SPLINE_SAMPLES);
    let centerline = resample(&dense, config.tile_length);
    let n = centerline.len();
    if n < config.min_tiles || n > config.max_tiles {
        return Err(format!(
            "{n} tiles outside [{}, {}]",
            config.min_tiles, config.max_tiles
        ));
    }
    check_shape(&centerline, config)?;
    Ok((control, centerline))
}

fn check_shape(c: &[Vec2], config: &TrackConfig) -> std::result::Result<(), String> {
    let n = c.len();
    for i in 0..n {
        let r = circumradius(c[(i + n - 1) % n], c[i], c[(i + 1) % n]);
        if r < config.min_curve_radius {
            return Err(format!("curve radius {r:.2} at sample {i}"));
        }
    }
    for i in 0..n {
        let (a, b) = (c[i], c[(i + 1) % n]);
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            if segments_intersect(a, b, c[j], c[(j + 1) % n]) {
                return Err(format!("centerline segments {i} and {j} cross"));
            }
        }
    }
    let window = (2.0 * config.track_width / config.tile_length).ceil() as usize;
    let clearance = config.min_clearance * config.track_width;
    for i in 0..n {
        for j in 0..n {
            let gap = cyclic_gap(i, j, n).min(cyclic_gap(i, (j + 1) % n, n));
            if gap <= window {
                continue;
            }
            let d = point_segment_distance(c[i], c[j], c[(j + 1) % n]);
            if d < clearance {
                return Err(format!("sample {i} passes {d:.2} from segment {j}"));
            }
        }
    }
    Ok(())
}

fn cyclic_gap(i: usize, j: usize, n: usize) -> usize {
    let d = i.abs_diff(j);
    d.min(n - d)
}

/// Closed centripetal Catmull-Rom through `p`, `per_segment` samples per span.
fn closed_catmull_rom(p: &[Vec2], per_segment: usize) -> Vec<Vec2> {
    let k = p.len();
    let mut out = Vec::with_capacity(k * per_segment);
    for i in 0..k {
        let p0 = p[(i + k - 1) % k];
        let p1 = p[i];
        let p2 = p[(i + 1) % k];
        let p3 = p[(i + 2) % k];
        let t0 = 0.0;
        let t1 = t0 + p1.sub(p0).norm().sqrt();
        let t2 = t1 + p2.sub(p1).norm().sqrt();
        let t3 = t2 + p3.sub(p2).norm().sqrt();
        for s in 0..per_segment {
            let t = t1 + (t2 - t1) * s as f64 / per_segment as f64;
            let lerp = |a: Vec2, b: Vec2, ta: f64, tb: f64| {
                a.scale((tb - t) / (tb - ta)).add(b.scale((t - ta) / (tb - ta)))
            };
            let a1 = lerp(p0, p1, t0, t1);
            let a2 = lerp(p1, p2, t1, t2);
            let a3 = lerp(p2, p3, t2, t3);
            let b1 = lerp(a1, a2, t0, t2);
            let b2 = lerp(a2, a3, t1, t3);
            out.push(lerp(b1, b2, t1, t2));
        }
    }
    out
}

/// Resample a closed polyline into `round(L / step)` points at equal arc length.
fn resample(dense: &[Vec2], step: f64) -> Vec<Vec2> {
    let m = dense.len();
    let mut cumulative = Vec::with_capacity(m + 1);
    cumulative.push(0.0);
    for i in 0..m {
        let d = dense[(i + 1) % m].sub(dense[i]).norm();
        cumulative.push(cumulative[i] + d);
    }
    let length = cumulative[m];
    let n = ((length / step).round() as usize).max(3);
    let mut out = Vec::with_capacity(n);
    let mut seg = 0;
    for i in 0..n {
        let s = length * i as f64 / n as f64;
        while seg + 1 < m && cumulative[seg + 1] <= s {
            seg += 1;
        }
        let span = cumulative[seg + 1] - cumulative[seg];
        let f = if span > 0.0 { (s - cumulative[seg]) / span } else { 0.0 };
        let a = dense[seg];
        let b = dense[(seg + 1) % m];
        out.push(a.add(b.sub(a).scale(f)));
    }
    out
}

fn build_tiles(c: &[Vec2], width: f64) -> Vec<[Vec2; 4]> {
    let n = c.len();
    let half = width / 2.0;
    let normals: Vec<Vec2> = (0..n)
        .map(|i| c[(i + 1) % n].sub(c[(i + n - 1) % n]).normalized().perp().scale(half))
        .collect();
    (0..n)
        .map(|i| {
            let j = (i + 1) % n;
            [
                c[i].sub(normals[i]),
                c[j].sub(normals[j]),
                c[j].add(normals[j]),
                c[i].add(normals[i]),
            ]
        })
        .collect()
}

fn quad_bounds(q: &[Vec2; 4]) -> (Vec2, Vec2) {
    let mut lo = q[0];
    let mut hi = q[0];
    for p in &q[1..] {
        lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    (lo, hi)
}
