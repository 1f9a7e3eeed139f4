//! Flat-shaded software rasterizer for the top-down view.
//!
//! The camera follows the car and rotates with it: the car sits at a fixed
//! screen position facing up. A pixel is covered by a polygon when its centre
//! is (half-open rule on scanline crossings), so output is bit-exact.

use serde::{Deserialize, Serialize};

use super::car::{CarParams, CarState};
use super::geometry::Vec2;
use super::track::Track;
use crate::tensor::Tensor3D;

pub const FRAME_SIZE: usize = 96;
pub const FRAME_CHANNELS: usize = 3;

const GRASS_LIGHT: [f64; 3] = [0.4, 0.9, 0.4];
const GRASS_DARK: [f64; 3] = [0.4, 0.8, 0.4];
const CAR: [f64; 3] = [0.8, 0.0, 0.0];
const HUD: [f64; 3] = [0.0, 0.0, 0.0];
const SPEED_BAR: [f64; 3] = [1.0, 1.0, 1.0];
const STEER_BAR: [f64; 3] = [0.0, 1.0, 0.0];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenderConfig {
    /// Pixels per world unit.
    pub zoom: f64,
    /// Screen position of the car centre, in pixels.
    pub car_x: f64,
    pub car_y: f64,
    /// Height of the status strip at the bottom of the frame.
    pub hud_rows: usize,
    /// Side of one grass checker cell, world units.
    pub grass_cell: f64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            zoom: 1.6,
            car_x: 48.0,
            car_y: 68.0,
            hud_rows: 8,
            grass_cell: 10.0,
        }
    }
}

struct Camera {
    pos: Vec2,
    fwd: Vec2,
    right: Vec2,
    zoom: f64,
    cx: f64,
    cy: f64,
}

impl Camera {
    fn new(car: &CarState, cfg: &RenderConfig) -> Self {
        let fwd = car.forward();
        Self {
            pos: car.position,
            fwd,
            right: Vec2::new(fwd.y, -fwd.x),
            zoom: cfg.zoom,
            cx: cfg.car_x,
            cy: cfg.car_y,
        }
    }

    fn to_screen(&self, w: Vec2) -> Vec2 {
        let d = w.sub(self.pos);
        Vec2::new(
            self.cx + d.dot(self.right) * self.zoom,
            self.cy - d.dot(self.fwd) * self.zoom,
        )
    }

    fn to_world(&self, s: Vec2) -> Vec2 {
        self.pos
            .add(self.right.scale((s.x - self.cx) / self.zoom))
            .add(self.fwd.scale((self.cy - s.y) / self.zoom))
    }
}

pub fn render_frame(track: &Track, car: &CarState, params: &CarParams, cfg: &RenderConfig) -> Tensor3D {
    let mut frame = Tensor3D::zeros(FRAME_SIZE, FRAME_SIZE, FRAME_CHANNELS);
    let view_rows = FRAME_SIZE - cfg.hud_rows.min(FRAME_SIZE);
    let cam = Camera::new(car, cfg);

    for py in 0..view_rows {
        for px in 0..FRAME_SIZE {
            let w = cam.to_world(Vec2::new(px as f64 + 0.5, py as f64 + 0.5));
            let cell = libm::floor(w.x / cfg.grass_cell) + libm::floor(w.y / cfg.grass_cell);
            let color = if cell.rem_euclid(2.0) == 0.0 {
                GRASS_LIGHT
            } else {
                GRASS_DARK
            };
            put(&mut frame, py, px, color);
        }
    }

    // Anything farther than the farthest screen corner is invisible.
    let corners = [
        (0.0, 0.0),
        (FRAME_SIZE as f64, 0.0),
        (0.0, view_rows as f64),
        (FRAME_SIZE as f64, view_rows as f64),
    ];
    let reach = corners
        .iter()
        .map(|&(x, y)| libm::hypot(x - cfg.car_x, y - cfg.car_y))
        .fold(0.0, f64::max)
        / cfg.zoom;
    for (i, quad) in track.tiles.iter().enumerate() {
        let (lo, hi) = track.tile_bounds(i);
        if lo.x > car.position.x + reach
            || hi.x < car.position.x - reach
            || lo.y > car.position.y + reach
            || hi.y < car.position.y - reach
        {
            continue;
        }
        let shade = 0.4 + 0.01 * (i % 3) as f64;
        let screen: Vec<Vec2> = quad.iter().map(|p| cam.to_screen(*p)).collect();
        fill_polygon(&mut frame, &screen, view_rows, [shade, shade, shade]);
    }

    let f = car.forward();
    let r = Vec2::new(f.y, -f.x);
    let (hl, hw) = (params.length / 2.0, params.width / 2.0);
    let body: Vec<Vec2> = [(hl, -hw), (hl, hw), (-hl, hw), (-hl, -hw)]
        .iter()
        .map(|&(a, b)| cam.to_screen(car.position.add(f.scale(a)).add(r.scale(b))))
        .collect();
    fill_polygon(&mut frame, &body, view_rows, CAR);

    draw_hud(&mut frame, car, params, view_rows);
    frame
}

fn draw_hud(frame: &mut Tensor3D, car: &CarState, params: &CarParams, top: usize) {
    for py in top..FRAME_SIZE {
        for px in 0..FRAME_SIZE {
            put(frame, py, px, HUD);
        }
    }
    if FRAME_SIZE - top < 4 {
        return;
    }
    let (y0, y1) = (top + 2, FRAME_SIZE - 2);
    let speed_px = ((car.speed / params.top_speed()).min(1.0) * 40.0).round() as usize;
    for py in y0..y1 {
        for px in 4..4 + speed_px {
            put(frame, py, px, SPEED_BAR);
        }
    }
    let centre = 70i64;
    let steer_px = ((car.steering / params.max_steer).clamp(-1.0, 1.0) * 20.0).round() as i64;
    let (a, b) = if steer_px < 0 {
        (centre + steer_px, centre)
    } else {
        (centre, centre + steer_px)
    };
    for py in y0..y1 {
        for px in a..b {
            put(frame, py, px as usize, STEER_BAR);
        }
    }
}

fn fill_polygon(frame: &mut Tensor3D, poly: &[Vec2], rows: usize, color: [f64; 3]) {
    let ymin = poly.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
    let ymax = poly.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);
    if ymax < 0.0 || ymin > rows as f64 {
        return;
    }
    let row_lo = (libm::ceil(ymin - 0.5).max(0.0)) as usize;
    let row_hi = (libm::ceil(ymax - 0.5).min(rows as f64)).max(0.0) as usize;
    let n = poly.len();
    let mut xs: Vec<f64> = Vec::with_capacity(n);
    for py in row_lo..row_hi {
        let y = py as f64 + 0.5;
        xs.clear();
        let mut j = n - 1;
        for i in 0..n {
            let (a, b) = (poly[i], poly[j]);
            if (a.y > y) != (b.y > y) {
                xs.push(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y));
            }
            j = i;
        }
        xs.sort_by(f64::total_cmp);
        for pair in xs.chunks_exact(2) {
            let start = libm::ceil(pair[0] - 0.5).max(0.0);
            let end = libm::ceil(pair[1] - 0.5).min(FRAME_SIZE as f64);
            if end <= start {
                continue;
            }
            for px in start as usize..end as usize {
                put(frame, py, px, color);
            }
        }
    }
}

fn put(frame: &mut Tensor3D, y: usize, x: usize, color: [f64; 3]) {
    for (c, v) in color.iter().enumerate() {
        frame.set(y, x, c, *v);
    }
}
