//! Scripted pure-pursuit driver, used for tests and demonstrations.

use super::car::{CarParams, CarState};
use super::track::Track;
use crate::controller::ActionVector;

#[derive(Clone, Debug)]
pub struct PurePursuit {
    /// Distance to the aim point along the centerline, in samples.
    pub lookahead: usize,
    pub target_speed: f64,
    last_index: usize,
}

impl PurePursuit {
    pub fn new(lookahead: usize, target_speed: f64) -> Self {
        Self {
            lookahead,
            target_speed,
            last_index: 0,
        }
    }

    pub fn act(&mut self, track: &Track, car: &CarState, params: &CarParams) -> ActionVector {
        let c = &track.centerline;
        let n = c.len();
        // Search a window ahead of the last match so the nearest point never
        // jumps to a parallel part of the course.
        let mut best = self.last_index;
        let mut best_d = f64::INFINITY;
        for k in 0..=2 * self.lookahead {
            let i = (self.last_index + k) % n;
            let d = c[i].sub(car.position).norm();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        self.last_index = best;
        let target = c[(best + self.lookahead) % n];
        let to = target.sub(car.position);
        let f = car.forward();
        let alpha = libm::atan2(f.cross(to), f.dot(to));
        let ld = to.norm().max(1e-9);
        let delta = libm::atan(2.0 * params.wheelbase * libm::sin(alpha) / ld);
        let steer = (delta / params.max_steer).clamp(-1.0, 1.0);
        let (accel, brake) = if car.speed < self.target_speed {
            (1.0, 0.0)
        } else if car.speed > self.target_speed + 5.0 {
            (0.0, 0.5)
        } else {
            (0.0, 0.0)
        };
        ActionVector::new(steer, accel, brake)
    }
}
