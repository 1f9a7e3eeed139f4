//! Kinematic bicycle model advanced with a fixed timestep.
//!
//! ```text
//! delta   = steer * max_steer
//! a       = engine * accel - brake_decel * brake - drag * v^2
//! v'      = max(0, v + a dt)
//! yaw     = clamp(v' tan(delta) / wheelbase, +-lateral_accel / v')
//! heading += yaw dt
//! pos     += v' dt (cos heading, sin heading)
//! ```
//!
//! The yaw clamp caps lateral acceleration, so fast cars corner wide.

use serde::{Deserialize, Serialize};

use super::geometry::Vec2;
use crate::controller::ActionVector;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CarParams {
    /// Seconds per frame.
    pub dt: f64,
    pub wheelbase: f64,
    /// Wheel angle at full lock, radians.
    pub max_steer: f64,
    /// Forward acceleration at full throttle, units/s^2.
    pub engine: f64,
    /// Deceleration at full brake, units/s^2.
    pub brake_decel: f64,
    /// Quadratic drag coefficient, 1/units.
    pub drag: f64,
    /// Lateral acceleration limit, units/s^2.
    pub lateral_accel: f64,
    pub length: f64,
    pub width: f64,
}

impl Default for CarParams {
    fn default() -> Self {
        Self {
            dt: 1.0 / 50.0,
            wheelbase: 4.0,
            max_steer: 0.4,
            engine: 40.0,
            brake_decel: 60.0,
            drag: 0.00625,
            lateral_accel: 60.0,
            length: 4.4,
            width: 2.0,
        }
    }
}

impl CarParams {
    /// Speed at which full throttle balances drag.
    pub fn top_speed(&self) -> f64 {
        (self.engine / self.drag).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CarState {
    pub position: Vec2,
    pub heading: f64,
    /// Units per second; never negative.
    pub speed: f64,
    /// Current wheel angle, radians.
    pub steering: f64,
}

impl CarState {
    pub fn at_rest(position: Vec2, heading: f64) -> Self {
        Self {
            position,
            heading,
            speed: 0.0,
            steering: 0.0,
        }
    }

    pub fn forward(&self) -> Vec2 {
        Vec2::from_angle(self.heading)
    }

    pub fn is_finite(&self) -> bool {
        self.position.is_finite() && self.heading.is_finite() && self.speed.is_finite()
    }

    pub fn advance(&mut self, params: &CarParams, action: &ActionVector) {
        let dt = params.dt;
        self.steering = action.steer * params.max_steer;
        let a = params.engine * action.accel
            - params.brake_decel * action.brake
            - params.drag * self.speed * self.speed;
        self.speed = (self.speed + a * dt).max(0.0);
        let mut yaw = self.speed * libm::tan(self.steering) / params.wheelbase;
        if self.speed > 0.0 {
            let cap = params.lateral_accel / self.speed;
            yaw = yaw.clamp(-cap, cap);
        }
        self.heading += yaw * dt;
        self.position = self.position.add(self.forward().scale(self.speed * dt));
    }
}
