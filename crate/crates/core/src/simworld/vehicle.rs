//! Kinematic bicycle vehicle model with throttle/brake/drag longitudinal
//! dynamics and exact constant-curvature pose integration per tick.

use serde::{Deserialize, Serialize};

use super::geometry::{wrap_angle, Vec2};

/// Fixed physical parameters of the simulated vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleParams {
    pub width: f64,
    pub length: f64,
    /// Maximum front-wheel angle at full steer, radians.
    pub max_steer_angle: f64,
    /// Full-throttle acceleration, m/s^2.
    pub max_accel: f64,
    /// Full-brake deceleration, m/s^2.
    pub max_brake_decel: f64,
    /// Linear drag coefficient, 1/s. With max_accel 3 and drag 0.25 the
    /// top speed is 12 m/s.
    pub drag: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            width: 1.8,
            length: 4.2,
            max_steer_angle: 35.0_f64.to_radians(),
            max_accel: 3.0,
            max_brake_decel: 6.0,
            drag: 0.25,
        }
    }
}

/// Pose and longitudinal speed; `position` is the footprint center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub position: Vec2,
    /// Heading, normalized to (-pi, pi].
    pub heading: f64,
    /// Signed speed, negative while reversing.
    pub speed: f64,
    pub wheelbase: f64,
}

impl VehicleState {
    pub fn at(position: Vec2, heading: f64) -> Self {
        Self {
            position,
            heading: wrap_angle(heading),
            speed: 0.0,
            wheelbase: 2.5,
        }
    }

    /// Corners of the footprint rectangle, counter-clockwise.
    pub fn footprint_corners(&self, params: &VehicleParams) -> [Vec2; 4] {
        let fwd = Vec2::from_angle(self.heading);
        let left = fwd.perp_left();
        let hl = params.length / 2.0;
        let hw = params.width / 2.0;
        [
            self.position + fwd * hl + left * hw,
            self.position + fwd * (-hl) + left * hw,
            self.position + fwd * (-hl) + left * (-hw),
            self.position + fwd * hl + left * (-hw),
        ]
    }

    /// Regular grid of sample points covering the footprint (cell centers),
    /// used for the area-fraction measures.
    pub fn footprint_samples(&self, params: &VehicleParams, nx: usize, ny: usize) -> Vec<Vec2> {
        let fwd = Vec2::from_angle(self.heading);
        let left = fwd.perp_left();
        let mut points = Vec::with_capacity(nx * ny);
        for i in 0..nx {
            let u = (i as f64 + 0.5) / nx as f64 - 0.5;
            for j in 0..ny {
                let v = (j as f64 + 0.5) / ny as f64 - 0.5;
                points.push(self.position + fwd * (u * params.length) + left * (v * params.width));
            }
        }
        points
    }
}

/// Driver-level control input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlSignal {
    /// Steering command in [-1, 1]; positive steers right.
    pub steer: f64,
    /// Throttle in [0, 1].
    pub throttle: f64,
    /// Brake in [0, 1].
    pub brake: f64,
    /// Reverse-gear flag.
    pub reverse: bool,
}

impl ControlSignal {
    /// Constructs a control, clamping every channel into range.
    pub fn new(steer: f64, throttle: f64, brake: f64, reverse: bool) -> Self {
        Self {
            steer: steer.clamp(-1.0, 1.0),
            throttle: throttle.clamp(0.0, 1.0),
            brake: brake.clamp(0.0, 1.0),
            reverse,
        }
    }
}

/// Advances the vehicle one tick; returns the distance driven.
///
/// Speed integrates throttle (sign-flipped in reverse), linear drag and a
/// brake term that never pushes the speed through zero. The pose then moves
/// along the exact constant-curvature arc of the bicycle model, so constant
/// steer at constant speed traces a circle of radius
/// `wheelbase / tan(steer * max_steer_angle)`.
pub fn integrate(
    state: &mut VehicleState,
    params: &VehicleParams,
    control: &ControlSignal,
    dt: f64,
) -> f64 {
    debug_assert!(dt > 0.0);
    let drive = if control.reverse {
        -control.throttle * params.max_accel
    } else {
        control.throttle * params.max_accel
    };
    let mut v = state.speed + (drive - params.drag * state.speed) * dt;
    if control.brake > 0.0 {
        let dec = control.brake * params.max_brake_decel * dt;
        v = if v > 0.0 {
            (v - dec).max(0.0)
        } else {
            (v + dec).min(0.0)
        };
    }

    // Steering command is positive-right; the heading rate of the bicycle
    // model is positive-left, hence the sign flip.
    let wheel = -control.steer * params.max_steer_angle;
    let omega = v / state.wheelbase * wheel.tan();
    let theta = state.heading;
    if omega.abs() < 1e-9 {
        state.position = state.position + Vec2::from_angle(theta) * (v * dt);
    } else {
        let radius = v / omega;
        let theta_next = theta + omega * dt;
        state.position = state.position
            + Vec2::new(
                radius * (theta_next.sin() - theta.sin()),
                radius * (theta.cos() - theta_next.cos()),
            );
    }
    state.heading = wrap_angle(theta + omega * dt);
    state.speed = v;
    v.abs() * dt
}
