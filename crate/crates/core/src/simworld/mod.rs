//! Deterministic top-down 2D driving world: track scenarios, kinematic
//! vehicle, driving measures and the semantic ground camera.

mod camera;
mod geometry;
mod reward;
mod vehicle;

pub use camera::{classify_ground, render_semantic, CameraConfig};
pub use geometry::{wrap_angle, TrackFrame, TrackGeometry, TrackPiece, Vec2};
pub use reward::{cascade_reward, reward, speed_reward, RewardBranch, RewardConfig};
pub use vehicle::{integrate, ControlSignal, VehicleParams, VehicleState};

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;
use thiserror::Error;

use crate::state::Action;

/// Simulator frame period: 7 Hz.
pub const SIM_DT: f64 = 1.0 / 7.0;
/// Simulator ticks per agent decision (one decision per simulated second).
pub const DECISION_PERIOD: u32 = 7;
/// Half-width of the painted lane boundary stripes, meters.
pub const LANE_LINE_HALF_WIDTH: f64 = 0.075;
/// Footprint sample grid used for the overlap fractions.
const FOOTPRINT_NX: usize = 8;
const FOOTPRINT_NY: usize = 4;
/// How far beyond the road edge the vehicle may stray before the episode
/// is cut off, meters.
pub const OFF_CORRIDOR_MARGIN: f64 = 5.0;
/// Station of the spawn point, keeping the whole footprint on the track.
const SPAWN_STATION: f64 = 2.5;
/// Maximum lateral spawn jitter around the lane center, meters.
const SPAWN_JITTER: f64 = 0.3;

#[derive(Debug, Error, PartialEq)]
pub enum TrackError {
    #[error("lane width {lane_width} must exceed the vehicle width {vehicle_width}")]
    LaneTooNarrow { lane_width: f64, vehicle_width: f64 },
    #[error("curve radius {curve_radius} must exceed the lane width {lane_width}")]
    CurveTooTight { curve_radius: f64, lane_width: f64 },
    #[error("segment length must be positive, got {0}")]
    BadSegmentLength(f64),
}

/// The three training/evaluation scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scenario {
    Straight,
    RightTurn,
    LeftTurn,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::Straight, Scenario::RightTurn, Scenario::LeftTurn];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Straight => "straight",
            Scenario::RightTurn => "right",
            Scenario::LeftTurn => "left",
        }
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "straight" => Ok(Scenario::Straight),
            "right" => Ok(Scenario::RightTurn),
            "left" => Ok(Scenario::LeftTurn),
            other => Err(format!("unknown scenario {other:?} (straight|right|left)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ObstacleKind {
    Static,
    Dynamic,
}

/// Circular orbit followed by a scripted dynamic obstacle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitSpec {
    pub radius: f64,
    /// Angular velocity, rad/s.
    pub angular_vel: f64,
}

/// Obstacle placement in track coordinates (station along the centerline,
/// signed lateral offset).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObstacleSpec {
    pub station: f64,
    pub lateral: f64,
    pub radius: f64,
    pub kind: ObstacleKind,
    #[serde(default)]
    pub orbit: Option<OrbitSpec>,
}

/// A realized obstacle in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub position: Vec2,
    pub radius: f64,
    pub kind: ObstacleKind,
    pub orbit_center: Option<Vec2>,
    pub orbit: Option<OrbitSpec>,
    pub phase: f64,
}

/// Scenario geometry parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackSpec {
    pub scenario: Scenario,
    /// Width of one lane, meters; the road is two lanes wide.
    pub lane_width: f64,
    /// Total length of the straight sections, meters. Turn scenarios split
    /// it evenly between the entry and exit straights.
    pub segment_length: f64,
    /// Centerline radius of the 90-degree turn, meters.
    pub curve_radius: f64,
    #[serde(default)]
    pub obstacles: Vec<ObstacleSpec>,
}

impl Default for TrackSpec {
    fn default() -> Self {
        Self {
            scenario: Scenario::Straight,
            lane_width: 4.0,
            segment_length: 120.0,
            curve_radius: 30.0,
            obstacles: Vec::new(),
        }
    }
}

impl TrackSpec {
    pub fn for_scenario(scenario: Scenario) -> Self {
        Self {
            scenario,
            ..Self::default()
        }
    }

    pub fn validate(&self, params: &VehicleParams) -> Result<(), TrackError> {
        if self.lane_width <= params.width {
            return Err(TrackError::LaneTooNarrow {
                lane_width: self.lane_width,
                vehicle_width: params.width,
            });
        }
        if self.curve_radius <= self.lane_width {
            return Err(TrackError::CurveTooTight {
                curve_radius: self.curve_radius,
                lane_width: self.lane_width,
            });
        }
        if !(self.segment_length > 0.0) {
            return Err(TrackError::BadSegmentLength(self.segment_length));
        }
        Ok(())
    }

    fn pieces(&self) -> Vec<TrackPiece> {
        let half = self.segment_length / 2.0;
        let r = self.curve_radius;
        match self.scenario {
            Scenario::Straight => vec![TrackPiece::Straight {
                start: Vec2::new(0.0, 0.0),
                dir: Vec2::new(1.0, 0.0),
                length: self.segment_length,
            }],
            Scenario::RightTurn => vec![
                TrackPiece::Straight {
                    start: Vec2::new(0.0, 0.0),
                    dir: Vec2::new(1.0, 0.0),
                    length: half,
                },
                TrackPiece::Arc {
                    center: Vec2::new(half, -r),
                    radius: r,
                    start_angle: FRAC_PI_2,
                    sweep: -FRAC_PI_2,
                },
                TrackPiece::Straight {
                    start: Vec2::new(half + r, -r),
                    dir: Vec2::new(0.0, -1.0),
                    length: half,
                },
            ],
            Scenario::LeftTurn => vec![
                TrackPiece::Straight {
                    start: Vec2::new(0.0, 0.0),
                    dir: Vec2::new(1.0, 0.0),
                    length: half,
                },
                TrackPiece::Arc {
                    center: Vec2::new(half, r),
                    radius: r,
                    start_angle: -FRAC_PI_2,
                    sweep: FRAC_PI_2,
                },
                TrackPiece::Straight {
                    start: Vec2::new(half + r, r),
                    dir: Vec2::new(0.0, 1.0),
                    length: half,
                },
            ],
        }
    }
}

/// Per-tick driving measures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measures {
    pub collision: bool,
    /// Kind of the first obstacle hit, when `collision` is set.
    pub collision_kind: Option<ObstacleKind>,
    /// Fraction of the footprint off the road.
    pub offroad_fraction: f64,
    /// Fraction of the footprint in the opposite lane.
    pub otherlane_fraction: f64,
    /// Signed speed, m/s.
    pub speed: f64,
    /// Distance driven this tick, meters.
    pub distance_delta: f64,
}

/// Full simulator ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub spec: TrackSpec,
    pub geometry: TrackGeometry,
    pub params: VehicleParams,
    pub vehicle: VehicleState,
    pub obstacles: Vec<Obstacle>,
    pub tick_count: u64,
}

/// Builds the world for a track spec: centerline geometry, realized
/// obstacles and the vehicle spawned in the right lane at the track start
/// (with a small rng lateral jitter). Deterministic given the rng state.
pub fn build_track(spec: &TrackSpec, rng: &mut impl Rng) -> Result<WorldState, TrackError> {
    let params = VehicleParams::default();
    spec.validate(&params)?;
    let geometry = TrackGeometry::new(spec.pieces());
    let obstacles: Vec<Obstacle> = spec
        .obstacles
        .iter()
        .map(|o| {
            let anchor = geometry.offset_point(o.station, o.lateral);
            match o.orbit {
                None => Obstacle {
                    position: anchor,
                    radius: o.radius,
                    kind: o.kind,
                    orbit_center: None,
                    orbit: None,
                    phase: 0.0,
                },
                Some(orbit) => Obstacle {
                    position: anchor + Vec2::new(orbit.radius, 0.0),
                    radius: o.radius,
                    kind: o.kind,
                    orbit_center: Some(anchor),
                    orbit: Some(orbit),
                    phase: 0.0,
                },
            }
        })
        .collect();

    let jitter = rng.gen_range(-SPAWN_JITTER..=SPAWN_JITTER);
    let lane_center = -spec.lane_width / 2.0;
    let position = geometry.offset_point(SPAWN_STATION, lane_center + jitter);
    let (_, tangent) = geometry.point_at(SPAWN_STATION);
    let vehicle = VehicleState::at(position, tangent.angle());

    Ok(WorldState {
        spec: spec.clone(),
        geometry,
        params,
        vehicle,
        obstacles,
        tick_count: 0,
    })
}

/// Maps an action primitive to its fixed control signal.
pub fn apply_action(a: Action) -> ControlSignal {
    match a {
        Action::Forward => ControlSignal::new(0.0, 0.6, 0.0, false),
        Action::TurnRight => ControlSignal::new(0.5, 0.4, 0.0, false),
        Action::TurnLeft => ControlSignal::new(-0.5, 0.4, 0.0, false),
        Action::Backward => ControlSignal::new(0.0, 0.4, 0.0, true),
    }
}

impl WorldState {
    /// Advances the world one simulator frame and measures the result.
    pub fn tick(&mut self, control: &ControlSignal, dt: f64) -> Measures {
        for obstacle in &mut self.obstacles {
            if let (Some(center), Some(orbit)) = (obstacle.orbit_center, obstacle.orbit) {
                obstacle.phase += orbit.angular_vel * dt;
                obstacle.position = center
                    + Vec2::new(
                        orbit.radius * obstacle.phase.cos(),
                        orbit.radius * obstacle.phase.sin(),
                    );
            }
        }
        let distance_delta = integrate(&mut self.vehicle, &self.params, control, dt);
        self.tick_count += 1;
        self.measure(distance_delta)
    }

    fn measure(&self, distance_delta: f64) -> Measures {
        let samples = self
            .vehicle
            .footprint_samples(&self.params, FOOTPRINT_NX, FOOTPRINT_NY);
        let total = samples.len() as f64;
        let mut off = 0usize;
        let mut opposite = 0usize;
        for p in &samples {
            let frame = self.geometry.locate(*p);
            if frame.lateral.abs() > self.spec.lane_width {
                off += 1;
            } else if frame.lateral > 0.0 {
                opposite += 1;
            }
        }
        let collision_kind = self.collision_kind();
        Measures {
            collision: collision_kind.is_some(),
            collision_kind,
            offroad_fraction: off as f64 / total,
            otherlane_fraction: opposite as f64 / total,
            speed: self.vehicle.speed,
            distance_delta,
        }
    }

    /// First obstacle whose circle overlaps the footprint rectangle, if any.
    /// Dynamic obstacles are checked first.
    fn collision_kind(&self) -> Option<ObstacleKind> {
        let mut hit_static = false;
        for obstacle in &self.obstacles {
            if self.circle_hits_footprint(obstacle.position, obstacle.radius) {
                match obstacle.kind {
                    ObstacleKind::Dynamic => return Some(ObstacleKind::Dynamic),
                    ObstacleKind::Static => hit_static = true,
                }
            }
        }
        hit_static.then_some(ObstacleKind::Static)
    }

    fn circle_hits_footprint(&self, center: Vec2, radius: f64) -> bool {
        let fwd = Vec2::from_angle(self.vehicle.heading);
        let left = fwd.perp_left();
        let rel = center - self.vehicle.position;
        let dx = (rel.dot(fwd).abs() - self.params.length / 2.0).max(0.0);
        let dy = (rel.dot(left).abs() - self.params.width / 2.0).max(0.0);
        dx * dx + dy * dy <= radius * radius
    }

    /// Track coordinates of the vehicle center.
    pub fn vehicle_frame(&self) -> TrackFrame {
        self.geometry.locate(self.vehicle.position)
    }

    /// Vehicle has crossed the goal line at the end of the track.
    pub fn goal_reached(&self) -> bool {
        let frame = self.vehicle_frame();
        frame.station >= self.geometry.total_length() - 0.5
            && frame.lateral.abs() <= self.spec.lane_width
    }

    /// Vehicle has strayed too far from the road corridor.
    pub fn off_corridor(&self) -> bool {
        self.vehicle_frame().lateral.abs() > self.spec.lane_width + OFF_CORRIDOR_MARGIN
    }
}
