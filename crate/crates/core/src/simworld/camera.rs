//! Forward-facing semantic ground camera.
//!
//! Samples a trapezoid of the ground plane ahead of the vehicle onto a
//! fixed pixel grid and classifies every sample point against the track
//! polygons and obstacles. Purely deterministic.

use serde::{Deserialize, Serialize};

use super::geometry::Vec2;
use super::{WorldState, LANE_LINE_HALF_WIDTH};
use crate::perception::{SemanticClass, SemanticMap};
use crate::simworld::ObstacleKind;

/// View frustum and resolution of the semantic camera.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraConfig {
    /// Image width in pixels; must be divisible by 3 for the region grid.
    pub width: usize,
    /// Image height in pixels; must be divisible by 2.
    pub height: usize,
    /// Ground distance of the bottom image row, meters.
    pub near: f64,
    /// Ground distance of the top image row, meters.
    pub far: f64,
    /// Total view width at the near edge, in lane widths.
    pub near_width_lanes: f64,
    /// Total view width at the far edge, in lane widths.
    pub far_width_lanes: f64,
}

impl Default for CameraConfig {
    fn default() -> Self {
        Self {
            // 81x60: nearest grid to 80x60 whose width the 3-column region
            // split divides evenly.
            width: 81,
            height: 60,
            near: 1.0,
            far: 30.0,
            near_width_lanes: 1.5,
            far_width_lanes: 6.0,
        }
    }
}

/// Renders the ground view from the vehicle's pose. Row 0 is the far edge;
/// column 0 is the left edge of the view.
pub fn render_semantic(world: &WorldState, cam: &CameraConfig) -> SemanticMap {
    let mut map = SemanticMap::filled(cam.width, cam.height, SemanticClass::OffRoad)
        .expect("camera dimensions are positive");
    let forward = Vec2::from_angle(world.vehicle.heading);
    let left = forward.perp_left();
    let lane = world.spec.lane_width;
    for row in 0..cam.height {
        // Row centers interpolate linearly from far (top) to near (bottom).
        let fr = (row as f64 + 0.5) / cam.height as f64;
        let depth = cam.far - (cam.far - cam.near) * fr;
        let half_width = 0.5
            * lane
            * (cam.near_width_lanes
                + (cam.far_width_lanes - cam.near_width_lanes) * (depth - cam.near)
                    / (cam.far - cam.near));
        for col in 0..cam.width {
            let u = (col as f64 + 0.5) / cam.width as f64 - 0.5;
            // Column 0 looks left.
            let lateral = -2.0 * half_width * u;
            let point = world.vehicle.position + forward * depth + left * lateral;
            map.set(col, row, classify_ground(world, point));
        }
    }
    map
}

/// Semantic class of one ground point.
pub fn classify_ground(world: &WorldState, point: Vec2) -> SemanticClass {
    // Obstacles take precedence; dynamic ones occlude static ones.
    let mut hit_static = false;
    for obstacle in &world.obstacles {
        if point.distance(obstacle.position) <= obstacle.radius {
            match obstacle.kind {
                ObstacleKind::Dynamic => return SemanticClass::DynamicObject,
                ObstacleKind::Static => hit_static = true,
            }
        }
    }
    if hit_static {
        return SemanticClass::StaticObject;
    }
    let frame = world.geometry.locate(point);
    let dist = frame.lateral.abs();
    let lane = world.spec.lane_width;
    if dist <= LANE_LINE_HALF_WIDTH || (dist - lane).abs() <= LANE_LINE_HALF_WIDTH {
        SemanticClass::RoadLine
    } else if dist < lane {
        SemanticClass::Road
    } else {
        SemanticClass::OffRoad
    }
}
