//! Planar geometry for track centerlines: straight and arc pieces with
//! closed-form nearest-point queries.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 2D cross product.
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        debug_assert!(n > 0.0, "cannot normalize zero vector");
        Vec2::new(self.x / n, self.y / n)
    }

    /// Rotation by +90 degrees (left normal of a direction).
    pub fn perp_left(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn from_angle(theta: f64) -> Vec2 {
        Vec2::new(theta.cos(), theta.sin())
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl std::ops::Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl std::ops::Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

/// Normalizes an angle to (-pi, pi].
pub fn wrap_angle(theta: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut a = theta % two_pi;
    if a <= -std::f64::consts::PI {
        a += two_pi;
    } else if a > std::f64::consts::PI {
        a -= two_pi;
    }
    a
}

/// One primitive centerline piece.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TrackPiece {
    Straight {
        start: Vec2,
        /// Unit direction of travel.
        dir: Vec2,
        length: f64,
    },
    Arc {
        center: Vec2,
        radius: f64,
        /// Angle of the radial to the start point.
        start_angle: f64,
        /// Signed sweep; positive turns left (counter-clockwise).
        sweep: f64,
    },
}

/// Where a point sits relative to a piece or a whole track.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackFrame {
    /// Arc length along the centerline to the nearest point, clamped to
    /// the track extent.
    pub station: f64,
    /// Signed distance to the nearest centerline point; positive on the
    /// left of the direction of travel.
    pub lateral: f64,
}

impl TrackPiece {
    pub fn length(&self) -> f64 {
        match *self {
            TrackPiece::Straight { length, .. } => length,
            TrackPiece::Arc { radius, sweep, .. } => radius * sweep.abs(),
        }
    }

    /// Centerline point at arc length `s` from the piece start.
    pub fn point_at(&self, s: f64) -> Vec2 {
        match *self {
            TrackPiece::Straight { start, dir, .. } => start + dir * s,
            TrackPiece::Arc {
                center,
                radius,
                start_angle,
                sweep,
            } => {
                let theta = start_angle + sweep.signum() * s / radius;
                center + Vec2::from_angle(theta) * radius
            }
        }
    }

    /// Unit tangent (direction of travel) at arc length `s`.
    pub fn tangent_at(&self, s: f64) -> Vec2 {
        match *self {
            TrackPiece::Straight { dir, .. } => dir,
            TrackPiece::Arc {
                radius,
                start_angle,
                sweep,
                ..
            } => {
                let theta = start_angle + sweep.signum() * s / radius;
                let radial = Vec2::from_angle(theta);
                if sweep >= 0.0 {
                    radial.perp_left()
                } else {
                    radial.perp_left() * -1.0
                }
            }
        }
    }

    /// Nearest point on this piece: local arc length (clamped to the piece
    /// extent) and the distance from `p` to that point.
    fn nearest(&self, p: Vec2) -> (f64, f64) {
        match *self {
            TrackPiece::Straight { start, dir, length } => {
                let s = (p - start).dot(dir).clamp(0.0, length);
                (s, p.distance(start + dir * s))
            }
            TrackPiece::Arc {
                center,
                radius,
                start_angle,
                sweep,
            } => {
                let v = p - center;
                if v.norm() < 1e-12 {
                    // Center of the arc: every arc point is equidistant.
                    return (0.0, radius);
                }
                // Angle of p relative to the start radial, measured along
                // the sweep direction.
                let rel = wrap_angle(v.angle() - start_angle) * sweep.signum();
                let span = sweep.abs();
                let s = if (0.0..=span).contains(&rel) {
                    rel * radius
                } else {
                    // Outside the angular range: closer endpoint wins.
                    let d0 = p.distance(self.point_at(0.0));
                    let d1 = p.distance(self.point_at(span * radius));
                    if d0 <= d1 {
                        0.0
                    } else {
                        span * radius
                    }
                };
                (s, p.distance(self.point_at(s)))
            }
        }
    }
}

/// A centerline made of consecutive pieces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackGeometry {
    pieces: Vec<TrackPiece>,
    cumulative: Vec<f64>,
    total_length: f64,
}

impl TrackGeometry {
    pub fn new(pieces: Vec<TrackPiece>) -> Self {
        assert!(!pieces.is_empty(), "track needs at least one piece");
        let mut cumulative = Vec::with_capacity(pieces.len());
        let mut acc = 0.0;
        for p in &pieces {
            cumulative.push(acc);
            acc += p.length();
        }
        Self {
            pieces,
            cumulative,
            total_length: acc,
        }
    }

    pub fn pieces(&self) -> &[TrackPiece] {
        &self.pieces
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    /// Centerline point and tangent at a global station.
    pub fn point_at(&self, station: f64) -> (Vec2, Vec2) {
        let s = station.clamp(0.0, self.total_length);
        let mut idx = self.pieces.len() - 1;
        for (i, &c) in self.cumulative.iter().enumerate() {
            if s < c + self.pieces[i].length() || i == self.pieces.len() - 1 {
                idx = i;
                break;
            }
        }
        let local = s - self.cumulative[idx];
        (self.pieces[idx].point_at(local), self.pieces[idx].tangent_at(local))
    }

    /// World point at (station, lateral) track coordinates.
    pub fn offset_point(&self, station: f64, lateral: f64) -> Vec2 {
        let (p, t) = self.point_at(station);
        p + t.perp_left() * lateral
    }

    /// Locates `p` relative to the centerline: nearest station and signed
    /// lateral offset (positive left of travel). Beyond the track ends the
    /// lateral magnitude is the distance to the nearest endpoint, so the
    /// road naturally terminates.
    pub fn locate(&self, p: Vec2) -> TrackFrame {
        let mut best_station = 0.0;
        let mut best_dist = f64::INFINITY;
        let mut best_idx = 0usize;
        let mut best_local = 0.0;
        for (i, piece) in self.pieces.iter().enumerate() {
            let (local, dist) = piece.nearest(p);
            if dist < best_dist {
                best_dist = dist;
                best_station = self.cumulative[i] + local;
                best_idx = i;
                best_local = local;
            }
        }
        let tangent = self.pieces[best_idx].tangent_at(best_local);
        let nearest = self.pieces[best_idx].point_at(best_local);
        let side = tangent.cross(p - nearest);
        let lateral = if side >= 0.0 { best_dist } else { -best_dist };
        TrackFrame {
            station: best_station,
            lateral,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn straight_track() -> TrackGeometry {
        TrackGeometry::new(vec![TrackPiece::Straight {
            start: Vec2::new(0.0, 0.0),
            dir: Vec2::new(1.0, 0.0),
            length: 100.0,
        }])
    }

    #[test]
    fn straight_locate_gives_signed_lateral() {
        let track = straight_track();
        let f = track.locate(Vec2::new(10.0, 3.0));
        assert!((f.station - 10.0).abs() < 1e-12);
        assert!((f.lateral - 3.0).abs() < 1e-12);
        let f = track.locate(Vec2::new(42.0, -2.5));
        assert!((f.lateral + 2.5).abs() < 1e-12);
    }

    #[test]
    fn straight_locate_clamps_past_ends() {
        let track = straight_track();
        let f = track.locate(Vec2::new(110.0, 0.0));
        assert!((f.station - 100.0).abs() < 1e-12);
        assert!((f.lateral.abs() - 10.0).abs() < 1e-12);
        let f = track.locate(Vec2::new(-7.0, 0.0));
        assert_eq!(f.station, 0.0);
        assert!((f.lateral.abs() - 7.0).abs() < 1e-12);
    }

    #[test]
    fn arc_length_matches_quarter_circle() {
        let arc = TrackPiece::Arc {
            center: Vec2::new(0.0, 20.0),
            radius: 20.0,
            start_angle: -FRAC_PI_2,
            sweep: FRAC_PI_2,
        };
        assert!((arc.length() - 20.0 * FRAC_PI_2).abs() < 1e-12);
        // Start at (0, 0) heading +x, end at (20, 20) heading +y.
        let start = arc.point_at(0.0);
        assert!(start.distance(Vec2::new(0.0, 0.0)) < 1e-12);
        let t0 = arc.tangent_at(0.0);
        assert!(t0.distance(Vec2::new(1.0, 0.0)) < 1e-12);
        let end = arc.point_at(arc.length());
        assert!(end.distance(Vec2::new(20.0, 20.0)) < 1e-9);
        let t1 = arc.tangent_at(arc.length());
        assert!(t1.distance(Vec2::new(0.0, 1.0)) < 1e-9);
    }

    #[test]
    fn right_turn_arc_orientation() {
        // Right (clockwise) turn from (0,0) heading +x: center below start.
        let arc = TrackPiece::Arc {
            center: Vec2::new(0.0, -15.0),
            radius: 15.0,
            start_angle: FRAC_PI_2,
            sweep: -FRAC_PI_2,
        };
        let t0 = arc.tangent_at(0.0);
        assert!(t0.distance(Vec2::new(1.0, 0.0)) < 1e-12);
        let end = arc.point_at(arc.length());
        assert!(end.distance(Vec2::new(15.0, -15.0)) < 1e-9);
        // Inside of a right turn (to the right of travel) has negative
        // lateral.
        let track = TrackGeometry::new(vec![arc]);
        let inside = track.locate(Vec2::new(3.0, -2.0));
        assert!(inside.lateral < 0.0);
        let outside = track.locate(Vec2::new(3.0, 2.0));
        assert!(outside.lateral > 0.0);
    }

    #[test]
    fn multi_piece_station_is_cumulative() {
        let track = TrackGeometry::new(vec![
            TrackPiece::Straight {
                start: Vec2::new(0.0, 0.0),
                dir: Vec2::new(1.0, 0.0),
                length: 50.0,
            },
            TrackPiece::Arc {
                center: Vec2::new(50.0, 30.0),
                radius: 30.0,
                start_angle: -FRAC_PI_2,
                sweep: FRAC_PI_2,
            },
        ]);
        assert!((track.total_length() - (50.0 + 30.0 * FRAC_PI_2)).abs() < 1e-9);
        // A point along the arc at 45 degrees.
        let theta: f64 = -FRAC_PI_2 + FRAC_PI_2 / 2.0;
        let p = Vec2::new(50.0, 30.0) + Vec2::from_angle(theta) * 31.0;
        let f = track.locate(p);
        assert!((f.station - (50.0 + 30.0 * FRAC_PI_2 / 2.0)).abs() < 1e-9);
        assert!((f.lateral + 1.0).abs() < 1e-9, "outside of a left turn is right of travel");
    }

    #[test]
    fn offset_point_round_trips_through_locate() {
        let track = TrackGeometry::new(vec![
            TrackPiece::Straight {
                start: Vec2::new(0.0, 0.0),
                dir: Vec2::new(1.0, 0.0),
                length: 40.0,
            },
            TrackPiece::Arc {
                center: Vec2::new(40.0, 25.0),
                radius: 25.0,
                start_angle: -FRAC_PI_2,
                sweep: FRAC_PI_2,
            },
            TrackPiece::Straight {
                start: Vec2::new(65.0, 25.0),
                dir: Vec2::new(0.0, 1.0),
                length: 40.0,
            },
        ]);
        for &(station, lateral) in &[(5.0, 1.5), (55.0, -2.0), (90.0, 3.0), (101.0, -3.5)] {
            let p = track.offset_point(station, lateral);
            let f = track.locate(p);
            assert!((f.station - station).abs() < 1e-9, "station {station}");
            assert!((f.lateral - lateral).abs() < 1e-9, "lateral {lateral}");
        }
    }

    #[test]
    fn wrap_angle_stays_in_range() {
        for k in -20..20 {
            let a = wrap_angle(0.7 + k as f64 * std::f64::consts::PI);
            assert!(a > -std::f64::consts::PI - 1e-12);
            assert!(a <= std::f64::consts::PI + 1e-12);
        }
        assert!((wrap_angle(3.0 * std::f64::consts::PI) - std::f64::consts::PI).abs() < 1e-12);
    }
}
