//! Reward design: a priority cascade over failure types plus an always-on
//! road-view bonus.

use serde::{Deserialize, Serialize};

use super::Measures;
use crate::config::ConfigError;
use crate::perception::{road_view, SemanticMap};

/// Reward coefficients and the target cruising speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardConfig {
    /// Collision penalty.
    pub k1: f64,
    /// Off-road penalty scale.
    pub k2: f64,
    /// Opposite-lane penalty scale.
    pub k3: f64,
    /// Reversing penalty scale.
    pub k4: f64,
    /// Under-speed penalty scale.
    pub k5: f64,
    /// Target speed, m/s.
    pub v_target: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            k1: 50.0,
            k2: 40.0,
            k3: 30.0,
            k4: 15.0,
            k5: 10.0,
            v_target: 8.0,
        }
    }
}

impl RewardConfig {
    pub(crate) fn validate(&self, errors: &mut Vec<ConfigError>) {
        for (name, value) in [
            ("reward.k1", self.k1),
            ("reward.k2", self.k2),
            ("reward.k3", self.k3),
            ("reward.k4", self.k4),
            ("reward.k5", self.k5),
            ("reward.v_target", self.v_target),
        ] {
            if !value.is_finite() || value <= 0.0 {
                errors.push(ConfigError::invalid(
                    name,
                    format!("must be positive, got {value}"),
                ));
            }
        }
    }
}

/// Which branch of the failure cascade fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewardBranch {
    Collision,
    OffRoad,
    OppositeLane,
    Speed,
}

/// Failure-cascade reward before the road-view bonus. Exactly one branch
/// applies per step, in priority order collision > off-road > opposite
/// lane > speed.
pub fn cascade_reward(m: &Measures, cfg: &RewardConfig) -> (f64, RewardBranch) {
    if m.collision {
        (-cfg.k1, RewardBranch::Collision)
    } else if m.offroad_fraction > 0.0 {
        (-cfg.k2 * m.offroad_fraction, RewardBranch::OffRoad)
    } else if m.otherlane_fraction > 0.0 {
        (-cfg.k3 * m.otherlane_fraction, RewardBranch::OppositeLane)
    } else {
        (speed_reward(m.speed, cfg), RewardBranch::Speed)
    }
}

/// Speed term: quadratic penalty on the relative deviation from the target,
/// weighted k4 while reversing and k5 while under-speed (including a
/// standing-still vehicle); zero at or above the target.
pub fn speed_reward(v: f64, cfg: &RewardConfig) -> f64 {
    let rel = (v - cfg.v_target) / cfg.v_target;
    if v < 0.0 {
        -cfg.k4 * rel * rel
    } else if v < cfg.v_target {
        -cfg.k5 * rel * rel
    } else {
        0.0
    }
}

/// Full step reward: cascade value plus the road-view fraction of the
/// agent's input image.
pub fn reward(m: &Measures, map: &SemanticMap, cfg: &RewardConfig) -> f64 {
    cascade_reward(m, cfg).0 + road_view(map)
}
