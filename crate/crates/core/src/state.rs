//! Perceptual state vector and the discrete action set.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of image regions (3 directions x 2 distances).
pub const NUM_REGIONS: usize = 6;
/// Number of semantic classes per region histogram.
pub const NUM_CLASSES: usize = 5;
/// Dimensionality of the perceptual state.
pub const STATE_DIM: usize = NUM_REGIONS * NUM_CLASSES;

/// Absolute tolerance on the l1 normalization of a state vector.
pub const STATE_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum StateVectorError {
    #[error("state entry {index} is negative ({value})")]
    NegativeEntry { index: usize, value: f64 },
    #[error("state entry {index} is not finite")]
    NonFinite { index: usize },
    #[error("state entries sum to {sum}, expected 1 within {STATE_SUM_TOL}")]
    NotNormalized { sum: f64 },
    #[error("cannot normalize a weight vector with non-positive total {total}")]
    DegenerateWeights { total: f64 },
}

/// An l1-normalized, non-negative 30-dimensional perceptual state.
///
/// Layout is region-major, class-minor: entry `region * NUM_CLASSES + class`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateVector([f64; STATE_DIM]);

impl StateVector {
    /// Wraps a raw vector, enforcing non-negativity and l1 normalization.
    pub fn new(values: [f64; STATE_DIM]) -> Result<Self, StateVectorError> {
        let mut sum = 0.0;
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(StateVectorError::NonFinite { index });
            }
            if value < 0.0 {
                return Err(StateVectorError::NegativeEntry { index, value });
            }
            sum += value;
        }
        if (sum - 1.0).abs() > STATE_SUM_TOL {
            return Err(StateVectorError::NotNormalized { sum });
        }
        Ok(Self(values))
    }

    /// Builds a state by dividing non-negative weights by their l1 norm.
    pub fn from_weights(weights: &[f64; STATE_DIM]) -> Result<Self, StateVectorError> {
        let mut total = 0.0;
        for (index, &w) in weights.iter().enumerate() {
            if !w.is_finite() {
                return Err(StateVectorError::NonFinite { index });
            }
            if w < 0.0 {
                return Err(StateVectorError::NegativeEntry { index, value: w });
            }
            total += w;
        }
        if total <= 0.0 {
            return Err(StateVectorError::DegenerateWeights { total });
        }
        let mut values = [0.0; STATE_DIM];
        for (v, &w) in values.iter_mut().zip(weights.iter()) {
            *v = w / total;
        }
        Ok(Self(values))
    }

    /// Uniform state: every entry 1/30.
    pub fn uniform() -> Self {
        Self([1.0 / STATE_DIM as f64; STATE_DIM])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn values(&self) -> &[f64; STATE_DIM] {
        &self.0
    }

    /// Entry for a (region, class) pair.
    pub fn get(&self, region: usize, class: usize) -> f64 {
        self.0[region * NUM_CLASSES + class]
    }

    /// Largest coordinate-wise absolute difference to another state.
    pub fn linf_distance(&self, other: &StateVector) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// The four action primitives, in fixed tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Forward,
    TurnRight,
    TurnLeft,
    Backward,
}

/// Number of actions; fixed for the lifetime of a model.
pub const NUM_ACTIONS: usize = 4;

impl Action {
    /// All actions in tie-break order (Forward < TurnRight < TurnLeft < Backward).
    pub const ALL: [Action; NUM_ACTIONS] = [
        Action::Forward,
        Action::TurnRight,
        Action::TurnLeft,
        Action::Backward,
    ];

    pub fn index(self) -> usize {
        match self {
            Action::Forward => 0,
            Action::TurnRight => 1,
            Action::TurnLeft => 2,
            Action::Backward => 3,
        }
    }

    pub fn from_index(index: usize) -> Option<Action> {
        Action::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Action::Forward => "Forward",
            Action::TurnRight => "TurnRight",
            Action::TurnLeft => "TurnLeft",
            Action::Backward => "Backward",
        }
    }
}

impl std::fmt::Display for Action {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Action {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Forward" => Ok(Action::Forward),
            "TurnRight" => Ok(Action::TurnRight),
            "TurnLeft" => Ok(Action::TurnLeft),
            "Backward" => Ok(Action::Backward),
            other => Err(format!("unknown action name: {other}")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_state_is_normalized() {
        let s = StateVector::uniform();
        let sum: f64 = s.as_slice().iter().sum();
        assert!((sum - 1.0).abs() < STATE_SUM_TOL);
    }

    #[test]
    fn rejects_negative_entries() {
        let mut v = [1.0 / STATE_DIM as f64; STATE_DIM];
        v[3] = -v[3];
        v[4] += 2.0 / STATE_DIM as f64;
        assert!(matches!(
            StateVector::new(v),
            Err(StateVectorError::NegativeEntry { index: 3, .. })
        ));
    }

    #[test]
    fn rejects_unnormalized() {
        let v = [0.5 / STATE_DIM as f64; STATE_DIM];
        assert!(matches!(
            StateVector::new(v),
            Err(StateVectorError::NotNormalized { .. })
        ));
    }

    #[test]
    fn from_weights_normalizes() {
        let mut w = [0.0; STATE_DIM];
        w[0] = 3.0;
        w[7] = 1.0;
        let s = StateVector::from_weights(&w).unwrap();
        assert!((s.as_slice()[0] - 0.75).abs() < 1e-15);
        assert!((s.as_slice()[7] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn action_order_is_fixed() {
        assert_eq!(Action::Forward.index(), 0);
        assert_eq!(Action::TurnRight.index(), 1);
        assert_eq!(Action::TurnLeft.index(), 2);
        assert_eq!(Action::Backward.index(), 3);
        for (i, a) in Action::ALL.iter().enumerate() {
            assert_eq!(Action::from_index(i), Some(*a));
        }
        assert_eq!(Action::from_index(4), None);
    }

    #[test]
    fn action_name_round_trip() {
        for a in Action::ALL {
            assert_eq!(a.name().parse::<Action>().unwrap(), a);
        }
    }
}
