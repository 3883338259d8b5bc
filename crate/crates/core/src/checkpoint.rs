//! Versioned, human-diffable model checkpoints.
//!
//! A checkpoint captures the complete training state, mid-episode included:
//! config, mixture statistics, Q-table, schedule values, rng stream
//! positions and the live world. Resuming from it continues bitwise
//! identically to a run that never stopped. Serialized as pretty JSON with
//! floats in shortest round-trip form.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::agent::{BayesianAgent, QTable};
use crate::config::{AgentConfig, ScheduleState};
use crate::harness::{EpisodeRuntime, HarnessError, TrainSetup, Trainer};
use crate::mixture::Mixture;
use crate::simworld::WorldState;
use crate::state::StateVector;

/// Current checkpoint format version.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint version {found} unsupported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("failed to read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("failed to write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("checkpoint parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("malformed rng state: {0}")]
    BadRngState(String),
}

/// Serializable position of one ChaCha stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RngState {
    /// 32-byte seed, hex encoded.
    pub seed: String,
    pub stream: u64,
    pub word_pos: u128,
}

impl RngState {
    pub fn capture(rng: &ChaCha8Rng) -> Self {
        let seed = rng
            .get_seed()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect::<String>();
        Self {
            seed,
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos(),
        }
    }

    pub fn restore(&self) -> Result<ChaCha8Rng, CheckpointError> {
        if self.seed.len() != 64 {
            return Err(CheckpointError::BadRngState(format!(
                "seed must be 64 hex chars, got {}",
                self.seed.len()
            )));
        }
        let mut seed = [0u8; 32];
        for (i, chunk) in seed.iter_mut().enumerate() {
            let byte = u8::from_str_radix(&self.seed[2 * i..2 * i + 2], 16)
                .map_err(|e| CheckpointError::BadRngState(e.to_string()))?;
            *chunk = byte;
        }
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(self.word_pos);
        Ok(rng)
    }
}

/// The three training streams.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RngStates {
    pub policy: RngState,
    pub track: RngState,
    pub noise: RngState,
}

/// Live episode state at checkpoint time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSnapshot {
    pub world: WorldState,
    pub scenario_cursor: usize,
    pub episode_index: u64,
    pub decisions_in_episode: u32,
    pub pending_state: StateVector,
}

/// Complete training state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub config: AgentConfig,
    pub setup: TrainSetup,
    pub mixture: Mixture,
    pub q: QTable,
    pub schedule: ScheduleState,
    pub step_count: u64,
    pub rng: RngStates,
    pub episode: EpisodeSnapshot,
}

impl Checkpoint {
    /// Captures the full state of a trainer.
    pub fn capture(trainer: &Trainer) -> Self {
        let episode = trainer.episode_runtime();
        Self {
            format_version: FORMAT_VERSION,
            config: trainer.config().clone(),
            setup: trainer.setup().clone(),
            mixture: trainer.agent().mixture().clone(),
            q: trainer.agent().q().clone(),
            schedule: trainer.schedule(),
            step_count: trainer.step_count(),
            rng: trainer.rng_states(),
            episode: EpisodeSnapshot {
                world: episode.world.clone(),
                scenario_cursor: episode.scenario_cursor,
                episode_index: episode.episode_index,
                decisions_in_episode: episode.decisions_in_episode,
                pending_state: episode.pending_state,
            },
        }
    }

    /// Rebuilds a trainer that continues exactly where this checkpoint
    /// was taken.
    pub fn restore(&self) -> Result<Trainer, CheckpointError> {
        if self.format_version != FORMAT_VERSION {
            return Err(CheckpointError::VersionMismatch {
                found: self.format_version,
                expected: FORMAT_VERSION,
            });
        }
        let agent = BayesianAgent::from_parts(
            self.mixture.clone(),
            self.q.clone(),
            self.config.gamma,
            self.config.t_lower,
            self.config.t_upper,
        );
        Ok(Trainer::from_checkpoint_parts(
            self.config.clone(),
            self.setup.clone(),
            agent,
            self.schedule,
            self.step_count,
            self.rng.policy.restore()?,
            self.rng.track.restore()?,
            self.rng.noise.restore()?,
            EpisodeRuntime {
                world: self.episode.world.clone(),
                scenario_cursor: self.episode.scenario_cursor,
                episode_index: self.episode.episode_index,
                decisions_in_episode: self.episode.decisions_in_episode,
                pending_state: self.episode.pending_state,
            },
        ))
    }

    /// Deployment view: the frozen agent alone.
    pub fn agent(&self) -> BayesianAgent {
        BayesianAgent::from_parts(
            self.mixture.clone(),
            self.q.clone(),
            self.config.gamma,
            self.config.t_lower,
            self.config.t_upper,
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("checkpoint serializes")
    }

    pub fn from_json(json: &str) -> Result<Self, CheckpointError> {
        let cp: Checkpoint = serde_json::from_str(json)?;
        if cp.format_version != FORMAT_VERSION {
            return Err(CheckpointError::VersionMismatch {
                found: cp.format_version,
                expected: FORMAT_VERSION,
            });
        }
        Ok(cp)
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        std::fs::write(path, self.to_json()).map_err(|source| CheckpointError::Write {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        let json = std::fs::read_to_string(path).map_err(|source| CheckpointError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&json)
    }
}

impl Trainer {
    pub(crate) fn episode_runtime(&self) -> &EpisodeRuntime {
        &self.episode
    }

    pub fn rng_states(&self) -> RngStates {
        RngStates {
            policy: RngState::capture(&self.rng_policy),
            track: RngState::capture(&self.rng_track),
            noise: RngState::capture(&self.rng_noise),
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_checkpoint_parts(
        cfg: AgentConfig,
        setup: TrainSetup,
        agent: BayesianAgent,
        sched: ScheduleState,
        step_count: u64,
        rng_policy: ChaCha8Rng,
        rng_track: ChaCha8Rng,
        rng_noise: ChaCha8Rng,
        episode: EpisodeRuntime,
    ) -> Trainer {
        Trainer {
            cfg,
            setup,
            agent,
            sched,
            step_count,
            rng_policy,
            rng_track,
            rng_noise,
            episode,
            log: Vec::new(),
        }
    }

    /// Convenience wrapper for [`Checkpoint::capture`].
    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint::capture(self)
    }

    /// Convenience wrapper for [`Checkpoint::restore`].
    pub fn resume(checkpoint: &Checkpoint) -> Result<Trainer, HarnessError> {
        checkpoint
            .restore()
            .map_err(|e| crate::config::ConfigError::invalid("checkpoint", e.to_string()).into())
    }
}
