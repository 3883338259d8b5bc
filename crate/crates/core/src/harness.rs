//! Training and evaluation drivers.
//!
//! All randomness flows from one master seed through fixed-purpose ChaCha
//! streams (policy sampling, track building, segmentation noise), so
//! enabling noise never perturbs policy draws and every run is bitwise
//! reproducible.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{AgentError, BayesianAgent, ScheduleValues};
use crate::config::{AgentConfig, ConfigError, ScheduleState};
use crate::evalkit::{EpisodeRecord, EpisodeStep, Outcome, StepLog};
use crate::mixture::{Mixture, MixturePrior};
use crate::perception::{corrupt, extract_state, NoiseConfig, SemanticMap};
use crate::simworld::{
    apply_action, build_track, render_semantic, reward, CameraConfig, Measures, Scenario,
    TrackError, TrackSpec, WorldState, DECISION_PERIOD, SIM_DT,
};
use crate::state::StateVector;

/// Maximum decision steps per episode before it times out.
pub const EPISODE_CAP: u32 = 400;

/// Stream ids of the per-purpose rngs derived from a master seed.
pub mod stream {
    pub const POLICY: u64 = 1;
    pub const TRACK: u64 = 2;
    pub const NOISE: u64 = 3;
}

/// Derives the rng for one purpose from a master seed.
pub fn derive_stream(master: u64, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(purpose);
    rng
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Track(#[from] TrackError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Mixture(#[from] crate::mixture::MixtureError),
    #[error("scenario rotation must not be empty")]
    NoScenarios,
    #[error("episode count must be positive")]
    NoEpisodes,
}

/// Track spec per scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackSet {
    pub straight: TrackSpec,
    pub right: TrackSpec,
    pub left: TrackSpec,
}

impl Default for TrackSet {
    fn default() -> Self {
        Self {
            straight: TrackSpec::for_scenario(Scenario::Straight),
            right: TrackSpec::for_scenario(Scenario::RightTurn),
            left: TrackSpec::for_scenario(Scenario::LeftTurn),
        }
    }
}

impl TrackSet {
    pub fn spec_for(&self, scenario: Scenario) -> &TrackSpec {
        match scenario {
            Scenario::Straight => &self.straight,
            Scenario::RightTurn => &self.right,
            Scenario::LeftTurn => &self.left,
        }
    }
}

/// Everything a training run needs besides the config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSetup {
    pub tracks: TrackSet,
    /// Episode rotation; training cycles through it on every termination.
    pub scenarios: Vec<Scenario>,
    pub noise: Option<NoiseConfig>,
    pub camera: CameraConfig,
    pub seed: u64,
}

impl TrainSetup {
    pub fn new(seed: u64) -> Self {
        Self {
            tracks: TrackSet::default(),
            scenarios: Scenario::ALL.to_vec(),
            noise: None,
            camera: CameraConfig::default(),
            seed,
        }
    }

    pub fn with_noise(mut self, noise: Option<NoiseConfig>) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_scenarios(mut self, scenarios: Vec<Scenario>) -> Self {
        self.scenarios = scenarios;
        self
    }
}

/// Mutable episode bookkeeping inside a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct EpisodeRuntime {
    pub(crate) world: WorldState,
    pub(crate) scenario_cursor: usize,
    pub(crate) episode_index: u64,
    pub(crate) decisions_in_episode: u32,
    pub(crate) pending_state: StateVector,
}

/// Online training driver implementing the decision loop: perceive,
/// sample an action, hold it for one decision period, perceive again,
/// reward, agent step, advance schedules.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub(crate) cfg: AgentConfig,
    pub(crate) setup: TrainSetup,
    pub(crate) agent: BayesianAgent,
    pub(crate) sched: ScheduleState,
    pub(crate) step_count: u64,
    pub(crate) rng_policy: ChaCha8Rng,
    pub(crate) rng_track: ChaCha8Rng,
    pub(crate) rng_noise: ChaCha8Rng,
    pub(crate) episode: EpisodeRuntime,
    pub(crate) log: Vec<StepLog>,
}

fn perceive(
    world: &WorldState,
    camera: &CameraConfig,
    noise: &Option<NoiseConfig>,
    rng_noise: &mut ChaCha8Rng,
) -> (StateVector, SemanticMap) {
    let map = render_semantic(world, camera);
    let input = match noise {
        Some(n) if !n.is_noop() => corrupt(&map, n, rng_noise),
        _ => map,
    };
    let s = extract_state(&input).expect("camera grid divides into regions");
    (s, input)
}

/// Runs one action for a full decision period. Returns the measures at the
/// decision tick (collision sticky, distance accumulated over the period).
fn run_decision_period(world: &mut WorldState, action: crate::state::Action) -> Measures {
    let control = apply_action(action);
    let mut distance = 0.0;
    let mut measures: Option<Measures> = None;
    for _ in 0..DECISION_PERIOD {
        let m = world.tick(&control, SIM_DT);
        distance += m.distance_delta;
        let collided = m.collision;
        measures = Some(m);
        if collided {
            break;
        }
    }
    let mut m = measures.expect("decision period is positive");
    m.distance_delta = distance;
    m
}

fn episode_outcome(world: &WorldState, m: &Measures, timeout: bool) -> Option<Outcome> {
    if m.collision {
        Some(Outcome::Collision)
    } else if world.off_corridor() {
        Some(Outcome::OffroadTerminal)
    } else if world.goal_reached() {
        Some(Outcome::Success)
    } else if timeout {
        Some(Outcome::Timeout)
    } else {
        None
    }
}

impl Trainer {
    pub fn new(cfg: AgentConfig, setup: TrainSetup) -> Result<Self, HarnessError> {
        cfg.validate()?;
        if setup.scenarios.is_empty() {
            return Err(HarnessError::NoScenarios);
        }
        if let Some(noise) = &setup.noise {
            noise
                .validate()
                .map_err(|e| ConfigError::invalid("noise", e.to_string()))?;
        }
        let rng_policy = derive_stream(setup.seed, stream::POLICY);
        let mut rng_track = derive_stream(setup.seed, stream::TRACK);
        let mut rng_noise = derive_stream(setup.seed, stream::NOISE);

        let scenario = setup.scenarios[0];
        let world = build_track(setup.tracks.spec_for(scenario), &mut rng_track)?;
        let (s0, _) = perceive(&world, &setup.camera, &setup.noise, &mut rng_noise);

        let mut agent = BayesianAgent::new(
            Mixture::new(MixturePrior::state_default()),
            cfg.gamma,
            cfg.t_lower,
            cfg.t_upper,
        );
        agent.bootstrap(&s0)?;

        let sched = ScheduleState::initial(&cfg);
        Ok(Self {
            cfg,
            setup,
            agent,
            sched,
            step_count: 0,
            rng_policy,
            rng_track,
            rng_noise,
            episode: EpisodeRuntime {
                world,
                scenario_cursor: 0,
                episode_index: 0,
                decisions_in_episode: 0,
                pending_state: s0,
            },
            log: Vec::new(),
        })
    }

    pub fn agent(&self) -> &BayesianAgent {
        &self.agent
    }

    pub fn config(&self) -> &AgentConfig {
        &self.cfg
    }

    pub fn setup(&self) -> &TrainSetup {
        &self.setup
    }

    pub fn schedule(&self) -> ScheduleState {
        self.sched
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn log(&self) -> &[StepLog] {
        &self.log
    }

    pub fn take_log(&mut self) -> Vec<StepLog> {
        std::mem::take(&mut self.log)
    }

    fn begin_episode(&mut self) -> Result<(), HarnessError> {
        self.episode.episode_index += 1;
        self.episode.scenario_cursor =
            (self.episode.scenario_cursor + 1) % self.setup.scenarios.len();
        let scenario = self.setup.scenarios[self.episode.scenario_cursor];
        self.episode.world = build_track(self.setup.tracks.spec_for(scenario), &mut self.rng_track)?;
        self.episode.decisions_in_episode = 0;
        let (s0, _) = perceive(
            &self.episode.world,
            &self.setup.camera,
            &self.setup.noise,
            &mut self.rng_noise,
        );
        self.episode.pending_state = s0;
        Ok(())
    }

    /// One decision step of the training loop.
    fn decision_step(&mut self) -> Result<(), HarnessError> {
        let s_t = self.episode.pending_state;
        let (action, _) = self
            .agent
            .select_action(&s_t, self.sched.tau, &mut self.rng_policy);
        let m = run_decision_period(&mut self.episode.world, action);
        let (s_next, input_map) = perceive(
            &self.episode.world,
            &self.setup.camera,
            &self.setup.noise,
            &mut self.rng_noise,
        );
        let r = reward(&m, &input_map, &self.cfg.reward);
        let timeout = self.episode.decisions_in_episode + 1 >= EPISODE_CAP;
        let outcome = episode_outcome(&self.episode.world, &m, timeout);

        let diag = self.agent.step(
            &s_t,
            action,
            r,
            &s_next,
            outcome.is_some(),
            ScheduleValues {
                alpha: self.sched.alpha,
                tau: self.sched.tau,
                rho: self.sched.rho,
            },
        )?;

        self.log.push(StepLog {
            step: self.step_count,
            episode: self.episode.episode_index as usize,
            r_o: m.offroad_fraction,
            r_l: m.otherlane_fraction,
            reward: r,
            td_error: diag.td_error,
            action,
            n_components: self.agent.n_components(),
        });

        self.sched.advance(&self.cfg);
        self.step_count += 1;
        self.episode.decisions_in_episode += 1;
        if outcome.is_some() {
            self.begin_episode()?;
        } else {
            self.episode.pending_state = s_next;
        }
        Ok(())
    }

    /// Runs exactly `n` decision steps (regardless of t_max).
    pub fn train_steps(&mut self, n: u64) -> Result<(), HarnessError> {
        for _ in 0..n {
            self.decision_step()?;
        }
        Ok(())
    }

    /// Trains until `t_max` total decision steps have been taken.
    pub fn run_to_completion(&mut self) -> Result<(), HarnessError> {
        while self.step_count < u64::from(self.cfg.t_max) {
            self.decision_step()?;
        }
        Ok(())
    }
}

/// Deployment options.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    pub scenarios: Vec<Scenario>,
    pub noise: Option<NoiseConfig>,
    pub episodes: usize,
    pub seed: u64,
}

impl EvalOptions {
    pub fn new(episodes: usize, seed: u64) -> Self {
        Self {
            scenarios: Scenario::ALL.to_vec(),
            noise: None,
            episodes,
            seed,
        }
    }

    pub fn with_noise(mut self, noise: Option<NoiseConfig>) -> Self {
        self.noise = noise;
        self
    }
}

/// Greedy deployment of a trained agent: the temperature is forced to 1 and
/// nothing is learned, but the usual TD diagnostics are still computed
/// (read-only) for the exports.
pub fn evaluate(
    agent: &BayesianAgent,
    reward_cfg: &crate::simworld::RewardConfig,
    tracks: &TrackSet,
    camera: &CameraConfig,
    opts: &EvalOptions,
) -> Result<Vec<EpisodeRecord>, HarnessError> {
    if opts.episodes == 0 {
        return Err(HarnessError::NoEpisodes);
    }
    if opts.scenarios.is_empty() {
        return Err(HarnessError::NoScenarios);
    }
    let mut rng_policy = derive_stream(opts.seed, stream::POLICY);
    let mut rng_track = derive_stream(opts.seed, stream::TRACK);
    let mut rng_noise = derive_stream(opts.seed, stream::NOISE);

    let mut records = Vec::with_capacity(opts.episodes);
    for episode in 0..opts.episodes {
        let scenario = opts.scenarios[episode % opts.scenarios.len()];
        let mut world = build_track(tracks.spec_for(scenario), &mut rng_track)?;
        let (mut s_t, _) = perceive(&world, camera, &opts.noise, &mut rng_noise);
        let mut steps = Vec::new();
        let mut total_distance = 0.0;
        let outcome = loop {
            let (action, _) = agent.select_action(&s_t, 1.0, &mut rng_policy);
            let m = run_decision_period(&mut world, action);
            let (s_next, input_map) = perceive(&world, camera, &opts.noise, &mut rng_noise);
            let r = reward(&m, &input_map, reward_cfg);
            let timeout = steps.len() as u32 + 1 >= EPISODE_CAP;
            let outcome = episode_outcome(&world, &m, timeout);

            // Read-only TD diagnostic mirroring the learning rule.
            let a_next = agent.action_posterior(&s_next).argmax();
            let next_posterior = agent.component_posterior(&s_next, a_next);
            let m_next =
                crate::mixture::ComponentId(crate::agent::argmax_index(&next_posterior));
            let (m_t, _) = agent.mixture().nearest_component(s_t.as_slice())?;
            let td = agent.td_error(r, action, m_t, a_next, m_next, outcome.is_some())?;

            total_distance += m.distance_delta;
            steps.push(EpisodeStep {
                state: s_t,
                action,
                reward: r,
                measures: m,
                td_error: td,
                n_components: agent.n_components(),
            });
            match outcome {
                Some(o) => break o,
                None => s_t = s_next,
            }
        };
        records.push(EpisodeRecord {
            steps,
            outcome,
            total_distance,
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_cfg(t_max: u32) -> AgentConfig {
        AgentConfig {
            t_max,
            ..AgentConfig::default()
        }
    }

    #[test]
    fn training_is_deterministic_per_seed() {
        let mut a = Trainer::new(quick_cfg(40), TrainSetup::new(7)).unwrap();
        let mut b = Trainer::new(quick_cfg(40), TrainSetup::new(7)).unwrap();
        a.run_to_completion().unwrap();
        b.run_to_completion().unwrap();
        assert_eq!(a.log(), b.log());
        assert_eq!(a.agent().q(), b.agent().q());
        assert_eq!(a.agent().mixture(), b.agent().mixture());

        let mut c = Trainer::new(quick_cfg(40), TrainSetup::new(8)).unwrap();
        c.run_to_completion().unwrap();
        assert_ne!(a.log(), c.log());
    }

    #[test]
    fn schedules_advance_once_per_decision() {
        let cfg = quick_cfg(10);
        let mut t = Trainer::new(cfg.clone(), TrainSetup::new(3)).unwrap();
        t.train_steps(10).unwrap();
        let mut expected = ScheduleState::initial(&cfg);
        for _ in 0..10 {
            expected.advance(&cfg);
        }
        assert_eq!(t.schedule(), expected);
        assert_eq!(t.step_count(), 10);
    }

    #[test]
    fn noise_changes_training_but_not_policy_stream() {
        let mut clean = Trainer::new(quick_cfg(30), TrainSetup::new(5)).unwrap();
        let noise = NoiseConfig::new(0.1, 0.0, 9).unwrap();
        let mut noisy =
            Trainer::new(quick_cfg(30), TrainSetup::new(5).with_noise(Some(noise))).unwrap();
        clean.run_to_completion().unwrap();
        noisy.run_to_completion().unwrap();
        // Same master seed, different perception pipeline: different models.
        assert_ne!(clean.agent().mixture(), noisy.agent().mixture());
    }

    #[test]
    fn training_log_grows_one_row_per_step() {
        let mut t = Trainer::new(quick_cfg(25), TrainSetup::new(1)).unwrap();
        t.run_to_completion().unwrap();
        assert_eq!(t.log().len(), 25);
        for (i, row) in t.log().iter().enumerate() {
            assert_eq!(row.step, i as u64);
            assert_eq!(row.n_components, row.n_components.max(1));
        }
    }

    #[test]
    fn evaluation_mutates_nothing_and_is_deterministic() {
        let mut t = Trainer::new(quick_cfg(60), TrainSetup::new(11)).unwrap();
        t.run_to_completion().unwrap();
        let agent = t.agent().clone();
        let opts = EvalOptions::new(3, 123);
        let before_q = agent.q().clone();
        let before_mix = agent.mixture().clone();
        let r1 = evaluate(
            &agent,
            &t.config().reward,
            &t.setup().tracks,
            &t.setup().camera,
            &opts,
        )
        .unwrap();
        let r2 = evaluate(
            &agent,
            &t.config().reward,
            &t.setup().tracks,
            &t.setup().camera,
            &opts,
        )
        .unwrap();
        assert_eq!(r1, r2);
        assert_eq!(agent.q(), &before_q);
        assert_eq!(agent.mixture(), &before_mix);
        assert_eq!(r1.len(), 3);
        for rec in &r1 {
            assert!(!rec.steps.is_empty());
            let sum: f64 = rec.steps.iter().map(|s| s.measures.distance_delta).sum();
            assert!((rec.total_distance - sum).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_episode_evaluation_is_rejected() {
        let t = Trainer::new(quick_cfg(5), TrainSetup::new(2)).unwrap();
        let opts = EvalOptions::new(0, 1);
        let err = evaluate(
            t.agent(),
            &t.config().reward,
            &t.setup().tracks,
            &t.setup().camera,
            &opts,
        )
        .unwrap_err();
        assert!(matches!(err, HarnessError::NoEpisodes));
    }

    #[test]
    fn scenario_rotation_cycles() {
        let mut t = Trainer::new(
            quick_cfg(u32::MAX),
            TrainSetup::new(3).with_scenarios(vec![Scenario::Straight, Scenario::RightTurn]),
        )
        .unwrap();
        assert_eq!(t.episode.world.spec.scenario, Scenario::Straight);
        let first_episode = t.episode.episode_index;
        // Drive until the first episode ends.
        while t.episode.episode_index == first_episode {
            t.train_steps(1).unwrap();
        }
        assert_eq!(t.episode.world.spec.scenario, Scenario::RightTurn);
    }
}
