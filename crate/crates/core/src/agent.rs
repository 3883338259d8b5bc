//! Bayesian RL decision core.
//!
//! Combines the mixture's predictive likelihoods with a growing state-action
//! value table: action and component posteriors, the additive Q offset that
//! makes table entries usable as probability weights, TD-error learning with
//! thresholded soft-update weights, and the temperature behavior policy.
//!
//! All likelihood arithmetic runs in log space and is shifted by the maximum
//! before exponentiation; whenever a distribution's unnormalized masses are
//! all zero it falls back to uniform.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mixture::{ComponentId, Mixture, MixtureError};
use crate::state::{Action, StateVector, NUM_ACTIONS};

#[derive(Debug, Error, PartialEq)]
pub enum AgentError {
    #[error("Q-table is empty")]
    EmptyTable,
    #[error(transparent)]
    Mixture(#[from] MixtureError),
    #[error("agent is already bootstrapped")]
    AlreadyBootstrapped,
    #[error("agent has no components; bootstrap it first")]
    NotBootstrapped,
}

/// State-action value matrix, one row per mixture component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct QTable {
    rows: Vec<[f64; NUM_ACTIONS]>,
}

impl QTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push_zero_row(&mut self) {
        self.rows.push([0.0; NUM_ACTIONS]);
    }

    pub fn get(&self, m: ComponentId, a: Action) -> Result<f64, AgentError> {
        self.rows
            .get(m.index())
            .map(|r| r[a.index()])
            .ok_or(AgentError::Mixture(MixtureError::UnknownComponent(m)))
    }

    pub fn set(&mut self, m: ComponentId, a: Action, value: f64) -> Result<(), AgentError> {
        let row = self
            .rows
            .get_mut(m.index())
            .ok_or(AgentError::Mixture(MixtureError::UnknownComponent(m)))?;
        row[a.index()] = value;
        Ok(())
    }

    pub fn rows(&self) -> &[[f64; NUM_ACTIONS]] {
        &self.rows
    }

    /// Smallest entry of the whole table.
    pub fn min_value(&self) -> Option<f64> {
        self.rows
            .iter()
            .flat_map(|r| r.iter().copied())
            .fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.min(v))))
    }
}

/// Additive offset making every table entry non-negative:
/// `|min Q| / (1 + |min Q|) - min Q`.
pub fn q_offset(q: &QTable) -> Result<f64, AgentError> {
    let min = q.min_value().ok_or(AgentError::EmptyTable)?;
    Ok(min.abs() / (1.0 + min.abs()) - min)
}

/// Probability distribution over the four actions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionDistribution([f64; NUM_ACTIONS]);

impl ActionDistribution {
    pub fn new(probs: [f64; NUM_ACTIONS]) -> Self {
        debug_assert!(probs.iter().all(|p| *p >= 0.0));
        debug_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        Self(probs)
    }

    pub fn uniform() -> Self {
        Self([1.0 / NUM_ACTIONS as f64; NUM_ACTIONS])
    }

    pub fn probs(&self) -> &[f64; NUM_ACTIONS] {
        &self.0
    }

    pub fn prob(&self, a: Action) -> f64 {
        self.0[a.index()]
    }

    /// Most probable action; ties break toward the fixed action order.
    pub fn argmax(&self) -> Action {
        let mut best = Action::Forward;
        let mut best_p = self.0[0];
        for a in Action::ALL.into_iter().skip(1) {
            let p = self.0[a.index()];
            if p > best_p {
                best = a;
                best_p = p;
            }
        }
        best
    }

    /// Samples one action, consuming exactly one uniform draw.
    pub fn sample(&self, rng: &mut impl Rng) -> Action {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for a in Action::ALL {
            acc += self.0[a.index()];
            if u < acc {
                return a;
            }
        }
        Action::Backward
    }
}

/// Which branch of the thresholded update-weight rule fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightCase {
    /// TD error above the upper threshold (good decision).
    Upper,
    /// TD error below the lower threshold (bad decision).
    Lower,
    /// TD error between the thresholds.
    Middle,
}

/// Classifies a TD error against the two thresholds.
pub fn weight_case(td: f64, t_lower: f64, t_upper: f64) -> WeightCase {
    if td > t_upper {
        WeightCase::Upper
    } else if td < t_lower {
        WeightCase::Lower
    } else {
        WeightCase::Middle
    }
}

/// Per-decision record of what one learning step did.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub td_error: f64,
    pub weight_case: WeightCase,
    /// Update weight `w`; absent on the creation branch.
    pub weight: Option<f64>,
    /// Id of the component created this step, if any.
    pub created_component: Option<ComponentId>,
    /// The action that was actually performed.
    pub chosen_action: Action,
    /// Greedy action at the successor state (the TD bootstrap action).
    pub greedy_action: Action,
    /// l-infinity distance from the decision state to its nearest component.
    pub d_t: f64,
}

/// Current values of the decaying parameters, as seen by one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleValues {
    pub alpha: f64,
    pub tau: f64,
    pub rho: f64,
}

/// The learning agent: mixture, Q-table and the fixed scalar parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesianAgent {
    mixture: Mixture,
    q: QTable,
    gamma: f64,
    t_lower: f64,
    t_upper: f64,
}

impl BayesianAgent {
    pub fn new(mixture: Mixture, gamma: f64, t_lower: f64, t_upper: f64) -> Self {
        let mut q = QTable::new();
        for _ in 0..mixture.len() {
            q.push_zero_row();
        }
        Self {
            mixture,
            q,
            gamma,
            t_lower,
            t_upper,
        }
    }

    /// Rebuilds an agent from checkpointed parts.
    pub fn from_parts(
        mixture: Mixture,
        q: QTable,
        gamma: f64,
        t_lower: f64,
        t_upper: f64,
    ) -> Self {
        assert_eq!(mixture.len(), q.n_rows(), "Q rows must match mixture size");
        Self {
            mixture,
            q,
            gamma,
            t_lower,
            t_upper,
        }
    }

    /// Creates the first component, centered at the initial state.
    pub fn bootstrap(&mut self, s0: &StateVector) -> Result<ComponentId, AgentError> {
        if !self.mixture.is_empty() {
            return Err(AgentError::AlreadyBootstrapped);
        }
        Ok(self.add_component(s0))
    }

    pub fn mixture(&self) -> &Mixture {
        &self.mixture
    }

    pub fn q(&self) -> &QTable {
        &self.q
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn t_lower(&self) -> f64 {
        self.t_lower
    }

    pub fn t_upper(&self) -> f64 {
        self.t_upper
    }

    pub fn n_components(&self) -> usize {
        self.mixture.len()
    }

    /// Appends a component centered at `s` together with its zero Q row,
    /// keeping the table and the mixture in lockstep.
    pub fn add_component(&mut self, s: &StateVector) -> ComponentId {
        let id = self.mixture.create_component(s.as_slice());
        self.q.push_zero_row();
        id
    }

    /// Writes one Q cell directly (checkpoint surgery and test setup).
    pub fn set_q(&mut self, m: ComponentId, a: Action, value: f64) -> Result<(), AgentError> {
        self.q.set(m, a, value)
    }

    /// Shifted likelihood weights `exp(loglik - max loglik)`, in id order.
    fn likelihood_weights(&self, s: &StateVector) -> Vec<f64> {
        let logliks = self.mixture.logliks(s.as_slice());
        let max = logliks.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        logliks.iter().map(|l| (l - max).exp()).collect()
    }

    /// Column of `p(m|a)`: table entries plus offset, normalized over
    /// components; uniform when the column mass is zero.
    fn component_given_action(&self, offset: f64, a: Action) -> Vec<f64> {
        let n = self.q.n_rows();
        let mut col: Vec<f64> = self
            .q
            .rows()
            .iter()
            .map(|row| row[a.index()] + offset)
            .collect();
        let total: f64 = col.iter().sum();
        if total > 0.0 {
            for v in col.iter_mut() {
                *v /= total;
            }
        } else {
            col = vec![1.0 / n as f64; n];
        }
        col
    }

    /// Marginal action probabilities `p(a)` from offset column sums;
    /// uniform when the whole table mass is zero.
    fn action_prior(&self, offset: f64) -> [f64; NUM_ACTIONS] {
        let mut prior = [0.0; NUM_ACTIONS];
        for row in self.q.rows() {
            for (a, p) in prior.iter_mut().enumerate() {
                *p += row[a] + offset;
            }
        }
        let total: f64 = prior.iter().sum();
        if total > 0.0 {
            for p in prior.iter_mut() {
                *p /= total;
            }
        } else {
            prior = [1.0 / NUM_ACTIONS as f64; NUM_ACTIONS];
        }
        prior
    }

    /// Marginal component probabilities `p(m)` from offset row sums;
    /// uniform when the whole table mass is zero.
    fn component_prior(&self, offset: f64) -> Vec<f64> {
        let n = self.q.n_rows();
        let mut prior: Vec<f64> = self
            .q
            .rows()
            .iter()
            .map(|row| row.iter().map(|q| q + offset).sum())
            .collect();
        let total: f64 = prior.iter().sum();
        if total > 0.0 {
            for p in prior.iter_mut() {
                *p /= total;
            }
        } else {
            prior = vec![1.0 / n as f64; n];
        }
        prior
    }

    fn normalized_or_uniform(mut masses: Vec<f64>) -> Vec<f64> {
        let total: f64 = masses.iter().sum();
        if total > 0.0 {
            for v in masses.iter_mut() {
                *v /= total;
            }
            masses
        } else {
            let n = masses.len();
            vec![1.0 / n as f64; n]
        }
    }

    /// Posterior action distribution `p(a|s)`.
    pub fn action_posterior(&self, s: &StateVector) -> ActionDistribution {
        debug_assert!(!self.mixture.is_empty(), "agent not bootstrapped");
        let weights = self.likelihood_weights(s);
        let offset = q_offset(&self.q).expect("non-empty table");
        let prior = self.action_prior(offset);
        let mut masses = [0.0; NUM_ACTIONS];
        for a in Action::ALL {
            let col = self.component_given_action(offset, a);
            let mix_term: f64 = weights.iter().zip(col.iter()).map(|(l, p)| l * p).sum();
            masses[a.index()] = prior[a.index()] * mix_term;
        }
        let total: f64 = masses.iter().sum();
        if total > 0.0 {
            for m in masses.iter_mut() {
                *m /= total;
            }
            ActionDistribution::new(masses)
        } else {
            ActionDistribution::uniform()
        }
    }

    /// Component posterior `p(m|a,s)` proportional to likelihood times
    /// `p(m|a)`. Falls back to likelihood-only, then uniform, on zero mass.
    pub fn component_posterior(&self, s: &StateVector, a: Action) -> Vec<f64> {
        debug_assert!(!self.mixture.is_empty(), "agent not bootstrapped");
        let weights = self.likelihood_weights(s);
        let offset = q_offset(&self.q).expect("non-empty table");
        let col = self.component_given_action(offset, a);
        let masses: Vec<f64> = weights.iter().zip(col.iter()).map(|(l, p)| l * p).collect();
        if masses.iter().sum::<f64>() > 0.0 {
            Self::normalized_or_uniform(masses)
        } else {
            Self::normalized_or_uniform(weights)
        }
    }

    /// Complement posterior `p(m|not a, s)` proportional to likelihood
    /// times `(1 - p(m|a))`. A single-component mixture degenerates to the
    /// uniform (that is, certain) distribution.
    pub fn component_posterior_not(&self, s: &StateVector, a: Action) -> Vec<f64> {
        debug_assert!(!self.mixture.is_empty(), "agent not bootstrapped");
        let weights = self.likelihood_weights(s);
        let offset = q_offset(&self.q).expect("non-empty table");
        let col = self.component_given_action(offset, a);
        let masses: Vec<f64> = weights
            .iter()
            .zip(col.iter())
            .map(|(l, p)| l * (1.0 - p).max(0.0))
            .collect();
        Self::normalized_or_uniform(masses)
    }

    /// State-conditional component posterior `p(m|s)` proportional to
    /// likelihood times the Q-mass component prior.
    pub fn component_posterior_state(&self, s: &StateVector) -> Vec<f64> {
        debug_assert!(!self.mixture.is_empty(), "agent not bootstrapped");
        let weights = self.likelihood_weights(s);
        let offset = q_offset(&self.q).expect("non-empty table");
        let prior = self.component_prior(offset);
        let masses: Vec<f64> = weights
            .iter()
            .zip(prior.iter())
            .map(|(l, p)| l * p)
            .collect();
        if masses.iter().sum::<f64>() > 0.0 {
            Self::normalized_or_uniform(masses)
        } else {
            Self::normalized_or_uniform(weights)
        }
    }

    /// TD error `r + gamma * Q(m', a') - Q(m, a)`; the bootstrap term is
    /// dropped on terminal transitions.
    pub fn td_error(
        &self,
        r: f64,
        a_t: Action,
        m_t: ComponentId,
        a_next: Action,
        m_next: ComponentId,
        terminal: bool,
    ) -> Result<f64, AgentError> {
        let current = self.q.get(m_t, a_t)?;
        let bootstrap = if terminal {
            // Validate the id even though the value is unused.
            self.q.get(m_next, a_next)?;
            0.0
        } else {
            self.gamma * self.q.get(m_next, a_next)?
        };
        Ok(r + bootstrap - current)
    }

    /// Soft-update weight for the Q step, chosen by the TD-error case.
    pub fn update_weight(
        &self,
        td: f64,
        s: &StateVector,
        a_t: Action,
        m_t: ComponentId,
    ) -> (f64, WeightCase) {
        let case = weight_case(td, self.t_lower, self.t_upper);
        let posterior = match case {
            WeightCase::Upper => self.component_posterior(s, a_t),
            WeightCase::Lower => self.component_posterior_not(s, a_t),
            WeightCase::Middle => self.component_posterior_state(s),
        };
        (posterior[m_t.index()], case)
    }

    /// Applies the Q-learning update to exactly one cell.
    pub fn q_update(
        &mut self,
        m_t: ComponentId,
        a_t: Action,
        alpha: f64,
        w: f64,
        td: f64,
    ) -> Result<(), AgentError> {
        debug_assert!((0.0..=1.0).contains(&alpha), "alpha out of range");
        debug_assert!((0.0..=1.0).contains(&w), "weight out of range");
        let current = self.q.get(m_t, a_t)?;
        self.q.set(m_t, a_t, current + alpha * w * td)
    }

    /// Behavior policy: greedy action gets `(1-tau)/|A| + tau` mass, every
    /// other action `(1-tau)/|A|`; returns the sampled action and the
    /// distribution it was drawn from.
    pub fn select_action(
        &self,
        s: &StateVector,
        tau: f64,
        rng: &mut impl Rng,
    ) -> (Action, ActionDistribution) {
        debug_assert!((0.0..=1.0).contains(&tau), "tau out of range");
        let greedy = self.action_posterior(s).argmax();
        let base = (1.0 - tau) / NUM_ACTIONS as f64;
        let mut probs = [base; NUM_ACTIONS];
        probs[greedy.index()] += tau;
        let dist = ActionDistribution::new(probs);
        (dist.sample(rng), dist)
    }

    /// One full learning step for the transition
    /// `(s_t, a_t, r_t, s_next, terminal)` under the current schedules.
    pub fn step(
        &mut self,
        s_t: &StateVector,
        a_t: Action,
        r_t: f64,
        s_next: &StateVector,
        terminal: bool,
        sched: ScheduleValues,
    ) -> Result<StepDiagnostics, AgentError> {
        if self.mixture.is_empty() {
            return Err(AgentError::NotBootstrapped);
        }
        // Greedy successor action, then the most likely successor component.
        let a_next = self.action_posterior(s_next).argmax();
        let next_posterior = self.component_posterior(s_next, a_next);
        let m_next = ComponentId(argmax_index(&next_posterior));
        // Closest component to the decision state, and its distance.
        let (m_t, d_t) = self.mixture.nearest_component(s_t.as_slice())?;
        let td = self.td_error(r_t, a_t, m_t, a_next, m_next, terminal)?;

        if d_t < sched.rho || td > self.t_lower {
            let (w, case) = self.update_weight(td, s_t, a_t, m_t);
            self.mixture.update_component(m_t, s_t.as_slice(), 1.0)?;
            self.q_update(m_t, a_t, sched.alpha, w, td)?;
            Ok(StepDiagnostics {
                td_error: td,
                weight_case: case,
                weight: Some(w),
                created_component: None,
                chosen_action: a_t,
                greedy_action: a_next,
                d_t,
            })
        } else {
            let created = self.add_component(s_t);
            Ok(StepDiagnostics {
                td_error: td,
                weight_case: weight_case(td, self.t_lower, self.t_upper),
                weight: None,
                created_component: Some(created),
                chosen_action: a_t,
                greedy_action: a_next,
                d_t,
            })
        }
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax_index(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}
