//! Decision-making agents: tabular control learners and the responsive policy.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{Action, EnvConfig};
use crate::error::{Error, Result};
use crate::rng::SimRng;

/// Traces that decay below this are dropped from the active set.
pub const TRACE_FLOOR: f64 = 1e-12;

const NUM_ACTIONS: usize = 3;

/// The agent's view of one step: position, hazard bit, heat level (in
/// multiples of the heat rate) and the co-agent's token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AgentStateIndex {
    pub position: usize,
    pub hazard: bool,
    pub heat_level: usize,
    pub token: bool,
}

/// Shape of the tabular state space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateSpace {
    pub num_locations: usize,
    pub heat_levels: usize,
}

impl StateSpace {
    pub fn for_env(cfg: &EnvConfig) -> Self {
        Self {
            num_locations: cfg.num_locations,
            heat_levels: cfg.heat_levels(),
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_locations * 2 * self.heat_levels * 2
    }

    pub fn encode(&self, s: &AgentStateIndex) -> usize {
        debug_assert!(s.position < self.num_locations && s.heat_level < self.heat_levels);
        ((s.position * 2 + s.hazard as usize) * self.heat_levels + s.heat_level) * 2 + s.token as usize
    }

    pub fn decode(&self, index: usize) -> AgentStateIndex {
        let token = index % 2 == 1;
        let rest = index / 2;
        let heat_level = rest % self.heat_levels;
        let rest = rest / self.heat_levels;
        AgentStateIndex {
            position: rest / 2,
            hazard: rest % 2 == 1,
            heat_level,
            token,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlAlgorithm {
    ExpectedSarsa,
    Sarsa,
    QLearning,
}

impl ControlAlgorithm {
    pub const ALL: [ControlAlgorithm; 3] = [Self::ExpectedSarsa, Self::Sarsa, Self::QLearning];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::ExpectedSarsa => "expected_sarsa",
            Self::Sarsa => "sarsa",
            Self::QLearning => "q_learning",
        }
    }
}

impl fmt::Display for ControlAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ControlAlgorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "expected_sarsa" | "expected-sarsa" => Ok(Self::ExpectedSarsa),
            "sarsa" => Ok(Self::Sarsa),
            "q_learning" | "q-learning" => Ok(Self::QLearning),
            other => Err(Error::config(
                "agent.kind",
                format!("unknown algorithm `{other}` (expected expected_sarsa|sarsa|q_learning)"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlConfig {
    pub algorithm: ControlAlgorithm,
    pub alpha: f64,
    pub epsilon: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub optimistic_init: f64,
}

impl Default for ControlConfig {
    fn default() -> Self {
        Self {
            algorithm: ControlAlgorithm::ExpectedSarsa,
            alpha: 0.01,
            epsilon: 0.1,
            gamma: 0.99,
            lambda: 0.3,
            optimistic_init: 1.0,
        }
    }
}

impl ControlConfig {
    pub fn with(algorithm: ControlAlgorithm, epsilon: f64) -> Self {
        Self {
            algorithm,
            epsilon,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::config("agent.epsilon", format!("{} not in [0, 1]", self.epsilon)));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::config("agent.gamma", format!("{} not in [0, 1]", self.gamma)));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::config("agent.lambda", format!("{} not in [0, 1]", self.lambda)));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::config("agent.alpha", "must be positive"));
        }
        if !self.optimistic_init.is_finite() {
            return Err(Error::config("agent.init", "must be finite"));
        }
        Ok(())
    }
}

/// Tabular action-value learner with accumulating eligibility traces and
/// ε-greedy exploration.
///
/// Traces are stored densely but only the entries in `active` are non-zero,
/// so an update touches the recently visited state-action pairs only.
#[derive(Debug, Clone)]
pub struct ControlLearner {
    config: ControlConfig,
    space: StateSpace,
    weights: Vec<f64>,
    traces: Vec<f64>,
    active: Vec<usize>,
    rng: SimRng,
}

impl ControlLearner {
    pub fn new(config: ControlConfig, space: StateSpace, rng: SimRng) -> Result<Self> {
        config.validate()?;
        let n = space.num_states() * NUM_ACTIONS;
        Ok(Self {
            weights: vec![config.optimistic_init; n],
            traces: vec![0.0; n],
            active: Vec::new(),
            config,
            space,
            rng,
        })
    }

    pub fn config(&self) -> &ControlConfig {
        &self.config
    }

    pub fn space(&self) -> StateSpace {
        self.space
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn q_values(&self, s: usize) -> &[f64] {
        &self.weights[s * NUM_ACTIONS..(s + 1) * NUM_ACTIONS]
    }

    pub fn q_values_mut(&mut self, s: usize) -> &mut [f64] {
        &mut self.weights[s * NUM_ACTIONS..(s + 1) * NUM_ACTIONS]
    }

    pub fn trace(&self, s: usize, a: Action) -> f64 {
        self.traces[s * NUM_ACTIONS + a.index()]
    }

    /// ε-greedy with uniform tie-breaking among exactly equal maxima.
    pub fn select_action(&mut self, s: usize) -> Action {
        if self.rng.gen::<f64>() < self.config.epsilon {
            return Action::from_index(self.rng.gen_range(0..NUM_ACTIONS));
        }
        let q = self.q_values(s);
        let max = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut ties = [0usize; NUM_ACTIONS];
        let mut n = 0;
        for (i, &v) in q.iter().enumerate() {
            if v == max {
                ties[n] = i;
                n += 1;
            }
        }
        let pick = if n == 1 { ties[0] } else { ties[self.rng.gen_range(0..n)] };
        Action::from_index(pick)
    }

    /// Probabilities of the current ε-greedy policy in state `s`; greedy mass
    /// is shared equally among tied maxima.
    pub fn policy_probs(&self, s: usize) -> [f64; NUM_ACTIONS] {
        let q = self.q_values(s);
        let eps = self.config.epsilon;
        let max = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let ties = q.iter().filter(|&&v| v == max).count() as f64;
        let mut p = [eps / NUM_ACTIONS as f64; NUM_ACTIONS];
        for (pi, &v) in p.iter_mut().zip(q) {
            if v == max {
                *pi += (1.0 - eps) / ties;
            }
        }
        p
    }

    fn bootstrap(&self, s_next: usize, a_next: Action) -> f64 {
        let q = self.q_values(s_next);
        match self.config.algorithm {
            ControlAlgorithm::ExpectedSarsa => {
                let p = self.policy_probs(s_next);
                p.iter().zip(q).map(|(pi, qi)| pi * qi).sum()
            }
            ControlAlgorithm::Sarsa => q[a_next.index()],
            ControlAlgorithm::QLearning => q.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// Learns from `(s, a, r, s_next, a_next)`. A terminal transition
    /// bootstraps from zero and clears the traces afterwards.
    pub fn control_update(
        &mut self,
        s: usize,
        a: Action,
        reward: f64,
        s_next: usize,
        a_next: Action,
        terminal: bool,
    ) -> f64 {
        let target = if terminal { 0.0 } else { self.bootstrap(s_next, a_next) };
        let idx = s * NUM_ACTIONS + a.index();
        if self.traces[idx] == 0.0 {
            self.active.push(idx);
        }
        self.traces[idx] += 1.0;
        let delta = reward + self.config.gamma * target - self.weights[idx];

        let step = self.config.alpha * delta;
        let decay = self.config.gamma * self.config.lambda;
        let mut i = 0;
        while i < self.active.len() {
            let j = self.active[i];
            self.weights[j] += step * self.traces[j];
            let e = self.traces[j] * decay;
            if e < TRACE_FLOOR {
                self.traces[j] = 0.0;
                self.active.swap_remove(i);
            } else {
                self.traces[j] = e;
                i += 1;
            }
        }
        if terminal {
            self.reset_traces();
        }
        delta
    }

    pub fn reset_traces(&mut self) {
        for j in self.active.drain(..) {
            self.traces[j] = 0.0;
        }
    }
}

/// Hard-coded policy that trusts the token: shelter when it is on, head for
/// the heat source when it is off. Ties at the heat source go left.
pub fn responsive_policy(token: bool, position: usize, env: &EnvConfig) -> Action {
    if token {
        if !env.in_hazard_region(position) {
            Action::Stay
        } else if position <= env.heat_location {
            Action::Left
        } else {
            Action::Right
        }
    } else {
        match position.cmp(&env.heat_location) {
            std::cmp::Ordering::Less => Action::Right,
            std::cmp::Ordering::Equal => Action::Stay,
            std::cmp::Ordering::Greater => Action::Left,
        }
    }
}
