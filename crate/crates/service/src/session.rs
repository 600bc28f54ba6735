//! One live play session: simulation state, the pending action and the log.

use frost_core::coagent::CoAgentKind;
use frost_core::env::{Action, EnvConfig};
use frost_core::gvf::GvfSpec;
use frost_harness::presets::{self, Timescale};
use frost_harness::{HarnessError, StepTrace, Stepper};

use crate::protocol::{CoAgentChoice, SessionConfig, StateMsg};

impl SessionConfig {
    pub fn env_config(&self) -> EnvConfig {
        presets::env(self.condition, Timescale::Short, self.heat_capacity)
    }

    pub fn coagent_kind(&self) -> CoAgentKind {
        match self.coagent {
            CoAgentChoice::None => CoAgentKind::None,
            CoAgentChoice::Oracle => CoAgentKind::Oracle,
            CoAgentChoice::Pavlovian => CoAgentKind::pavlovian(
                presets::repr(self.repr, Timescale::Short),
                GvfSpec::of_kind(self.gvf).with_alpha(self.alpha_gvf),
            ),
        }
    }

    /// Sessions with equal keys can share learned co-agent weights.
    pub fn weights_key(&self) -> String {
        serde_json::to_string(&(self.condition, self.coagent_kind())).expect("serializable")
    }
}

#[derive(Debug, Clone)]
pub struct Session {
    id: String,
    config: SessionConfig,
    stepper: Stepper,
    pending: Action,
    score: u32,
    trace: Vec<StepTrace>,
}

impl Session {
    /// Builds a session, optionally seeding the co-agent with stored weights.
    pub fn new(
        id: String,
        config: SessionConfig,
        weights: Option<&[f64]>,
    ) -> Result<Self, HarnessError> {
        let mut stepper = Stepper::new(config.env_config(), &config.coagent_kind(), config.seed)?;
        if let (Some(w), Some(p)) = (weights, stepper.simulation_mut().coagent_mut().pavlovian_mut()) {
            p.learner_mut().set_weights(w)?;
        }
        Ok(Self {
            id,
            stepper,
            pending: Action::Stay,
            score: 0,
            trace: Vec::with_capacity(config.duration_steps as usize),
            config,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn score(&self) -> u32 {
        self.score
    }

    pub fn ticks(&self) -> u32 {
        self.stepper.steps_taken()
    }

    pub fn is_finished(&self) -> bool {
        self.ticks() >= self.config.duration_steps
    }

    pub fn trace(&self) -> &[StepTrace] {
        &self.trace
    }

    pub fn pending(&self) -> Action {
        self.pending
    }

    /// Last write wins until the next tick consumes it.
    pub fn set_pending(&mut self, action: Action) {
        self.pending = action;
    }

    pub fn coagent_weights(&self) -> Option<Vec<f64>> {
        self.stepper
            .simulation()
            .coagent()
            .pavlovian()
            .map(|p| p.learner().weights().to_vec())
    }

    /// Advances one step with the pending action, which then reverts to stay.
    pub fn tick(&mut self) -> Result<StateMsg, HarnessError> {
        let action = std::mem::replace(&mut self.pending, Action::Stay);
        let row = self.stepper.step(action)?;
        self.score += row.reward;
        self.trace.push(row);
        Ok(StateMsg {
            t: row.step,
            position: row.position,
            hazard: row.presence,
            token: row.token,
            heat: row.heat,
            score: self.score,
            reward: row.reward,
        })
    }
}
