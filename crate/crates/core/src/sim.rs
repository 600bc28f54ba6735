//! Environment plus co-agent, stepped in the order the agent sees them.

use crate::agents::AgentStateIndex;
use crate::coagent::{CoAgent, CoAgentKind, TokenRecord};
use crate::env::{Action, Env, EnvConfig, Observation};
use crate::error::Result;
use crate::rng::SimRng;

/// Result of the first half of a step: the hazard has advanced and the
/// co-agent has spoken, but the player has not moved yet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreStep {
    pub step: u64,
    pub hazard_active: bool,
    pub token: TokenRecord,
    pub state: AgentStateIndex,
    pub heat: f64,
}

#[derive(Debug, Clone)]
pub struct Simulation {
    env: Env,
    coagent: CoAgent,
    peek: bool,
    pending: bool,
}

impl Simulation {
    pub fn new(env: EnvConfig, coagent: &CoAgentKind, env_rng: SimRng) -> Result<Self> {
        coagent.validate(env.hazard.max_isi())?;
        Ok(Self {
            env: Env::new(env, env_rng)?,
            coagent: CoAgent::new(coagent)?,
            peek: coagent.needs_peek(),
            pending: false,
        })
    }

    pub fn env(&self) -> &Env {
        &self.env
    }

    pub fn coagent(&self) -> &CoAgent {
        &self.coagent
    }

    pub fn coagent_mut(&mut self) -> &mut CoAgent {
        &mut self.coagent
    }

    /// Advances the hazard and queries the co-agent. Only the oracle is given
    /// the steps-to-onset peek.
    pub fn begin_step(&mut self) -> Result<PreStep> {
        assert!(!self.pending, "begin_step called twice without finish_step");
        let hazard_active = self.env.advance_hazard();
        let peek = self.peek.then(|| self.env.steps_to_next_onset());
        let step = self.env.state().step;
        let token = self.coagent.step(step, hazard_active, peek)?;
        self.pending = true;
        let st = self.env.state();
        Ok(PreStep {
            step,
            hazard_active,
            token,
            state: AgentStateIndex {
                position: st.position,
                hazard: hazard_active,
                heat_level: st.heat_level(),
                token: token.token,
            },
            heat: st.heat(),
        })
    }

    /// Moves the player and resolves the rest of the step.
    pub fn finish_step(&mut self, action: Action) -> Observation {
        assert!(self.pending, "finish_step called without begin_step");
        self.pending = false;
        self.env.apply_action(action)
    }

    pub fn reset_episode(&mut self) {
        self.pending = false;
        self.env.reset_episode();
        self.coagent.reset_episode();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Stream};

    #[test]
    fn oracle_token_leads_onset_by_three() {
        let mut sim = Simulation::new(
            EnvConfig::default(),
            &CoAgentKind::Oracle,
            substream(5, Stream::Env),
        )
        .unwrap();
        let mut rows = Vec::new();
        for _ in 0..40 {
            let pre = sim.begin_step().unwrap();
            rows.push((pre.hazard_active, pre.token.token));
            sim.finish_step(Action::Stay);
        }
        for (i, &(h, tok)) in rows.iter().enumerate().take(rows.len() - 3) {
            let onset_soon = rows[i + 1..=i + 3].iter().any(|r| r.0);
            assert_eq!(tok, h || onset_soon, "row {i}");
        }
    }

    #[test]
    fn observed_state_precedes_the_move() {
        let mut sim =
            Simulation::new(EnvConfig::default(), &CoAgentKind::None, substream(1, Stream::Env))
                .unwrap();
        let pre = sim.begin_step().unwrap();
        assert_eq!(pre.state.position, 3);
        assert_eq!(pre.state.heat_level, 0);
        let obs = sim.finish_step(Action::Stay);
        assert!(obs.gained);
        let pre = sim.begin_step().unwrap();
        assert_eq!(pre.state.heat_level, 1);
        assert_eq!(pre.step, 1);
    }
}
