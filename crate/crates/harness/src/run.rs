//! The experiment loop.

use frost_core::agents::{responsive_policy, ControlLearner, StateSpace};
use frost_core::coagent::CoAgentKind;
use frost_core::env::{Action, EnvConfig};
use frost_core::rng::{self, Stream};
use frost_core::sim::{PreStep, Simulation};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{AgentKind, RunConfig, TraceDetail};
use crate::error::Result;

/// One simulation step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepTrace {
    pub seed: u32,
    pub episode: u32,
    pub step: u32,
    pub presence: bool,
    /// Position after the move.
    pub position: usize,
    pub action: Action,
    /// Heat after the step, following any strip or conversion.
    pub heat: f64,
    pub hit: bool,
    pub reward: u32,
    pub token: bool,
    pub prediction: f64,
    pub td_error_gvf: f64,
    /// Error of the control update for the transition leaving this step.
    pub td_error_control: f64,
}

impl StepTrace {
    pub const HEADER: [&'static str; 13] = [
        "seed",
        "episode",
        "step",
        "presence",
        "position",
        "action",
        "heat",
        "hit",
        "reward",
        "token",
        "prediction",
        "td_error_gvf",
        "td_error_control",
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub seed: u32,
    pub episode: u32,
    pub total_reward: u32,
    pub hit_steps: u32,
    pub heat_gained: f64,
    pub mean_abs_td_gvf: f64,
    pub token_rising_edges: u32,
}

impl EpisodeSummary {
    pub const HEADER: [&'static str; 7] = [
        "seed",
        "episode",
        "total_reward",
        "hit_steps",
        "heat_gained",
        "mean_abs_td_gvf",
        "token_rising_edges",
    ];
}

#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub summaries: Vec<EpisodeSummary>,
    /// Empty unless full traces were requested.
    pub traces: Vec<StepTrace>,
}

/// The player-side decision maker.
#[derive(Debug, Clone)]
pub enum Agent {
    Stay,
    Responsive,
    Control(Box<ControlLearner>),
}

impl Agent {
    pub fn new(kind: &AgentKind, env: &EnvConfig, rng: rng::SimRng) -> Result<Self> {
        Ok(match kind {
            AgentKind::Stay => Agent::Stay,
            AgentKind::Responsive => Agent::Responsive,
            AgentKind::Control(c) => {
                Agent::Control(Box::new(ControlLearner::new(c.clone(), StateSpace::for_env(env), rng)?))
            }
        })
    }

    pub fn select(&mut self, s: usize, pre: &PreStep, env: &EnvConfig) -> Action {
        match self {
            Agent::Stay => Action::Stay,
            Agent::Responsive => responsive_policy(pre.token.token, pre.state.position, env),
            Agent::Control(l) => l.select_action(s),
        }
    }

    pub fn learner(&self) -> Option<&ControlLearner> {
        match self {
            Agent::Control(l) => Some(l),
            _ => None,
        }
    }
}

#[derive(Debug, Default)]
struct EpisodeTally {
    reward: u32,
    hits: u32,
    gains: u32,
    abs_td: f64,
    steps: u32,
    rising: u32,
    prev_token: bool,
}

impl EpisodeTally {
    fn finish(&self, seed: u32, episode: u32, heat_rate: f64) -> EpisodeSummary {
        EpisodeSummary {
            seed,
            episode,
            total_reward: self.reward,
            hit_steps: self.hits,
            heat_gained: self.gains as f64 * heat_rate,
            mean_abs_td_gvf: if self.steps == 0 { 0.0 } else { self.abs_td / self.steps as f64 },
            token_rising_edges: self.rising,
        }
    }
}

/// Runs every episode of one seed. Each step row is passed to `sink` once its
/// control error is known, in step order.
pub fn run_seed(
    cfg: &RunConfig,
    seed: u32,
    mut sink: Option<&mut dyn FnMut(StepTrace)>,
) -> Result<Vec<EpisodeSummary>> {
    let rs = rng::run_seed(cfg.master_seed, seed as u64);
    let env_cfg = &cfg.env;
    let mut sim = Simulation::new(env_cfg.clone(), &cfg.coagent, rng::substream(rs, Stream::Env))?;
    let mut agent = Agent::new(&cfg.agent, env_cfg, rng::substream(rs, Stream::Agent))?;
    let space = StateSpace::for_env(env_cfg);
    let mut summaries = Vec::with_capacity(cfg.episodes as usize);

    for episode in 0..cfg.episodes {
        sim.reset_episode();
        if let Agent::Control(l) = &mut agent {
            l.reset_traces();
        }
        let mut tally = EpisodeTally::default();
        let mut prev: Option<(usize, Action, f64)> = None;
        let mut row: Option<StepTrace> = None;

        for step in 0..env_cfg.episode_length {
            let pre = sim.begin_step()?;
            let s = space.encode(&pre.state);
            let a = agent.select(s, &pre, env_cfg);
            let delta = match (&mut agent, prev) {
                (Agent::Control(l), Some((ps, pa, pr))) => l.control_update(ps, pa, pr, s, a, false),
                _ => 0.0,
            };
            if let (Some(sink), Some(mut r)) = (sink.as_deref_mut(), row.take()) {
                r.td_error_control = delta;
                sink(r);
            }
            let obs = sim.finish_step(a);

            tally.reward += obs.reward;
            tally.hits += obs.hit as u32;
            tally.gains += obs.gained as u32;
            tally.abs_td += pre.token.td_error.abs();
            tally.steps += 1;
            tally.rising += (pre.token.token && !tally.prev_token) as u32;
            tally.prev_token = pre.token.token;
            prev = Some((s, a, obs.reward as f64));

            if sink.is_some() {
                row = Some(StepTrace {
                    seed,
                    episode,
                    step,
                    presence: pre.hazard_active,
                    position: obs.position,
                    action: a,
                    heat: obs.heat,
                    hit: obs.hit,
                    reward: obs.reward,
                    token: pre.token.token,
                    prediction: pre.token.prediction,
                    td_error_gvf: pre.token.td_error,
                    td_error_control: 0.0,
                });
            }
        }

        let delta = match (&mut agent, prev) {
            (Agent::Control(l), Some((ps, pa, pr))) => l.control_update(ps, pa, pr, ps, pa, true),
            _ => 0.0,
        };
        if let (Some(sink), Some(mut r)) = (sink.as_deref_mut(), row.take()) {
            r.td_error_control = delta;
            sink(r);
        }
        summaries.push(tally.finish(seed, episode, env_cfg.heat_rate));
    }
    Ok(summaries)
}

/// Externally driven single episode: the caller supplies each action. Uses
/// the same generator derivation as seed index 0 of [`run_seed`].
#[derive(Debug, Clone)]
pub struct Stepper {
    sim: Simulation,
    step: u32,
}

impl Stepper {
    pub fn new(env: EnvConfig, coagent: &CoAgentKind, master_seed: u64) -> Result<Self> {
        env.validate()?;
        let rs = rng::run_seed(master_seed, 0);
        let mut sim = Simulation::new(env, coagent, rng::substream(rs, Stream::Env))?;
        sim.reset_episode();
        Ok(Self { sim, step: 0 })
    }

    pub fn simulation(&self) -> &Simulation {
        &self.sim
    }

    pub fn simulation_mut(&mut self) -> &mut Simulation {
        &mut self.sim
    }

    pub fn steps_taken(&self) -> u32 {
        self.step
    }

    /// One full step with `action`. `td_error_control` is always zero.
    pub fn step(&mut self, action: Action) -> Result<StepTrace> {
        let pre = self.sim.begin_step()?;
        let obs = self.sim.finish_step(action);
        let row = StepTrace {
            seed: 0,
            episode: 0,
            step: self.step,
            presence: pre.hazard_active,
            position: obs.position,
            action,
            heat: obs.heat,
            hit: obs.hit,
            reward: obs.reward,
            token: pre.token.token,
            prediction: pre.token.prediction,
            td_error_gvf: pre.token.td_error,
            td_error_control: 0.0,
        };
        self.step += 1;
        Ok(row)
    }
}

/// Plays a fixed action sequence as one episode.
pub fn run_scripted(
    env: &EnvConfig,
    coagent: &CoAgentKind,
    master_seed: u64,
    actions: &[Action],
) -> Result<Vec<StepTrace>> {
    let mut s = Stepper::new(env.clone(), coagent, master_seed)?;
    actions.iter().map(|&a| s.step(a)).collect()
}

/// Runs all seeds, in parallel, and returns results in seed order. The
/// output is identical to running the seeds one after another.
pub fn run_experiment(cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let full = cfg.trace_detail == TraceDetail::Full;
    let per_seed = (0..cfg.seeds)
        .into_par_iter()
        .map(|seed| {
            let mut traces = Vec::new();
            let summaries = if full {
                let mut push = |r: StepTrace| traces.push(r);
                run_seed(cfg, seed, Some(&mut push))?
            } else {
                run_seed(cfg, seed, None)?
            };
            Ok((summaries, traces))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut out = RunOutput::default();
    for (s, t) in per_seed {
        out.summaries.extend(s);
        out.traces.extend(t);
    }
    Ok(out)
}

/// Runs several configurations, parallel across configurations and seeds.
pub fn run_many(cfgs: &[RunConfig]) -> Result<Vec<RunOutput>> {
    cfgs.par_iter().map(run_experiment).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use frost_core::coagent::CoAgentKind;

    fn small(agent: AgentKind, coagent: CoAgentKind) -> RunConfig {
        RunConfig {
            agent,
            coagent,
            episodes: 3,
            seeds: 2,
            master_seed: 42,
            trace_detail: TraceDetail::Full,
            ..RunConfig::default()
        }
    }

    #[test]
    fn shapes_and_ordering() {
        let out = run_experiment(&small(AgentKind::Responsive, CoAgentKind::Oracle)).unwrap();
        assert_eq!(out.summaries.len(), 6);
        assert_eq!(out.traces.len(), 6000);
        let keys: Vec<_> = out.traces.iter().map(|r| (r.seed, r.episode, r.step)).collect();
        assert!(keys.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn summaries_agree_with_trace() {
        let cfg = small(AgentKind::Control(Default::default()), CoAgentKind::pavlovian(
            frost_core::repr::ReprConfig::bit_cascade(14),
            frost_core::gvf::GvfSpec::accumulation(),
        ));
        let out = run_experiment(&cfg).unwrap();
        for s in &out.summaries {
            let rows: Vec<_> = out
                .traces
                .iter()
                .filter(|r| r.seed == s.seed && r.episode == s.episode)
                .collect();
            assert_eq!(s.total_reward, rows.iter().map(|r| r.reward).sum::<u32>());
            assert_eq!(s.hit_steps, rows.iter().filter(|r| r.hit).count() as u32);
            let mean_td = rows.iter().map(|r| r.td_error_gvf.abs()).sum::<f64>() / rows.len() as f64;
            assert!((s.mean_abs_td_gvf - mean_td).abs() < 1e-12);
            assert!(rows.iter().all(|r| r.td_error_control.is_finite()));
        }
    }

    #[test]
    fn responsive_agent_with_oracle_is_never_hit() {
        let out = run_experiment(&small(AgentKind::Responsive, CoAgentKind::Oracle)).unwrap();
        assert!(out.summaries.iter().all(|s| s.hit_steps == 0));
        assert!(out.summaries.iter().all(|s| s.total_reward > 0));
    }

    #[test]
    fn trace_detail_does_not_change_summaries() {
        let mut cfg = small(AgentKind::Control(Default::default()), CoAgentKind::Oracle);
        let full = run_experiment(&cfg).unwrap();
        cfg.trace_detail = TraceDetail::Summary;
        let summary_only = run_experiment(&cfg).unwrap();
        assert_eq!(full.summaries, summary_only.summaries);
        assert!(summary_only.traces.is_empty());
    }

    #[test]
    fn seeds_are_independent_of_batch() {
        let cfg = small(AgentKind::Control(Default::default()), CoAgentKind::Oracle);
        let all = run_experiment(&cfg).unwrap();
        let second = run_seed(&cfg, 1, None).unwrap();
        assert_eq!(&all.summaries[3..], &second[..]);
    }

    #[test]
    fn scripted_replay_matches_agent_run() {
        let mut cfg = small(AgentKind::Responsive, CoAgentKind::pavlovian(
            frost_core::repr::ReprConfig::tct(14, 0.3),
            frost_core::gvf::GvfSpec::countdown(),
        ));
        cfg.episodes = 1;
        cfg.env.hazard.condition = frost_core::env::HazardCondition::Random;
        let mut rows = Vec::new();
        run_seed(&cfg, 0, Some(&mut |r| rows.push(r))).unwrap();
        let actions: Vec<_> = rows.iter().map(|r| r.action).collect();
        let replay = run_scripted(&cfg.env, &cfg.coagent, cfg.master_seed, &actions).unwrap();
        assert_eq!(replay, rows);
    }

    #[test]
    fn invalid_config_fails_before_running() {
        let mut cfg = small(AgentKind::Stay, CoAgentKind::None);
        cfg.env.heat_capacity = 5.9;
        assert!(run_experiment(&cfg).is_err());
    }
}
