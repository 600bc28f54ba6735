//! The abstract Frost Hollow linear walk.
//!
//! Seven locations with a heat source in the middle, a hazard region around it
//! and shelter at both ends. A wind hazard blows on a schedule given by a
//! [`HazardProcess`]; standing in the hazard region while it blows strips all
//! accumulated heat. Heat that reaches capacity converts into one unit of
//! reward.
//!
//! Heat is tracked internally in whole multiples of `heat_rate`, which keeps
//! the conservation audit exact and makes the heat level a clean tabular
//! state component.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SimRng;

/// How the onset-to-onset interval evolves from one hazard to the next.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HazardCondition {
    Fixed,
    Random,
    Drift,
}

impl HazardCondition {
    pub const ALL: [HazardCondition; 3] = [Self::Fixed, Self::Random, Self::Drift];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Fixed => "fixed",
            Self::Random => "random",
            Self::Drift => "drift",
        }
    }
}

impl fmt::Display for HazardCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for HazardCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(Self::Fixed),
            "random" => Ok(Self::Random),
            "drift" => Ok(Self::Drift),
            other => Err(Error::config(
                "hazard.condition",
                format!("unknown condition `{other}` (expected fixed|random|drift)"),
            )),
        }
    }
}

/// Hazard schedule parameters. All intervals are measured onset to onset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HazardConfig {
    pub condition: HazardCondition,
    /// Interval for the fixed condition and the starting interval for drift.
    pub isi: u32,
    /// Inclusive bounds for the random and drift conditions.
    pub isi_bounds: (u32, u32),
    pub drift_delta_set: Vec<i32>,
    pub stimulus_length: u32,
}

impl Default for HazardConfig {
    fn default() -> Self {
        Self {
            condition: HazardCondition::Fixed,
            isi: 10,
            isi_bounds: (8, 13),
            drift_delta_set: vec![-1, 0, 1],
            stimulus_length: 2,
        }
    }
}

impl HazardConfig {
    pub fn with_condition(condition: HazardCondition) -> Self {
        Self {
            condition,
            ..Self::default()
        }
    }

    /// Longest interval the schedule can produce.
    pub fn max_isi(&self) -> u32 {
        match self.condition {
            HazardCondition::Fixed => self.isi,
            HazardCondition::Random | HazardCondition::Drift => self.isi_bounds.1,
        }
    }

    /// Shortest interval the schedule can produce.
    pub fn min_isi(&self) -> u32 {
        match self.condition {
            HazardCondition::Fixed => self.isi,
            HazardCondition::Random | HazardCondition::Drift => self.isi_bounds.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.stimulus_length == 0 {
            return Err(Error::config("hazard.stimulus_length", "must be at least 1"));
        }
        let (lo, hi) = self.isi_bounds;
        match self.condition {
            HazardCondition::Fixed => {
                if self.isi <= self.stimulus_length {
                    return Err(Error::config(
                        "hazard.isi",
                        format!(
                            "isi {} must exceed stimulus_length {}",
                            self.isi, self.stimulus_length
                        ),
                    ));
                }
            }
            HazardCondition::Random | HazardCondition::Drift => {
                if lo > hi {
                    return Err(Error::config(
                        "hazard.isi_bounds",
                        format!("lower bound {lo} exceeds upper bound {hi}"),
                    ));
                }
                if lo < self.stimulus_length + 1 {
                    return Err(Error::config(
                        "hazard.isi_bounds",
                        format!(
                            "lower bound {lo} must be at least stimulus_length + 1 = {}",
                            self.stimulus_length + 1
                        ),
                    ));
                }
            }
        }
        if self.condition == HazardCondition::Drift {
            if self.drift_delta_set.is_empty() {
                return Err(Error::config("hazard.drift_delta_set", "must not be empty"));
            }
            if self.isi < lo || self.isi > hi {
                return Err(Error::config(
                    "hazard.isi",
                    format!("drift start isi {} outside bounds [{lo}, {hi}]", self.isi),
                ));
            }
        }
        Ok(())
    }
}

/// Wind hazard schedule state machine.
///
/// `phase` counts steps since the most recent onset; the hazard is present
/// while `phase < stimulus_length`. The interval of the *current* cycle is
/// drawn at its onset, so the time to the next onset is always known.
#[derive(Debug, Clone)]
pub struct HazardProcess {
    config: HazardConfig,
    phase: u32,
    current_isi: u32,
    rng: SimRng,
}

impl HazardProcess {
    /// Builds a process positioned at the start of an episode.
    pub fn new(config: HazardConfig, rng: SimRng) -> Result<Self> {
        config.validate()?;
        let mut proc = Self {
            current_isi: config.isi,
            phase: config.stimulus_length,
            config,
            rng,
        };
        if proc.config.condition == HazardCondition::Random {
            proc.current_isi = proc.draw_uniform();
        }
        Ok(proc)
    }

    pub fn config(&self) -> &HazardConfig {
        &self.config
    }

    pub fn phase(&self) -> u32 {
        self.phase
    }

    pub fn current_isi(&self) -> u32 {
        self.current_isi
    }

    pub fn presence(&self) -> bool {
        self.phase < self.config.stimulus_length
    }

    /// Moves one step forward and reports whether the hazard blows on it.
    pub fn advance(&mut self) -> bool {
        self.phase += 1;
        if self.phase >= self.current_isi {
            self.phase = 0;
            self.redraw();
        }
        self.presence()
    }

    /// Steps until the phase next returns to zero. During an active hazard
    /// this is the distance to the following onset.
    pub fn steps_to_next_onset(&self) -> u32 {
        self.current_isi - self.phase
    }

    /// Aligns the schedule to an episode start.
    ///
    /// Episodes start on the step a hazard has just ended (the falling edge),
    /// which is the state in which the temporal representations are reset.
    /// The interval for the cycle in progress is re-drawn from its rule.
    pub fn reset_episode(&mut self) {
        self.redraw();
        self.phase = self.config.stimulus_length;
    }

    fn redraw(&mut self) {
        match self.config.condition {
            HazardCondition::Fixed => {}
            HazardCondition::Random => self.current_isi = self.draw_uniform(),
            HazardCondition::Drift => {
                let delta = *self
                    .config
                    .drift_delta_set
                    .choose(&mut self.rng)
                    .expect("validated non-empty");
                let (lo, hi) = self.config.isi_bounds;
                let next = (self.current_isi as i64 + delta as i64).clamp(lo as i64, hi as i64);
                self.current_isi = next as u32;
            }
        }
    }

    fn draw_uniform(&mut self) -> u32 {
        let (lo, hi) = self.config.isi_bounds;
        self.rng.gen_range(lo..=hi)
    }
}

/// Which part of the map a location belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Safe,
    Hazard,
    Heat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub num_locations: usize,
    pub heat_location: usize,
    /// Inclusive range of locations exposed to the hazard.
    pub hazard_region: (usize, usize),
    pub safe_locations: Vec<usize>,
    pub heat_rate: f64,
    pub heat_capacity: f64,
    pub episode_length: u32,
    pub hazard: HazardConfig,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            num_locations: 7,
            heat_location: 3,
            hazard_region: (1, 5),
            safe_locations: vec![0, 6],
            heat_rate: 0.5,
            heat_capacity: 6.0,
            episode_length: 1000,
            hazard: HazardConfig::default(),
        }
    }
}

impl EnvConfig {
    pub fn in_hazard_region(&self, location: usize) -> bool {
        (self.hazard_region.0..=self.hazard_region.1).contains(&location)
    }

    pub fn region(&self, location: usize) -> Region {
        if location == self.heat_location {
            Region::Heat
        } else if self.in_hazard_region(location) {
            Region::Hazard
        } else {
            Region::Safe
        }
    }

    /// Heat capacity in units of `heat_rate`.
    pub fn capacity_units(&self) -> u32 {
        (self.heat_capacity / self.heat_rate).round() as u32
    }

    /// Number of distinct heat levels an observation can carry (0..=capacity).
    pub fn heat_levels(&self) -> usize {
        self.capacity_units() as usize + 1
    }

    /// Upper bound on rewards in one episode.
    pub fn max_reward_per_episode(&self) -> f64 {
        self.episode_length as f64 * self.heat_rate / self.heat_capacity
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_locations < 2 {
            return Err(Error::config("env.num_locations", "need at least two locations"));
        }
        let last = self.num_locations - 1;
        let (lo, hi) = self.hazard_region;
        if lo > hi || hi > last {
            return Err(Error::config(
                "env.hazard_region",
                format!("[{lo}, {hi}] is not a range inside [0, {last}]"),
            ));
        }
        if !self.in_hazard_region(self.heat_location) {
            return Err(Error::config(
                "env.heat_location",
                format!("location {} is outside the hazard region", self.heat_location),
            ));
        }
        for &s in &self.safe_locations {
            if s > last {
                return Err(Error::config("env.safe_locations", format!("location {s} out of range")));
            }
            if self.in_hazard_region(s) {
                return Err(Error::config(
                    "env.safe_locations",
                    format!("location {s} is inside the hazard region"),
                ));
            }
        }
        for loc in 0..=last {
            if !self.in_hazard_region(loc) && !self.safe_locations.contains(&loc) {
                return Err(Error::config(
                    "env.safe_locations",
                    format!("location {loc} is neither safe nor in the hazard region"),
                ));
            }
        }
        if !(self.heat_rate > 0.0 && self.heat_rate.is_finite()) {
            return Err(Error::config("env.heat_rate", "must be positive"));
        }
        if !(self.heat_capacity > 0.0 && self.heat_capacity.is_finite()) {
            return Err(Error::config("env.heat_capacity", "must be positive"));
        }
        let units = self.heat_capacity / self.heat_rate;
        if (units - units.round()).abs() > 1e-9 || units.round() < 1.0 {
            return Err(Error::config(
                "env.heat_capacity",
                format!(
                    "{} is not a positive integer multiple of heat_rate {}",
                    self.heat_capacity, self.heat_rate
                ),
            ));
        }
        if self.episode_length == 0 {
            return Err(Error::config("env.episode_length", "must be at least 1"));
        }
        self.hazard.validate()
    }
}

/// A movement along the walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i64")]
pub enum Action {
    Left,
    Stay,
    Right,
}

impl Action {
    pub const ALL: [Action; 3] = [Action::Left, Action::Stay, Action::Right];

    pub fn value(self) -> i64 {
        match self {
            Action::Left => -1,
            Action::Stay => 0,
            Action::Right => 1,
        }
    }

    /// Column of this action in a Q-table.
    pub fn index(self) -> usize {
        (self.value() + 1) as usize
    }

    pub fn from_index(i: usize) -> Action {
        Self::ALL[i]
    }
}

impl TryFrom<i64> for Action {
    type Error = Error;

    fn try_from(v: i64) -> Result<Self> {
        match v {
            -1 => Ok(Action::Left),
            0 => Ok(Action::Stay),
            1 => Ok(Action::Right),
            other => Err(Error::ContractViolation(format!(
                "action must be one of -1, 0, +1 (got {other})"
            ))),
        }
    }
}

impl From<Action> for i64 {
    fn from(a: Action) -> i64 {
        a.value()
    }
}

/// What one environment step produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub position: usize,
    pub hazard_active: bool,
    pub heat: f64,
    pub reward: u32,
    pub hit: bool,
    /// Heat was added on this step.
    pub gained: bool,
}

#[derive(Debug, Clone)]
pub struct EnvState {
    pub position: usize,
    heat_units: u32,
    heat_rate: f64,
    pub step: u64,
    pub hazard: HazardProcess,
}

impl EnvState {
    pub fn heat(&self) -> f64 {
        self.heat_units as f64 * self.heat_rate
    }

    /// Heat in multiples of the heat rate.
    pub fn heat_level(&self) -> usize {
        self.heat_units as usize
    }
}

#[derive(Debug, Clone)]
pub struct Env {
    config: EnvConfig,
    capacity_units: u32,
    state: EnvState,
}

impl Env {
    pub fn new(config: EnvConfig, rng: SimRng) -> Result<Self> {
        config.validate()?;
        let hazard = HazardProcess::new(config.hazard.clone(), rng)?;
        Ok(Self {
            capacity_units: config.capacity_units(),
            state: EnvState {
                position: config.heat_location,
                heat_units: 0,
                heat_rate: config.heat_rate,
                step: 0,
                hazard,
            },
            config,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn state(&self) -> &EnvState {
        &self.state
    }

    pub fn steps_to_next_onset(&self) -> u32 {
        self.state.hazard.steps_to_next_onset()
    }

    /// Advances the hazard schedule by one step and returns its presence.
    /// Must be followed by exactly one [`Env::apply_action`].
    pub fn advance_hazard(&mut self) -> bool {
        self.state.hazard.advance()
    }

    /// Resolves the rest of a step against the already-advanced hazard:
    /// move, strip, gain, convert.
    pub fn apply_action(&mut self, action: Action) -> Observation {
        let cfg = &self.config;
        let st = &mut self.state;
        let last = (cfg.num_locations - 1) as i64;
        st.position = (st.position as i64 + action.value()).clamp(0, last) as usize;

        let hazard_active = st.hazard.presence();
        let mut hit = false;
        let mut gained = false;
        if hazard_active && cfg.in_hazard_region(st.position) {
            st.heat_units = 0;
            hit = true;
        } else if st.position == cfg.heat_location {
            st.heat_units += 1;
            gained = true;
        }

        let reward = if st.heat_units >= self.capacity_units {
            st.heat_units = 0;
            1
        } else {
            0
        };
        st.step += 1;

        Observation {
            position: st.position,
            hazard_active,
            heat: st.heat(),
            reward,
            hit,
            gained,
        }
    }

    /// One full environment step.
    pub fn step(&mut self, action: Action) -> Observation {
        self.advance_hazard();
        self.apply_action(action)
    }

    /// Like [`Env::step`] but takes a raw movement value.
    pub fn step_value(&mut self, action: i64) -> Result<Observation> {
        Ok(self.step(Action::try_from(action)?))
    }

    /// Returns the player to the heat source with no heat and realigns the
    /// hazard schedule. Learner state lives elsewhere and is untouched.
    pub fn reset_episode(&mut self) {
        self.state.position = self.config.heat_location;
        self.state.heat_units = 0;
        self.state.step = 0;
        self.state.hazard.reset_episode();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Stream};

    fn rng() -> SimRng {
        substream(7, Stream::Env)
    }

    fn fixed_env() -> Env {
        Env::new(EnvConfig::default(), rng()).unwrap()
    }

    /// Sets position/heat directly and advances the hazard so the next
    /// `apply_action` sees the requested presence.
    fn prime(env: &mut Env, position: usize, heat: f64, hazard: bool) {
        env.state.position = position;
        env.state.heat_units = (heat / env.config.heat_rate).round() as u32;
        while env.advance_hazard() != hazard {}
    }

    #[test]
    fn fixed_presence_pattern_repeats_every_ten_steps() {
        let mut proc = HazardProcess::new(HazardConfig::default(), rng()).unwrap();
        // Skip to the first onset.
        while proc.phase() != proc.current_isi() - 1 {
            proc.advance();
        }
        let pattern: Vec<bool> = (0..30).map(|_| proc.advance()).collect();
        let cycle = [true, true, false, false, false, false, false, false, false, false];
        for (i, p) in pattern.iter().enumerate() {
            assert_eq!(*p, cycle[i % 10], "step {i}");
        }
    }

    #[test]
    fn drift_clamps_at_upper_bound() {
        let cfg = HazardConfig {
            condition: HazardCondition::Drift,
            isi: 13,
            drift_delta_set: vec![1],
            ..HazardConfig::default()
        };
        let mut proc = HazardProcess::new(cfg, rng()).unwrap();
        for _ in 0..100 {
            proc.advance();
            assert_eq!(proc.current_isi(), 13);
        }
    }

    #[test]
    fn drift_stays_in_bounds() {
        let cfg = HazardConfig::with_condition(HazardCondition::Drift);
        let mut proc = HazardProcess::new(cfg, rng()).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for _ in 0..20_000 {
            proc.advance();
            assert!((8..=13).contains(&proc.current_isi()));
            seen.insert(proc.current_isi());
        }
        assert_eq!(seen.len(), 6, "drift should wander over the whole range");
    }

    #[test]
    fn random_isi_is_uniform_on_bounds() {
        let cfg = HazardConfig::with_condition(HazardCondition::Random);
        let mut proc = HazardProcess::new(cfg, rng()).unwrap();
        let mut counts = [0u32; 6];
        let mut onsets = 0;
        let mut gap = 0u32;
        let mut first = true;
        while onsets < 10_000 {
            gap += 1;
            proc.advance();
            if proc.phase() == 0 {
                if !first {
                    assert!((8..=13).contains(&gap), "gap {gap}");
                    counts[(gap - 8) as usize] += 1;
                    onsets += 1;
                }
                first = false;
                gap = 0;
            }
        }
        // Each bin is Binomial(10000, 1/6); allow 3 sigma.
        let n = 10_000.0f64;
        let p = 1.0 / 6.0;
        let sigma = (n * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - n * p).abs() < 3.0 * sigma, "counts {counts:?}");
        }
        // Chi-square with 5 dof; the 0.999 quantile is 20.5.
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - n * p).powi(2) / (n * p)).sum();
        assert!(chi2 < 20.5, "chi2 {chi2}");
    }

    #[test]
    fn conversion_at_capacity() {
        let mut env = fixed_env();
        prime(&mut env, 3, 5.5, false);
        let obs = env.apply_action(Action::Stay);
        assert_eq!(obs.reward, 1);
        assert_eq!(obs.heat, 0.0);
        assert!(!obs.hit);
    }

    #[test]
    fn hazard_strips_heat_in_region() {
        let mut env = fixed_env();
        prime(&mut env, 3, 4.5, true);
        let obs = env.apply_action(Action::Stay);
        assert!(obs.hit);
        assert_eq!(obs.heat, 0.0);
        assert_eq!(obs.reward, 0);
    }

    #[test]
    fn safe_location_keeps_heat() {
        let mut env = fixed_env();
        prime(&mut env, 0, 4.5, true);
        let obs = env.apply_action(Action::Stay);
        assert!(!obs.hit);
        assert_eq!(obs.heat, 4.5);
    }

    #[test]
    fn movement_happens_before_the_hazard_check() {
        let mut env = fixed_env();
        prime(&mut env, 1, 4.5, true);
        let obs = env.apply_action(Action::Left);
        assert_eq!(obs.position, 0);
        assert!(!obs.hit);
        assert_eq!(obs.heat, 4.5);
    }

    #[test]
    fn position_clamps_at_the_ends() {
        let mut env = fixed_env();
        env.state.position = 0;
        assert_eq!(env.step(Action::Left).position, 0);
        env.state.position = 6;
        assert_eq!(env.step(Action::Right).position, 6);
    }

    #[test]
    fn invalid_action_is_rejected() {
        let mut env = fixed_env();
        assert!(matches!(env.step_value(2), Err(Error::ContractViolation(_))));
        assert!(env.step_value(-1).is_ok());
    }

    #[test]
    fn reset_returns_to_heat_source() {
        let mut env = fixed_env();
        for _ in 0..17 {
            env.step(Action::Left);
        }
        env.reset_episode();
        assert_eq!(env.state().position, 3);
        assert_eq!(env.state().heat(), 0.0);
        assert_eq!(env.state().step, 0);
        assert_eq!(env.state().hazard.phase(), 2);
        assert!(!env.state().hazard.presence());
    }

    #[test]
    fn fixed_episodes_repeat_presence_and_count_100_onsets() {
        let mut env = fixed_env();
        let mut episodes = Vec::new();
        for _ in 0..2 {
            env.reset_episode();
            let mut presence = Vec::new();
            let mut onsets = 0;
            for _ in 0..1000 {
                let p = env.advance_hazard();
                if env.state().hazard.phase() == 0 {
                    onsets += 1;
                }
                presence.push(p);
                env.apply_action(Action::Stay);
            }
            assert_eq!(onsets, 100);
            episodes.push(presence);
        }
        assert_eq!(episodes[0], episodes[1]);
    }

    #[test]
    fn steps_to_next_onset_arithmetic() {
        let mut proc = HazardProcess::new(HazardConfig::default(), rng()).unwrap();
        while proc.phase() != 7 {
            proc.advance();
        }
        assert_eq!(proc.steps_to_next_onset(), 3);
        while proc.phase() != 0 {
            proc.advance();
        }
        assert_eq!(proc.steps_to_next_onset(), proc.current_isi());
    }

    #[test]
    fn peeked_onset_distance_matches_observed_gap() {
        for condition in [HazardCondition::Random, HazardCondition::Drift] {
            let mut proc = HazardProcess::new(HazardConfig::with_condition(condition), rng()).unwrap();
            let mut pending: Vec<(u64, u32)> = Vec::new();
            for step in 0..5_000u64 {
                proc.advance();
                if proc.phase() == 0 {
                    for (at, peek) in pending.drain(..) {
                        assert_eq!(step - at, peek as u64, "{condition}");
                    }
                }
                pending.push((step, proc.steps_to_next_onset()));
            }
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = EnvConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.heat_capacity = 5.75;
        assert!(cfg.validate().is_err());
        let cfg = EnvConfig {
            safe_locations: vec![0, 5, 6],
            ..EnvConfig::default()
        };
        assert!(cfg.validate().is_err());
        let mut cfg = EnvConfig::default();
        cfg.hazard.condition = HazardCondition::Random;
        cfg.hazard.isi_bounds = (2, 13);
        assert!(cfg.validate().is_err());
        let mut cfg = EnvConfig::default();
        cfg.hazard.isi = 2;
        assert!(cfg.validate().is_err());
        assert_eq!(EnvConfig::default().heat_levels(), 13);
        assert_eq!(EnvConfig::default().max_reward_per_episode(), 1000.0 * 0.5 / 6.0);
    }

    #[test]
    fn condition_parse() {
        assert_eq!("drift".parse::<HazardCondition>().unwrap(), HazardCondition::Drift);
        let err = "sometimes".parse::<HazardCondition>().unwrap_err();
        assert!(err.to_string().contains("hazard.condition"));
    }
}
