//! Run configuration and the layered key-value config file.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use frost_core::agents::{ControlAlgorithm, ControlConfig};
use frost_core::coagent::CoAgentKind;
use frost_core::env::{EnvConfig, HazardCondition};
use frost_core::gvf::{GvfKind, GvfSpec};
use frost_core::repr::ReprKind;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::presets::{self, Timescale};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceDetail {
    #[default]
    Summary,
    Full,
}

impl FromStr for TraceDetail {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "summary" => Ok(TraceDetail::Summary),
            "full" => Ok(TraceDetail::Full),
            other => Err(HarnessError::config(
                "run.trace",
                format!("unknown trace detail `{other}` (expected summary|full)"),
            )),
        }
    }
}

/// Who moves the player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AgentKind {
    /// Never moves; used for prediction-only runs.
    Stay,
    /// Follows the token with a fixed rule.
    Responsive,
    Control(ControlConfig),
}

impl AgentKind {
    pub fn label(&self) -> String {
        match self {
            AgentKind::Stay => "stay".into(),
            AgentKind::Responsive => "responsive".into(),
            AgentKind::Control(c) => format!("{}-eps{}", c.algorithm, c.epsilon),
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub env: EnvConfig,
    pub coagent: CoAgentKind,
    pub agent: AgentKind,
    pub episodes: u32,
    pub seeds: u32,
    pub master_seed: u64,
    pub trace_detail: TraceDetail,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            env: EnvConfig::default(),
            coagent: CoAgentKind::None,
            agent: AgentKind::Control(ControlConfig::default()),
            episodes: 5000,
            seeds: 30,
            master_seed: 0,
            trace_detail: TraceDetail::Summary,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        self.coagent.validate(self.env.hazard.max_isi())?;
        if let AgentKind::Control(c) = &self.agent {
            c.validate()?;
        }
        if self.episodes == 0 {
            return Err(HarnessError::config("run.episodes", "must be at least 1"));
        }
        if self.seeds == 0 {
            return Err(HarnessError::config("run.seeds", "must be at least 1"));
        }
        if self.env.episode_length == 0 {
            return Err(HarnessError::config("env.episode_length", "must be at least 1"));
        }
        Ok(())
    }

    pub fn steps_per_seed(&self) -> u64 {
        self.episodes as u64 * self.env.episode_length as u64
    }
}

/// Partial configuration: every key is optional and only the keys that are
/// present change the configuration they are applied to. Config files and
/// command-line flags both produce one of these.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Overrides {
    pub env: EnvOverrides,
    pub hazard: HazardOverrides,
    pub repr: ReprOverrides,
    pub gvf: GvfOverrides,
    pub coagent: CoAgentOverrides,
    pub agent: AgentOverrides,
    pub run: RunOverrides,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvOverrides {
    pub num_locations: Option<usize>,
    pub heat_capacity: Option<f64>,
    pub heat_rate: Option<f64>,
    pub episode_length: Option<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HazardOverrides {
    pub condition: Option<String>,
    /// `short` or `long`; selects the interval preset before other keys apply.
    pub timescale: Option<String>,
    pub isi: Option<u32>,
    pub isi_bounds: Option<(u32, u32)>,
    pub stimulus_length: Option<u32>,
    pub drift_delta_set: Option<Vec<i32>>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReprOverrides {
    pub kind: Option<String>,
    pub length: Option<usize>,
    pub decay_a: Option<f64>,
    pub phase_offset: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GvfOverrides {
    pub kind: Option<String>,
    pub alpha: Option<f64>,
    pub lambda: Option<f64>,
    pub gamma: Option<f64>,
    pub tau: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoAgentOverrides {
    pub kind: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentOverrides {
    /// `stay`, `responsive`, `expected_sarsa`, `sarsa` or `q_learning`.
    pub kind: Option<String>,
    pub alpha: Option<f64>,
    pub epsilon: Option<f64>,
    pub gamma: Option<f64>,
    pub lambda: Option<f64>,
    pub init: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunOverrides {
    pub episodes: Option<u32>,
    pub seeds: Option<u32>,
    pub master_seed: Option<u64>,
    pub trace: Option<String>,
}

macro_rules! take {
    ($dst:expr, $src:expr) => {
        if $src.is_some() {
            $dst = $src;
        }
    };
}

impl Overrides {
    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|source| HarnessError::Toml {
            path: origin.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text, path)
    }

    /// Layers `top` over `self`; keys set in `top` win.
    pub fn merge(mut self, top: Overrides) -> Overrides {
        take!(self.env.num_locations, top.env.num_locations);
        take!(self.env.heat_capacity, top.env.heat_capacity);
        take!(self.env.heat_rate, top.env.heat_rate);
        take!(self.env.episode_length, top.env.episode_length);
        take!(self.hazard.condition, top.hazard.condition);
        take!(self.hazard.timescale, top.hazard.timescale);
        take!(self.hazard.isi, top.hazard.isi);
        take!(self.hazard.isi_bounds, top.hazard.isi_bounds);
        take!(self.hazard.stimulus_length, top.hazard.stimulus_length);
        take!(self.hazard.drift_delta_set, top.hazard.drift_delta_set);
        take!(self.repr.kind, top.repr.kind);
        take!(self.repr.length, top.repr.length);
        take!(self.repr.decay_a, top.repr.decay_a);
        take!(self.repr.phase_offset, top.repr.phase_offset);
        take!(self.gvf.kind, top.gvf.kind);
        take!(self.gvf.alpha, top.gvf.alpha);
        take!(self.gvf.lambda, top.gvf.lambda);
        take!(self.gvf.gamma, top.gvf.gamma);
        take!(self.gvf.tau, top.gvf.tau);
        take!(self.coagent.kind, top.coagent.kind);
        take!(self.agent.kind, top.agent.kind);
        take!(self.agent.alpha, top.agent.alpha);
        take!(self.agent.epsilon, top.agent.epsilon);
        take!(self.agent.gamma, top.agent.gamma);
        take!(self.agent.lambda, top.agent.lambda);
        take!(self.agent.init, top.agent.init);
        take!(self.run.episodes, top.run.episodes);
        take!(self.run.seeds, top.run.seeds);
        take!(self.run.master_seed, top.run.master_seed);
        take!(self.run.trace, top.run.trace);
        self
    }

    fn pavlovian_requested(&self) -> bool {
        self.repr != ReprOverrides::default() || self.gvf != GvfOverrides::default()
    }

    /// Resolves against `base` and validates the result.
    ///
    /// Setting any `repr.*` or `gvf.*` key implies a learning co-agent unless
    /// `coagent.kind` says otherwise.
    pub fn apply(&self, base: &RunConfig) -> Result<RunConfig> {
        let mut cfg = base.clone();

        let condition = match &self.hazard.condition {
            Some(s) => s.parse::<HazardCondition>()?,
            None => cfg.env.hazard.condition,
        };
        let timescale = self.hazard.timescale.as_deref().map(str::parse::<Timescale>).transpose()?;
        if let Some(ts) = timescale {
            cfg.env.hazard = presets::hazard(condition, ts);
        }
        cfg.env.hazard.condition = condition;
        if let Some(n) = self.env.num_locations {
            let hazard = cfg.env.hazard.clone();
            let rest = cfg.env.clone();
            cfg.env = EnvConfig {
                hazard,
                heat_rate: rest.heat_rate,
                heat_capacity: rest.heat_capacity,
                episode_length: rest.episode_length,
                ..presets::layout(n)
            };
        }
        if let Some(v) = self.env.heat_capacity {
            cfg.env.heat_capacity = v;
        }
        if let Some(v) = self.env.heat_rate {
            cfg.env.heat_rate = v;
        }
        if let Some(v) = self.env.episode_length {
            cfg.env.episode_length = v;
        }
        let h = &mut cfg.env.hazard;
        if let Some(v) = self.hazard.isi {
            h.isi = v;
        }
        if let Some(v) = self.hazard.isi_bounds {
            h.isi_bounds = v;
        }
        if let Some(v) = self.hazard.stimulus_length {
            h.stimulus_length = v;
        }
        if let Some(v) = &self.hazard.drift_delta_set {
            h.drift_delta_set = v.clone();
        }

        let coagent_kind = match self.coagent.kind.as_deref() {
            Some(k) => Some(k),
            None if self.pavlovian_requested() => Some("pavlovian"),
            None => None,
        };
        match coagent_kind {
            Some("none") => cfg.coagent = CoAgentKind::None,
            Some("oracle") => cfg.coagent = CoAgentKind::Oracle,
            Some("pavlovian") => {
                cfg.coagent = self.resolve_pavlovian(&cfg, timescale.unwrap_or_default())?
            }
            Some(other) => {
                return Err(HarnessError::config(
                    "coagent.kind",
                    format!("unknown co-agent `{other}` (expected none|oracle|pavlovian)"),
                ))
            }
            None => {}
        }

        self.apply_agent(&mut cfg)?;

        if let Some(v) = self.run.episodes {
            cfg.episodes = v;
        }
        if let Some(v) = self.run.seeds {
            cfg.seeds = v;
        }
        if let Some(v) = self.run.master_seed {
            cfg.master_seed = v;
        }
        if let Some(v) = &self.run.trace {
            cfg.trace_detail = v.parse()?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve_pavlovian(&self, cfg: &RunConfig, timescale: Timescale) -> Result<CoAgentKind> {
        let (base_repr, base_gvf) = match &cfg.coagent {
            CoAgentKind::Pavlovian { repr, gvf } => (Some(repr.clone()), Some(gvf.clone())),
            _ => (None, None),
        };
        let mut repr = match (&self.repr.kind, base_repr) {
            (Some(k), _) => presets::repr(k.parse::<ReprKind>()?, timescale),
            (None, Some(r)) => r,
            (None, None) => presets::repr(ReprKind::BitCascade, timescale),
        };
        if let Some(v) = self.repr.length {
            repr.length = v;
        }
        if let Some(v) = self.repr.decay_a {
            repr.decay_a = v;
        }
        if let Some(v) = self.repr.phase_offset {
            repr.phase_offset = v;
        }
        let mut gvf = match (&self.gvf.kind, base_gvf) {
            (Some(k), _) => GvfSpec::of_kind(k.parse::<GvfKind>()?),
            (None, Some(g)) => g,
            (None, None) => GvfSpec::accumulation(),
        };
        if let Some(v) = self.gvf.alpha {
            gvf.alpha = v;
        }
        if let Some(v) = self.gvf.lambda {
            gvf.lambda = v;
        }
        if let Some(v) = self.gvf.gamma {
            gvf.gamma = v;
        }
        if let Some(v) = self.gvf.tau {
            gvf.threshold = v;
        }
        Ok(CoAgentKind::Pavlovian { repr, gvf })
    }

    fn apply_agent(&self, cfg: &mut RunConfig) -> Result<()> {
        let a = &self.agent;
        match a.kind.as_deref() {
            Some("stay") => cfg.agent = AgentKind::Stay,
            Some("responsive") => cfg.agent = AgentKind::Responsive,
            Some(algo) => {
                let algorithm = algo
                    .parse::<ControlAlgorithm>()
                    .map_err(|_| HarnessError::config(
                        "agent.kind",
                        format!("unknown agent `{algo}` (expected stay|responsive|expected_sarsa|sarsa|q_learning)"),
                    ))?;
                let mut c = match &cfg.agent {
                    AgentKind::Control(c) => c.clone(),
                    _ => ControlConfig::default(),
                };
                c.algorithm = algorithm;
                cfg.agent = AgentKind::Control(c);
            }
            None => {}
        }
        let tuning = [a.alpha, a.epsilon, a.gamma, a.lambda, a.init];
        match &mut cfg.agent {
            AgentKind::Control(c) => {
                if let Some(v) = a.alpha {
                    c.alpha = v;
                }
                if let Some(v) = a.epsilon {
                    c.epsilon = v;
                }
                if let Some(v) = a.gamma {
                    c.gamma = v;
                }
                if let Some(v) = a.lambda {
                    c.lambda = v;
                }
                if let Some(v) = a.init {
                    c.optimistic_init = v;
                }
            }
            other if tuning.iter().any(Option::is_some) => {
                return Err(HarnessError::config(
                    "agent",
                    format!("learning parameters given for fixed-policy agent `{other}`"),
                ));
            }
            _ => {}
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use frost_core::repr::ReprConfig;

    fn parse(text: &str) -> Result<RunConfig> {
        Overrides::from_toml_str(text, Path::new("test.toml"))?.apply(&RunConfig::default())
    }

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(parse("").unwrap(), RunConfig::default());
    }

    #[test]
    fn spec_keys_are_accepted() {
        let cfg = parse(
            r#"
            [env]
            num_locations = 7
            heat_capacity = 4.0
            heat_rate = 0.5
            episode_length = 500
            [hazard]
            condition = "drift"
            isi = 11
            isi_bounds = [8, 13]
            stimulus_length = 2
            drift_delta_set = [-1, 1]
            "#,
        )
        .unwrap();
        assert_eq!(cfg.env.heat_capacity, 4.0);
        assert_eq!(cfg.env.episode_length, 500);
        assert_eq!(cfg.env.hazard.condition, HazardCondition::Drift);
        assert_eq!(cfg.env.hazard.isi, 11);
        assert_eq!(cfg.env.hazard.drift_delta_set, vec![-1, 1]);
    }

    #[test]
    fn repr_key_implies_pavlovian() {
        let cfg = parse("[repr]\nkind = \"tct\"\n[gvf]\nalpha = 0.01").unwrap();
        let CoAgentKind::Pavlovian { repr, gvf } = cfg.coagent else {
            panic!("expected pavlovian co-agent");
        };
        assert_eq!(repr, ReprConfig::tct(14, 0.3));
        assert_eq!(gvf, GvfSpec::accumulation().with_alpha(0.01));
    }

    #[test]
    fn long_timescale_sizes_representation() {
        let cfg = parse("[hazard]\ntimescale = \"long\"\ncondition = \"random\"\n[repr]\nkind = \"bit_cascade\"").unwrap();
        assert_eq!(cfg.env.hazard.isi_bounds, (80, 130));
        let CoAgentKind::Pavlovian { repr, .. } = cfg.coagent else { panic!() };
        assert_eq!(repr.length, 140);
    }

    #[test]
    fn errors_name_the_field() {
        let e = parse("[hazard]\ncondition = \"sometimes\"").unwrap_err().to_string();
        assert!(e.contains("hazard.condition"), "{e}");
        let e = parse("[coagent]\nkind = \"psychic\"").unwrap_err().to_string();
        assert!(e.contains("coagent.kind"), "{e}");
        let e = parse("[run]\nepisodes = 0").unwrap_err().to_string();
        assert!(e.contains("run.episodes"), "{e}");
        let e = parse("[env]\nheat_capacity = 5.75").unwrap_err().to_string();
        assert!(e.contains("heat_capacity"), "{e}");
        assert!(parse("[env]\nbogus = 1").is_err());
    }

    #[test]
    fn bit_cascade_shorter_than_interval_is_rejected() {
        assert!(parse("[hazard]\ncondition = \"random\"\n[repr]\nkind = \"bit_cascade\"\nlength = 10").is_err());
    }

    #[test]
    fn agent_selection() {
        let cfg = parse("[agent]\nkind = \"q_learning\"\nepsilon = 0.01").unwrap();
        let AgentKind::Control(c) = cfg.agent else { panic!() };
        assert_eq!(c.algorithm, ControlAlgorithm::QLearning);
        assert_eq!(c.epsilon, 0.01);
        assert_eq!(parse("[agent]\nkind = \"responsive\"").unwrap().agent, AgentKind::Responsive);
        assert!(parse("[agent]\nkind = \"responsive\"\nepsilon = 0.1").is_err());
    }

    #[test]
    fn later_layers_win() {
        let file = Overrides::from_toml_str("[run]\nseeds = 4\nepisodes = 9", Path::new("f")).unwrap();
        let cli = Overrides {
            run: RunOverrides { seeds: Some(2), ..Default::default() },
            ..Default::default()
        };
        let cfg = file.merge(cli).apply(&RunConfig::default()).unwrap();
        assert_eq!((cfg.seeds, cfg.episodes), (2, 9));
    }

    #[test]
    fn run_config_json_round_trip() {
        let cfg = parse("[repr]\nkind = \"oscillator\"\n[agent]\nkind = \"sarsa\"").unwrap();
        let json = serde_json::to_string(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
    }
}
