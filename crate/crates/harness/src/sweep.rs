//! Parameter grids for control sweeps.

use frost_core::agents::{ControlAlgorithm, ControlConfig};
use frost_core::coagent::CoAgentKind;
use frost_core::env::HazardCondition;
use frost_core::gvf::{GvfKind, GvfSpec};
use frost_core::repr::ReprKind;

use crate::config::{AgentKind, RunConfig};
use crate::presets::{self, Timescale};

pub const GRID_ALPHA_GVF: [f64; 2] = [0.01, 0.1];
pub const GRID_EPSILON: [f64; 2] = [0.01, 0.1];
pub const GRID_HEAT_CAPACITY: [f64; 2] = [4.0, 6.0];
pub const GRID_REPRS: [ReprKind; 4] =
    [ReprKind::Bias, ReprKind::Oscillator, ReprKind::BitCascade, ReprKind::Tct];
pub const GRID_GVFS: [GvfKind; 2] = [GvfKind::Accumulation, GvfKind::Countdown];

/// A named cell of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub name: String,
    pub config: RunConfig,
}

fn coagent_label(c: &CoAgentKind) -> String {
    match c {
        CoAgentKind::None => "none".into(),
        CoAgentKind::Oracle => "oracle".into(),
        CoAgentKind::Pavlovian { repr, gvf } => {
            format!("{}-{}-a{}", repr.kind.as_str(), gvf.kind.as_str(), gvf.alpha)
        }
    }
}

/// Every co-agent of the control study: none, oracle, and each
/// representation and question at each step size.
pub fn coagents(timescale: Timescale) -> Vec<CoAgentKind> {
    let mut v = vec![CoAgentKind::None, CoAgentKind::Oracle];
    for repr in GRID_REPRS {
        for gvf in GRID_GVFS {
            for alpha in GRID_ALPHA_GVF {
                v.push(CoAgentKind::pavlovian(
                    presets::repr(repr, timescale),
                    GvfSpec::of_kind(gvf).with_alpha(alpha),
                ));
            }
        }
    }
    v
}

/// Conditions × heat capacities × co-agents × exploration rates, all with
/// the algorithm of `base` (Expected Sarsa unless set otherwise).
pub fn default_grid(base: &RunConfig) -> Vec<GridPoint> {
    let algo = match &base.agent {
        AgentKind::Control(c) => c.clone(),
        _ => ControlConfig::default(),
    };
    let mut grid = Vec::new();
    for condition in HazardCondition::ALL {
        for capacity in GRID_HEAT_CAPACITY {
            for coagent in coagents(Timescale::Short) {
                for epsilon in GRID_EPSILON {
                    let mut config = base.clone();
                    config.env = presets::env(condition, Timescale::Short, capacity);
                    config.env.episode_length = base.env.episode_length;
                    config.coagent = coagent.clone();
                    config.agent = AgentKind::Control(ControlConfig { epsilon, ..algo.clone() });
                    grid.push(GridPoint {
                        name: format!(
                            "{condition}_cap{capacity}_{}_eps{epsilon}",
                            coagent_label(&coagent)
                        ),
                        config,
                    });
                }
            }
        }
    }
    grid
}

/// Oracle co-agent with each control algorithm.
pub fn algorithm_grid(base: &RunConfig, epsilon: f64) -> Vec<GridPoint> {
    ControlAlgorithm::ALL
        .iter()
        .map(|&algorithm| {
            let mut config = base.clone();
            config.coagent = CoAgentKind::Oracle;
            config.agent = AgentKind::Control(ControlConfig::with(algorithm, epsilon));
            GridPoint {
                name: format!("oracle_{algorithm}_eps{epsilon}"),
                config,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn grid_is_valid_and_uniquely_named() {
        let base = RunConfig::default();
        let grid = default_grid(&base);
        assert_eq!(grid.len(), 3 * 2 * (2 + 4 * 2 * 2) * 2);
        let names: HashSet<_> = grid.iter().map(|g| g.name.as_str()).collect();
        assert_eq!(names.len(), grid.len());
        for g in &grid {
            g.config.validate().unwrap_or_else(|e| panic!("{}: {e}", g.name));
        }
    }

    #[test]
    fn algorithm_grid_covers_all() {
        let g = algorithm_grid(&RunConfig::default(), 0.1);
        assert_eq!(g.len(), 3);
        assert!(g.iter().all(|p| p.config.coagent == CoAgentKind::Oracle));
    }
}
