//! Named parameter sets for the two hazard timescales.

use std::fmt;
use std::str::FromStr;

use frost_core::env::{EnvConfig, HazardCondition, HazardConfig};
use frost_core::repr::{ReprConfig, ReprKind};
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Timescale {
    /// Onsets every 10 steps (8 to 13 when varied), two-step hazards.
    #[default]
    Short,
    /// Onsets every 100 steps (80 to 130 when varied), twenty-step hazards.
    Long,
}

impl FromStr for Timescale {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "short" => Ok(Timescale::Short),
            "long" => Ok(Timescale::Long),
            other => Err(HarnessError::config(
                "isi",
                format!("unknown timescale `{other}` (expected short|long)"),
            )),
        }
    }
}

impl fmt::Display for Timescale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Timescale::Short => "short",
            Timescale::Long => "long",
        })
    }
}

pub fn hazard(condition: HazardCondition, timescale: Timescale) -> HazardConfig {
    match timescale {
        Timescale::Short => HazardConfig::with_condition(condition),
        Timescale::Long => HazardConfig {
            condition,
            isi: 100,
            isi_bounds: (80, 130),
            drift_delta_set: vec![-10, 0, 10],
            stimulus_length: 20,
        },
    }
}

pub fn env(condition: HazardCondition, timescale: Timescale, heat_capacity: f64) -> EnvConfig {
    EnvConfig {
        heat_capacity,
        hazard: hazard(condition, timescale),
        ..EnvConfig::default()
    }
}

pub fn repr(kind: ReprKind, timescale: Timescale) -> ReprConfig {
    match timescale {
        Timescale::Short => ReprConfig::short_isi(kind),
        Timescale::Long => match kind {
            ReprKind::Bias => ReprConfig::bias(),
            ReprKind::Oscillator => ReprConfig::oscillator(100),
            ReprKind::BitCascade => ReprConfig::bit_cascade(140),
            ReprKind::Tct => ReprConfig::tct(140, 0.03),
        },
    }
}

/// Linear-walk layout for `n` locations: heat in the middle, both ends safe.
pub fn layout(n: usize) -> EnvConfig {
    EnvConfig {
        num_locations: n,
        heat_location: n / 2,
        hazard_region: (1, n.saturating_sub(2)),
        safe_locations: vec![0, n.saturating_sub(1)],
        ..EnvConfig::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for c in HazardCondition::ALL {
            for ts in [Timescale::Short, Timescale::Long] {
                let env = env(c, ts, 6.0);
                env.validate().unwrap();
                for k in [ReprKind::Bias, ReprKind::Oscillator, ReprKind::BitCascade, ReprKind::Tct] {
                    repr(k, ts).validate(Some(env.hazard.max_isi())).unwrap();
                }
            }
        }
    }

    #[test]
    fn default_layout_is_reproduced() {
        assert_eq!(layout(7), EnvConfig::default());
        layout(9).validate().unwrap();
    }
}
