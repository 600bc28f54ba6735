//! Temporal representations.
//!
//! Every representation emits a one-hot vector of length `n` with a presence
//! bit appended at index `n`. They differ only in how the active index moves:
//!
//! | kind        | active index                                         |
//! |-------------|------------------------------------------------------|
//! | bias        | always 0 (`n` = 1)                                   |
//! | oscillator  | `(global_step + phase_offset) mod n`                 |
//! | bit cascade | steps since the last falling edge, saturating at n-1 |
//! | tct         | `floor((1 - exp(-a t)) * n)`, t as for bit cascade   |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReprKind {
    Bias,
    Oscillator,
    BitCascade,
    /// Tile-coded trace.
    Tct,
}

impl ReprKind {
    pub const ALL: [ReprKind; 4] = [Self::Bias, Self::Oscillator, Self::BitCascade, Self::Tct];

    pub fn as_str(self) -> &'static str {
        match self {
            ReprKind::Bias => "bias",
            ReprKind::Oscillator => "oscillator",
            ReprKind::BitCascade => "bit_cascade",
            ReprKind::Tct => "tct",
        }
    }

    /// Whether the active index is driven by falling edges of presence.
    fn resets_on_falling_edge(self) -> bool {
        matches!(self, ReprKind::BitCascade | ReprKind::Tct)
    }
}

impl fmt::Display for ReprKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ReprKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bias" => Ok(ReprKind::Bias),
            "oscillator" => Ok(ReprKind::Oscillator),
            "bit_cascade" | "bit-cascade" => Ok(ReprKind::BitCascade),
            "tct" => Ok(ReprKind::Tct),
            other => Err(Error::config(
                "repr.kind",
                format!("unknown representation `{other}` (expected bias|oscillator|bit_cascade|tct)"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReprConfig {
    pub kind: ReprKind,
    /// Number of temporal features, excluding the presence bit.
    pub length: usize,
    /// Exponential decay constant of the tile-coded trace.
    pub decay_a: f64,
    /// Oscillator only: added to the step count before wrapping.
    pub phase_offset: usize,
}

impl ReprConfig {
    pub fn bias() -> Self {
        Self {
            kind: ReprKind::Bias,
            length: 1,
            decay_a: 0.3,
            phase_offset: 0,
        }
    }

    /// Oscillator whose period matches a fixed onset-to-onset interval.
    /// Episodes start on a falling edge, so offset 0 keeps index 0 on every
    /// falling edge of a period-matched schedule.
    pub fn oscillator(period: usize) -> Self {
        Self {
            kind: ReprKind::Oscillator,
            length: period,
            decay_a: 0.3,
            phase_offset: 0,
        }
    }

    pub fn bit_cascade(length: usize) -> Self {
        Self {
            kind: ReprKind::BitCascade,
            length,
            decay_a: 0.3,
            phase_offset: 0,
        }
    }

    pub fn tct(length: usize, decay_a: f64) -> Self {
        Self {
            kind: ReprKind::Tct,
            length,
            decay_a,
            phase_offset: 0,
        }
    }

    /// Default representation of `kind` for the short-interval schedule
    /// (fixed period 10, intervals up to 13).
    pub fn short_isi(kind: ReprKind) -> Self {
        match kind {
            ReprKind::Bias => Self::bias(),
            ReprKind::Oscillator => Self::oscillator(10),
            ReprKind::BitCascade => Self::bit_cascade(14),
            ReprKind::Tct => Self::tct(14, 0.3),
        }
    }

    /// Feature count including the presence bit.
    pub fn dim(&self) -> usize {
        self.length + 1
    }

    /// Checks the config. `max_isi` is the longest interval the hazard
    /// schedule can produce; a bit cascade must be at least that long so it
    /// never saturates between falling edges.
    pub fn validate(&self, max_isi: Option<u32>) -> Result<()> {
        if self.length == 0 {
            return Err(Error::config("repr.length", "must be at least 1"));
        }
        if self.kind == ReprKind::Bias && self.length != 1 {
            return Err(Error::config("repr.length", "bias representation has exactly one feature"));
        }
        if self.kind == ReprKind::Tct && !(self.decay_a > 0.0 && self.decay_a.is_finite()) {
            return Err(Error::config("repr.decay_a", "must be positive"));
        }
        if let (ReprKind::BitCascade, Some(max)) = (self.kind, max_isi) {
            if self.length < max as usize {
                return Err(Error::config(
                    "repr.length",
                    format!(
                        "bit cascade length {} is shorter than the longest interval {max}",
                        self.length
                    ),
                ));
            }
        }
        Ok(())
    }
}

/// Sparse Boolean feature vector: one temporal index plus an optional
/// presence bit at index `length - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FeatureVector {
    len: usize,
    base: usize,
    presence: bool,
}

impl FeatureVector {
    /// `temporal_len` is `n`; the vector has `n + 1` entries.
    pub fn new(temporal_len: usize, base: usize, presence: bool) -> Self {
        assert!(base < temporal_len, "base index {base} out of range {temporal_len}");
        Self {
            len: temporal_len + 1,
            base,
            presence,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn base_index(&self) -> usize {
        self.base
    }

    pub fn presence(&self) -> bool {
        self.presence
    }

    pub fn active_indices(&self) -> impl Iterator<Item = usize> + '_ {
        std::iter::once(self.base).chain(self.presence.then_some(self.len - 1))
    }

    pub fn active_count(&self) -> usize {
        1 + self.presence as usize
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.len];
        for i in self.active_indices() {
            v[i] = 1.0;
        }
        v
    }
}

/// Stateful feature generator, stepped once per environment step.
#[derive(Debug, Clone)]
pub struct TemporalRepr {
    config: ReprConfig,
    t_since_reset: u64,
    global_step: u64,
    last_presence: bool,
}

impl TemporalRepr {
    pub fn new(config: ReprConfig) -> Result<Self> {
        config.validate(None)?;
        Ok(Self {
            config,
            t_since_reset: 0,
            global_step: 0,
            last_presence: false,
        })
    }

    pub fn config(&self) -> &ReprConfig {
        &self.config
    }

    pub fn t_since_reset(&self) -> u64 {
        self.t_since_reset
    }

    pub fn step(&mut self, presence: bool) -> FeatureVector {
        let n = self.config.length;
        self.global_step += 1;
        if self.config.kind.resets_on_falling_edge() {
            if self.last_presence && !presence {
                self.t_since_reset = 0;
            } else {
                self.t_since_reset += 1;
            }
        }
        self.last_presence = presence;

        let base = match self.config.kind {
            ReprKind::Bias => 0,
            ReprKind::Oscillator => {
                ((self.global_step + self.config.phase_offset as u64) % n as u64) as usize
            }
            ReprKind::BitCascade => (self.t_since_reset as usize).min(n - 1),
            ReprKind::Tct => tct_index(self.config.decay_a, self.t_since_reset, n),
        };
        FeatureVector::new(n, base, presence)
    }

    pub fn reset(&mut self) {
        self.t_since_reset = 0;
        self.global_step = 0;
        self.last_presence = false;
    }
}

/// Active index of a tile-coded trace `t` steps after its last reset.
pub fn tct_index(decay_a: f64, t: u64, n: usize) -> usize {
    let x = 1.0 - (-decay_a * t as f64).exp();
    let x = x.clamp(0.0, 1.0);
    ((x * n as f64).floor() as usize).min(n - 1)
}
