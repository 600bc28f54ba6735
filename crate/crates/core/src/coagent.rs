//! Co-agents: observe hazard presence, emit one Boolean token per step.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gvf::{GvfLearner, GvfSpec};
use crate::repr::{FeatureVector, ReprConfig, TemporalRepr};

/// The oracle signals when the next onset is at most this many steps away.
pub const ORACLE_HORIZON: u32 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoAgentKind {
    /// No co-agent; the token is always 0.
    None,
    /// Perfect knowledge of the steps to the next onset.
    Oracle,
    /// Learns a GVF over a temporal representation and thresholds it.
    Pavlovian { repr: ReprConfig, gvf: GvfSpec },
}

impl CoAgentKind {
    pub fn pavlovian(repr: ReprConfig, gvf: GvfSpec) -> Self {
        CoAgentKind::Pavlovian { repr, gvf }
    }

    pub fn needs_peek(&self) -> bool {
        matches!(self, CoAgentKind::Oracle)
    }

    pub fn validate(&self, max_isi: u32) -> Result<()> {
        if let CoAgentKind::Pavlovian { repr, gvf } = self {
            repr.validate(Some(max_isi))?;
            gvf.validate()?;
        }
        Ok(())
    }
}

impl fmt::Display for CoAgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoAgentKind::None => f.write_str("none"),
            CoAgentKind::Oracle => f.write_str("oracle"),
            CoAgentKind::Pavlovian { repr, gvf } => {
                write!(f, "{}-{}-{}", repr.kind, gvf.kind, gvf.alpha)
            }
        }
    }
}

/// What a co-agent emitted on one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TokenRecord {
    pub step: u64,
    pub token: bool,
    /// Zero for the oracle and the absent co-agent.
    pub prediction: f64,
    /// Zero when no update was made.
    pub td_error: f64,
}

/// Learned signalling co-agent: representation, GVF learner and threshold.
#[derive(Debug, Clone)]
pub struct PavlovianCoAgent {
    repr: TemporalRepr,
    learner: GvfLearner,
    prev: Option<FeatureVector>,
}

impl PavlovianCoAgent {
    pub fn new(repr: ReprConfig, gvf: GvfSpec) -> Result<Self> {
        let dim = repr.dim();
        Ok(Self {
            repr: TemporalRepr::new(repr)?,
            learner: GvfLearner::new(gvf, dim)?,
            prev: None,
        })
    }

    pub fn learner(&self) -> &GvfLearner {
        &self.learner
    }

    pub fn learner_mut(&mut self) -> &mut GvfLearner {
        &mut self.learner
    }

    /// Feature vector emitted on the most recent step.
    pub fn last_features(&self) -> Option<&FeatureVector> {
        self.prev.as_ref()
    }

    /// Returns `(token, prediction, td_error)` for this step.
    fn step(&mut self, presence: bool) -> Result<(bool, f64, f64)> {
        let x_now = self.repr.step(presence);
        let td_error = match self.prev {
            Some(x_prev) => self.learner.observe(&x_prev, &x_now)?,
            None => 0.0,
        };
        self.prev = Some(x_now);
        let prediction = self.learner.predict(&x_now);
        Ok((self.learner.spec().tokenize(prediction), prediction, td_error))
    }

    fn reset_episode(&mut self) {
        self.repr.reset();
        self.learner.reset_trace();
        self.prev = None;
    }
}

#[derive(Debug, Clone)]
pub enum CoAgent {
    None,
    Oracle,
    Pavlovian(Box<PavlovianCoAgent>),
}

impl CoAgent {
    pub fn new(kind: &CoAgentKind) -> Result<Self> {
        Ok(match kind {
            CoAgentKind::None => CoAgent::None,
            CoAgentKind::Oracle => CoAgent::Oracle,
            CoAgentKind::Pavlovian { repr, gvf } => {
                CoAgent::Pavlovian(Box::new(PavlovianCoAgent::new(repr.clone(), gvf.clone())?))
            }
        })
    }

    pub fn pavlovian(&self) -> Option<&PavlovianCoAgent> {
        match self {
            CoAgent::Pavlovian(p) => Some(p),
            _ => None,
        }
    }

    pub fn pavlovian_mut(&mut self) -> Option<&mut PavlovianCoAgent> {
        match self {
            CoAgent::Pavlovian(p) => Some(p),
            _ => None,
        }
    }

    /// One step of signalling. `peek` is the environment's steps-to-next-onset;
    /// the oracle requires it and a learning co-agent must not be given it.
    pub fn step(&mut self, step: u64, presence: bool, peek: Option<u32>) -> Result<TokenRecord> {
        let (token, prediction, td_error) = match self {
            CoAgent::None => (false, 0.0, 0.0),
            CoAgent::Oracle => {
                let steps = peek.ok_or_else(|| {
                    Error::ContractViolation("oracle co-agent needs the steps-to-onset peek".into())
                })?;
                (presence || steps <= ORACLE_HORIZON, 0.0, 0.0)
            }
            CoAgent::Pavlovian(p) => {
                if peek.is_some() {
                    return Err(Error::ContractViolation(
                        "a learning co-agent must only observe presence".into(),
                    ));
                }
                p.step(presence)?
            }
        };
        Ok(TokenRecord {
            step,
            token,
            prediction,
            td_error,
        })
    }

    /// Episode boundary: representation counters and eligibility traces are
    /// cleared, learned weights are kept.
    pub fn reset_episode(&mut self) {
        if let CoAgent::Pavlovian(p) = self {
            p.reset_episode();
        }
    }
}
