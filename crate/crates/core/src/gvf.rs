//! General value functions over the hazard presence signal.
//!
//! Two questions are supported:
//!
//! - **accumulation**: cumulant is presence, discount is a constant; the
//!   prediction ramps up ahead of a hazard.
//! - **countdown**: cumulant is 1 on every step, discount drops to 0 when the
//!   hazard is present; the prediction counts the steps to the next hazard.
//!
//! Cumulant and discount are evaluated on the *destination* step of each
//! transition. Predictions are linear in a sparse Boolean [`FeatureVector`]
//! and learned with accumulating-trace TD(λ).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::repr::FeatureVector;

/// Discount products below this are treated as the end of the return.
pub const RETURN_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GvfKind {
    Accumulation,
    Countdown,
}

impl GvfKind {
    pub fn as_str(self) -> &'static str {
        match self {
            GvfKind::Accumulation => "accumulation",
            GvfKind::Countdown => "countdown",
        }
    }
}

impl fmt::Display for GvfKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GvfKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "accumulation" | "acc" => Ok(GvfKind::Accumulation),
            "countdown" => Ok(GvfKind::Countdown),
            other => Err(Error::config(
                "gvf.kind",
                format!("unknown question `{other}` (expected accumulation|countdown)"),
            )),
        }
    }
}

/// A prediction question together with its learning parameters and the
/// threshold that turns the prediction into a token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GvfSpec {
    pub kind: GvfKind,
    /// Constant discount of the accumulation question.
    pub gamma: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub threshold: f64,
}

impl GvfSpec {
    pub fn accumulation() -> Self {
        Self {
            kind: GvfKind::Accumulation,
            gamma: 0.9,
            lambda: 0.9,
            alpha: 0.1,
            threshold: 2.05,
        }
    }

    pub fn countdown() -> Self {
        Self {
            kind: GvfKind::Countdown,
            gamma: 0.9,
            lambda: 0.9,
            alpha: 0.1,
            threshold: 3.0,
        }
    }

    pub fn of_kind(kind: GvfKind) -> Self {
        match kind {
            GvfKind::Accumulation => Self::accumulation(),
            GvfKind::Countdown => Self::countdown(),
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::config("gvf.lambda", format!("{} not in [0, 1]", self.lambda)));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::config("gvf.alpha", format!("{} must be positive", self.alpha)));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::config("gvf.gamma", format!("{} not in [0, 1)", self.gamma)));
        }
        if !self.threshold.is_finite() {
            return Err(Error::config("gvf.tau", "must be finite"));
        }
        Ok(())
    }

    /// Cumulant and discount for a transition whose destination step has
    /// presence `presence_next`.
    pub fn signals(&self, presence_next: bool) -> CumulantGamma {
        match self.kind {
            GvfKind::Accumulation => CumulantGamma {
                cumulant: if presence_next { 1.0 } else { 0.0 },
                gamma: self.gamma,
            },
            GvfKind::Countdown => CumulantGamma {
                cumulant: 1.0,
                gamma: if presence_next { 0.0 } else { 1.0 },
            },
        }
    }

    /// Accumulation tokens fire strictly above the threshold, countdown
    /// tokens at or below it.
    pub fn tokenize(&self, prediction: f64) -> bool {
        match self.kind {
            GvfKind::Accumulation => prediction > self.threshold,
            GvfKind::Countdown => prediction <= self.threshold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CumulantGamma {
    pub cumulant: f64,
    pub gamma: f64,
}

/// Linear TD(λ) learner for one question.
#[derive(Debug, Clone)]
pub struct GvfLearner {
    spec: GvfSpec,
    weights: Vec<f64>,
    trace: Vec<f64>,
}

impl GvfLearner {
    /// Zero-initialised weights and trace of dimension `dim`.
    pub fn new(spec: GvfSpec, dim: usize) -> Result<Self> {
        spec.validate()?;
        if dim == 0 {
            return Err(Error::config("repr.length", "feature dimension must be positive"));
        }
        Ok(Self {
            spec,
            weights: vec![0.0; dim],
            trace: vec![0.0; dim],
        })
    }

    pub fn spec(&self) -> &GvfSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn trace(&self) -> &[f64] {
        &self.trace
    }

    pub fn set_weights(&mut self, weights: &[f64]) -> Result<()> {
        self.check_dim(weights.len())?;
        self.weights.copy_from_slice(weights);
        Ok(())
    }

    pub fn predict(&self, x: &FeatureVector) -> f64 {
        debug_assert_eq!(x.len(), self.dim());
        x.active_indices().map(|i| self.weights[i]).sum()
    }

    /// One TD(λ) update on the transition `x_t -> x_next`, returning the TD
    /// error. Follows the order: accumulate trace, compute error, move
    /// weights along the trace, decay the trace by the destination discount.
    pub fn td_lambda_step(
        &mut self,
        x_t: &FeatureVector,
        x_next: &FeatureVector,
        cumulant: f64,
        gamma_next: f64,
    ) -> Result<f64> {
        self.check_dim(x_t.len())?;
        self.check_dim(x_next.len())?;

        for i in x_t.active_indices() {
            self.trace[i] += 1.0;
        }
        let delta = cumulant + gamma_next * self.predict(x_next) - self.predict(x_t);
        let step = self.spec.alpha * delta;
        let decay = gamma_next * self.spec.lambda;
        for (w, e) in self.weights.iter_mut().zip(self.trace.iter_mut()) {
            *w += step * *e;
            *e *= decay;
        }
        Ok(delta)
    }

    /// Learns from a transition using the question's own cumulant and discount.
    pub fn observe(&mut self, x_t: &FeatureVector, x_next: &FeatureVector) -> Result<f64> {
        let CumulantGamma { cumulant, gamma } = self.spec.signals(x_next.presence());
        self.td_lambda_step(x_t, x_next, cumulant, gamma)
    }

    pub fn reset_trace(&mut self) {
        self.trace.iter_mut().for_each(|e| *e = 0.0);
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::ContractViolation(format!(
                "feature length {len} does not match learner dimension {}",
                self.dim()
            )));
        }
        Ok(())
    }
}

/// Discounted return from step `t` of a recorded presence stream:
///
/// `G_t = sum_k (prod_{j=1..k} gamma_{t+j}) C_{t+k+1}`
///
/// Summation stops once the running discount falls below
/// [`RETURN_TOLERANCE`]. Errors if the stream ends first.
pub fn forward_view_return(presence: &[bool], t: usize, spec: &GvfSpec) -> Result<f64> {
    let mut g = 0.0;
    let mut discount = 1.0;
    for &p in presence.iter().skip(t + 1) {
        let CumulantGamma { cumulant, gamma } = spec.signals(p);
        g += discount * cumulant;
        discount *= gamma;
        if discount < RETURN_TOLERANCE {
            return Ok(g);
        }
    }
    if spec.kind == GvfKind::Countdown {
        Err(Error::NoFuturePresence { t })
    } else {
        Err(Error::InsufficientStream { t, residual: discount })
    }
}

/// Return from position `t` of an infinitely repeated `cycle`, with the
/// tail summed in closed form: one period contributes `S` and scales what
/// follows by `P`, so `G = S / (1 - P)`.
pub fn forward_view_return_periodic(cycle: &[bool], t: usize, spec: &GvfSpec) -> Result<f64> {
    let period = cycle.len();
    if period == 0 {
        return Err(Error::ContractViolation("empty presence cycle".into()));
    }
    let mut s = 0.0;
    let mut discount = 1.0;
    for k in 0..period {
        let CumulantGamma { cumulant, gamma } = spec.signals(cycle[(t + k + 1) % period]);
        s += discount * cumulant;
        discount *= gamma;
    }
    if discount >= 1.0 {
        return Err(Error::NoFuturePresence { t });
    }
    Ok(s / (1.0 - discount))
}
