//! Wire messages. Every frame is one JSON object with a `type` field; fields
//! a side does not know are ignored.

use frost_core::env::{Action, HazardCondition};
use frost_core::gvf::GvfKind;
use frost_core::repr::ReprKind;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

pub const MIN_TICK_MS: u64 = 50;
pub const DEFAULT_TICK_MS: u64 = 500;
pub const DEFAULT_DURATION_STEPS: u32 = 600;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("missing field `{0}`")]
    Missing(&'static str),
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("unknown message type `{0}`")]
    UnknownType(String),
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ProtocolError {
    ProtocolError::Invalid {
        field,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoAgentChoice {
    None,
    Oracle,
    Pavlovian,
}

/// Resolved session parameters, echoed back in `created`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub condition: HazardCondition,
    pub coagent: CoAgentChoice,
    pub repr: ReprKind,
    pub gvf: GvfKind,
    pub alpha_gvf: f64,
    pub heat_capacity: f64,
    pub tick_ms: u64,
    pub duration_steps: u32,
    pub seed: u64,
    pub persist_weights: bool,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            condition: HazardCondition::Fixed,
            coagent: CoAgentChoice::Pavlovian,
            repr: ReprKind::BitCascade,
            gvf: GvfKind::Accumulation,
            alpha_gvf: 0.1,
            heat_capacity: 6.0,
            tick_ms: DEFAULT_TICK_MS,
            duration_steps: DEFAULT_DURATION_STEPS,
            seed: 0,
            persist_weights: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClientMsg {
    Create(SessionConfig),
    Action(Action),
    Stop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateMsg {
    pub t: u32,
    pub position: usize,
    pub hazard: bool,
    pub token: bool,
    pub heat: f64,
    pub score: u32,
    pub reward: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMsg {
    Created { session_id: String, config: SessionConfig },
    State(StateMsg),
    Done { score: u32, trace_ref: String },
    Error { message: String },
}

impl ServerMsg {
    pub fn error(message: impl Into<String>) -> Self {
        ServerMsg::Error {
            message: message.into(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("server messages always serialize")
    }
}

fn get_str<'a>(obj: &'a Map<String, Value>, field: &'static str) -> Result<Option<&'a str>, ProtocolError> {
    match obj.get(field) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s)),
        Some(_) => Err(invalid(field, "expected a string")),
    }
}

fn get_u64(obj: &Map<String, Value>, field: &'static str) -> Result<Option<u64>, ProtocolError> {
    match obj.get(field) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => v
            .as_u64()
            .map(Some)
            .ok_or_else(|| invalid(field, "expected a non-negative integer")),
    }
}

fn get_f64(obj: &Map<String, Value>, field: &'static str) -> Result<Option<f64>, ProtocolError> {
    match obj.get(field) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => v.as_f64().map(Some).ok_or_else(|| invalid(field, "expected a number")),
    }
}

fn get_bool(obj: &Map<String, Value>, field: &'static str) -> Result<Option<bool>, ProtocolError> {
    match obj.get(field) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::Bool(b)) => Ok(Some(*b)),
        Some(_) => Err(invalid(field, "expected true or false")),
    }
}

fn parse_with<T, E: std::fmt::Display>(
    obj: &Map<String, Value>,
    field: &'static str,
    parse: impl FnOnce(&str) -> Result<T, E>,
) -> Result<Option<T>, ProtocolError> {
    get_str(obj, field)?
        .map(|s| parse(s).map_err(|e| invalid(field, e.to_string())))
        .transpose()
}

fn parse_create(obj: &Map<String, Value>) -> Result<SessionConfig, ProtocolError> {
    let mut c = SessionConfig::default();
    if let Some(v) = parse_with(obj, "condition", str::parse::<HazardCondition>)? {
        c.condition = v;
    }
    if let Some(v) = get_str(obj, "coagent")? {
        c.coagent = match v {
            "none" => CoAgentChoice::None,
            "oracle" => CoAgentChoice::Oracle,
            "pavlovian" => CoAgentChoice::Pavlovian,
            other => {
                return Err(invalid(
                    "coagent",
                    format!("unknown co-agent `{other}` (expected none|oracle|pavlovian)"),
                ))
            }
        };
    }
    if let Some(v) = parse_with(obj, "repr", str::parse::<ReprKind>)? {
        c.repr = v;
    }
    if let Some(v) = parse_with(obj, "gvf", str::parse::<GvfKind>)? {
        c.gvf = v;
    }
    if let Some(v) = get_f64(obj, "alpha_gvf")? {
        if !(v > 0.0 && v.is_finite()) {
            return Err(invalid("alpha_gvf", "must be positive"));
        }
        c.alpha_gvf = v;
    }
    if let Some(v) = get_f64(obj, "heat_capacity")? {
        c.heat_capacity = v;
    }
    if let Some(v) = get_u64(obj, "tick_ms")? {
        if v < MIN_TICK_MS {
            return Err(invalid("tick_ms", format!("{v} is below the minimum of {MIN_TICK_MS}")));
        }
        c.tick_ms = v;
    }
    if let Some(v) = get_u64(obj, "duration_steps")? {
        if v == 0 || v > u32::MAX as u64 {
            return Err(invalid("duration_steps", "must be between 1 and 2^32 - 1"));
        }
        c.duration_steps = v as u32;
    }
    if let Some(v) = get_u64(obj, "seed")? {
        c.seed = v;
    }
    if let Some(v) = get_bool(obj, "persist_weights")? {
        c.persist_weights = v;
    }
    Ok(c)
}

fn parse_action(obj: &Map<String, Value>) -> Result<Action, ProtocolError> {
    let v = obj.get("move").ok_or(ProtocolError::Missing("move"))?;
    let m = v
        .as_i64()
        .ok_or_else(|| invalid("move", "expected -1, 0 or 1"))?;
    Action::try_from(m).map_err(|_| invalid("move", format!("{m} is not one of -1, 0, 1")))
}

impl ClientMsg {
    pub fn parse(text: &str) -> Result<ClientMsg, ProtocolError> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| ProtocolError::Malformed(e.to_string()))?;
        let Value::Object(obj) = value else {
            return Err(ProtocolError::Malformed("expected a JSON object".into()));
        };
        let ty = get_str(&obj, "type")?.ok_or(ProtocolError::Missing("type"))?;
        match ty {
            "create" => parse_create(&obj).map(ClientMsg::Create),
            "action" => parse_action(&obj).map(ClientMsg::Action),
            "stop" => Ok(ClientMsg::Stop),
            other => Err(ProtocolError::UnknownType(other.to_string())),
        }
    }
}
