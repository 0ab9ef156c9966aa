//! Wire messages. One JSON object per text frame, discriminated by `type`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientMessage {
    SetTarget { x: f64, y: f64, z: f64 },
    Jog { dof: i64, delta: f64 },
    /// The mode string is checked by the session so an unknown value gets its own error code.
    SetMode { mode: String },
    GetState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    FullRobotic,
    Telerobotic,
}

impl Mode {
    pub fn parse(s: &str) -> Option<Mode> {
        match s {
            "full_robotic" => Some(Mode::FullRobotic),
            "telerobotic" => Some(Mode::Telerobotic),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    State {
        mode: Mode,
        dofs: [f64; 10],
        points: Vec<[f64; 3]>,
        ee: [f64; 3],
        target: Option<[f64; 3]>,
        /// Feet.
        deviation: Option<f64>,
    },
    Error {
        code: ErrorCode,
        detail: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    ParseError,
    InvalidValue,
    WrongMode,
    UnknownMode,
    BadDof,
    OutOfWorkspace,
    UnconvergedCell,
    Internal,
}

impl ServerMessage {
    pub fn error(code: ErrorCode, detail: impl Into<String>) -> Self {
        ServerMessage::Error {
            code,
            detail: detail.into(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("reply serializes")
    }
}
