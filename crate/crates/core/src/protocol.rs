//! Ground-station command language, launch state machine and telemetry
//! frames.
//!
//! Grammar, one command per line, case-sensitive, single spaces:
//!
//! ```text
//! SET AMP <decimal>     amplitude in degrees, [0, 80]
//! SET FREQ <decimal>    frequency in Hz, [0, 7]
//! START
//! STOP
//! STATUS
//! ```
//!
//! `<decimal>` is `digits[.digits]`.

use std::fmt;

use thiserror::Error;

use crate::dynamics::FullState;
use crate::fmt::sig9;
use crate::params::{BodyState, TailCommand};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Command {
    SetAmplitude(f64),
    SetFrequency(f64),
    Start,
    Stop,
    Status,
}

impl fmt::Display for Command {
    /// Canonical text; `parse_command` maps it back to the same command.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Command::SetAmplitude(a) => write!(f, "SET AMP {a}"),
            Command::SetFrequency(hz) => write!(f, "SET FREQ {hz}"),
            Command::Start => f.write_str("START"),
            Command::Stop => f.write_str("STOP"),
            Command::Status => f.write_str("STATUS"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("syntax: {0}")]
    Syntax(String),
    #[error("range: {quantity} {value} outside [0, {max}]")]
    Range {
        quantity: &'static str,
        value: f64,
        max: f64,
    },
    #[error("malformed telemetry frame: {0}")]
    MalformedFrame(String),
}

impl ProtocolError {
    /// In-band reply for a rejected line.
    pub fn reply(&self) -> String {
        match self {
            ProtocolError::Syntax(detail) => format!("ERR SYNTAX {detail}"),
            ProtocolError::Range { quantity, value, max } => {
                format!("ERR RANGE {quantity} {value} outside [0, {max}]")
            }
            ProtocolError::MalformedFrame(_) => format!("ERR {self}"),
        }
    }
}

fn is_decimal(s: &str) -> bool {
    let (int, frac) = match s.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (s, None),
    };
    let digits = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());
    digits(int) && frac.is_none_or(digits)
}

fn parse_bounded(text: &str, quantity: &'static str, max: f64) -> Result<f64, ProtocolError> {
    if !is_decimal(text) {
        return Err(ProtocolError::Syntax(format!("`{text}` is not a decimal")));
    }
    let value: f64 = text
        .parse()
        .map_err(|_| ProtocolError::Syntax(format!("`{text}` is not a decimal")))?;
    if value > max {
        return Err(ProtocolError::Range {
            quantity,
            value,
            max,
        });
    }
    Ok(value)
}

pub fn parse_command(line: &str) -> Result<Command, ProtocolError> {
    let words: Vec<&str> = line.split(' ').collect();
    match words.as_slice() {
        ["SET", "AMP", v] => {
            parse_bounded(v, "amplitude", TailCommand::MAX_AMPLITUDE_DEG).map(Command::SetAmplitude)
        }
        ["SET", "FREQ", v] => {
            parse_bounded(v, "frequency", TailCommand::MAX_FREQUENCY_HZ).map(Command::SetFrequency)
        }
        ["START"] => Ok(Command::Start),
        ["STOP"] => Ok(Command::Stop),
        ["STATUS"] => Ok(Command::Status),
        _ => Err(ProtocolError::Syntax(format!("unrecognised command `{line}`"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Idle,
    Running,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Idle => "IDLE",
            Mode::Running => "RUNNING",
        })
    }
}

/// Launch state. Parameters are frozen for the duration of a launch.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SessionState {
    pub mode: Mode,
    pub pending_cmd: TailCommand,
    /// Command captured at `START`; `Some` exactly when running.
    pub active_cmd: Option<TailCommand>,
}

impl SessionState {
    /// The command currently in effect for status reports.
    pub fn effective_cmd(&self) -> TailCommand {
        self.active_cmd.unwrap_or(self.pending_cmd)
    }
}

pub const REPLY_OK: &str = "OK";
pub const REPLY_RUNNING: &str = "OK RUNNING";
pub const REPLY_IDLE: &str = "OK IDLE";
pub const REPLY_LOCKED: &str = "ERR LOCKED";
pub const REPLY_BUSY: &str = "ERR BUSY";

/// Transition table:
///
/// | mode    | SET        | START                | STOP          | STATUS |
/// |---------|------------|----------------------|---------------|--------|
/// | Idle    | OK, update | OK RUNNING, freeze   | OK IDLE       | STATUS |
/// | Running | ERR LOCKED | OK RUNNING, no change| OK IDLE, idle | STATUS |
pub fn session_step(state: &SessionState, cmd: &Command) -> (SessionState, String) {
    let mut next = *state;
    let reply = match (state.mode, cmd) {
        (Mode::Idle, Command::SetAmplitude(a)) => {
            next.pending_cmd.amplitude = *a;
            REPLY_OK.to_string()
        }
        (Mode::Idle, Command::SetFrequency(hz)) => {
            next.pending_cmd.frequency = *hz;
            REPLY_OK.to_string()
        }
        (Mode::Running, Command::SetAmplitude(_) | Command::SetFrequency(_)) => {
            REPLY_LOCKED.to_string()
        }
        (Mode::Idle, Command::Start) => {
            next.mode = Mode::Running;
            next.active_cmd = Some(state.pending_cmd);
            REPLY_RUNNING.to_string()
        }
        (Mode::Running, Command::Start) => REPLY_RUNNING.to_string(),
        (_, Command::Stop) => {
            next.mode = Mode::Idle;
            next.active_cmd = None;
            REPLY_IDLE.to_string()
        }
        (_, Command::Status) => {
            let c = state.effective_cmd();
            format!("STATUS {} AMP {} FREQ {}", state.mode, c.amplitude, c.frequency)
        }
    };
    (next, reply)
}

/// `T <t> <x> <y> <yaw> <u> <v> <r>`, 9 significant digits per field.
pub fn encode_telemetry(state: &FullState) -> String {
    let b = &state.body;
    let fields = [state.t, b.x, b.y, b.yaw, b.u, b.v, b.r].map(sig9);
    format!("T {}", fields.join(" "))
}

/// Inverse of [`encode_telemetry`]. Tail angles are not transmitted and come
/// back as zero.
pub fn decode_telemetry(frame: &str) -> Result<FullState, ProtocolError> {
    let malformed = || ProtocolError::MalformedFrame(frame.to_string());
    let mut words = frame.split(' ');
    if words.next() != Some("T") {
        return Err(malformed());
    }
    let values = words
        .map(|w| w.parse::<f64>().map_err(|_| malformed()))
        .collect::<Result<Vec<_>, _>>()?;
    let [t, x, y, yaw, u, v, r] = values[..] else {
        return Err(malformed());
    };
    Ok(FullState {
        body: BodyState { x, y, yaw, u, v, r },
        t,
        ..FullState::default()
    })
}
