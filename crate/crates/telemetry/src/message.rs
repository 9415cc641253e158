//! Wire format: one JSON object per LF-terminated line.
//!
//! Outbound messages carry exactly the keys `type`, `seq`, `t_sim` and `data`.
//! Inbound lines are operator commands in the same `type`/`data` shape.

use std::fmt::Write as _;

use arachne_core::command::Command;
use arachne_core::controller::MotionCommand;
use arachne_core::sim::EventKind;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Significant digits kept for every number on the wire.
pub const SIGNIFICANT_DIGITS: usize = 9;

/// Rounds to [`SIGNIFICANT_DIGITS`] significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().unwrap()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Temperature { celsius: f64 },
    Smoke { detected: bool },
    Direction { direction: MotionCommand },
    Pose { x: f64, y: f64, heading_deg: f64 },
    Joints { degrees: [f64; 12] },
    Event { kind: EventKind, detail: String },
}

impl Payload {
    pub fn kind(&self) -> &'static str {
        match self {
            Payload::Temperature { .. } => "temperature",
            Payload::Smoke { .. } => "smoke",
            Payload::Direction { .. } => "direction",
            Payload::Pose { .. } => "pose",
            Payload::Joints { .. } => "joints",
            Payload::Event { .. } => "event",
        }
    }

    /// The same payload with every number rounded for the wire.
    pub fn rounded(&self) -> Payload {
        match self {
            Payload::Temperature { celsius } => Payload::Temperature {
                celsius: round_sig(*celsius),
            },
            Payload::Pose { x, y, heading_deg } => Payload::Pose {
                x: round_sig(*x),
                y: round_sig(*y),
                heading_deg: round_sig(*heading_deg),
            },
            Payload::Joints { degrees } => Payload::Joints {
                degrees: degrees.map(round_sig),
            },
            other => other.clone(),
        }
    }

    fn data_json(&self) -> String {
        let v = match self {
            Payload::Temperature { celsius } => serde_json::to_string(&Temperature { celsius: *celsius }),
            Payload::Smoke { detected } => serde_json::to_string(&Smoke { detected: *detected }),
            Payload::Direction { direction } => serde_json::to_string(&DirectionData { direction: *direction }),
            Payload::Pose { x, y, heading_deg } => serde_json::to_string(&Pose {
                x: *x,
                y: *y,
                heading_deg: *heading_deg,
            }),
            Payload::Joints { degrees } => serde_json::to_string(&Joints { degrees: *degrees }),
            Payload::Event { kind, detail } => serde_json::to_string(&EventData {
                kind: *kind,
                detail: detail.clone(),
            }),
        };
        v.expect("payloads always serialize")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TelemetryMessage {
    pub seq: u64,
    pub t_sim: f64,
    pub payload: Payload,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Temperature {
    celsius: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Smoke {
    detected: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DirectionData {
    direction: MotionCommand,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Pose {
    x: f64,
    y: f64,
    heading_deg: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Joints {
    degrees: [f64; 12],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EventData {
    kind: EventKind,
    detail: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMessage {
    #[serde(rename = "type")]
    kind: String,
    seq: u64,
    t_sim: f64,
    data: serde_json::Value,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecodeError {
    #[error("frame error: {0}")]
    Frame(String),
    #[error("schema error: {0}")]
    Schema(String),
}

fn write_number(out: &mut String, x: f64) {
    out.push_str(&serde_json::to_string(&round_sig(x)).expect("finite number"));
}

/// One LF-terminated line. Numbers are rounded to nine significant digits.
///
/// # Panics
/// On a non-finite number, which JSON cannot carry.
pub fn encode(msg: &TelemetryMessage) -> String {
    let p = msg.payload.rounded();
    let mut out = String::with_capacity(96);
    let _ = write!(out, "{{\"type\":\"{}\",\"seq\":{},\"t_sim\":", p.kind(), msg.seq);
    write_number(&mut out, msg.t_sim);
    out.push_str(",\"data\":");
    out.push_str(&p.data_json());
    out.push_str("}\n");
    out
}

fn strip_line(line: &[u8]) -> Result<&str, DecodeError> {
    let line = line.strip_suffix(b"\n").unwrap_or(line);
    let line = line.strip_suffix(b"\r").unwrap_or(line);
    std::str::from_utf8(line).map_err(|e| DecodeError::Frame(e.to_string()))
}

fn parse_value(line: &[u8]) -> Result<serde_json::Value, DecodeError> {
    let text = strip_line(line)?;
    let v: serde_json::Value = serde_json::from_str(text).map_err(|e| DecodeError::Frame(e.to_string()))?;
    if !v.is_object() {
        return Err(DecodeError::Frame("expected a JSON object".into()));
    }
    Ok(v)
}

fn data<T: DeserializeOwned>(v: serde_json::Value) -> Result<T, DecodeError> {
    serde_json::from_value(v).map_err(|e| DecodeError::Schema(e.to_string()))
}

pub fn decode_message(line: &[u8]) -> Result<TelemetryMessage, DecodeError> {
    let raw: RawMessage = data(parse_value(line)?)?;
    let payload = match raw.kind.as_str() {
        "temperature" => {
            let d: Temperature = data(raw.data)?;
            Payload::Temperature { celsius: d.celsius }
        }
        "smoke" => {
            let d: Smoke = data(raw.data)?;
            Payload::Smoke { detected: d.detected }
        }
        "direction" => {
            let d: DirectionData = data(raw.data)?;
            Payload::Direction { direction: d.direction }
        }
        "pose" => {
            let d: Pose = data(raw.data)?;
            Payload::Pose {
                x: d.x,
                y: d.y,
                heading_deg: d.heading_deg,
            }
        }
        "joints" => {
            let d: Joints = data(raw.data)?;
            Payload::Joints { degrees: d.degrees }
        }
        "event" => {
            let d: EventData = data(raw.data)?;
            Payload::Event {
                kind: d.kind,
                detail: d.detail,
            }
        }
        other => return Err(DecodeError::Schema(format!("unknown message type `{other}`"))),
    };
    Ok(TelemetryMessage {
        seq: raw.seq,
        t_sim: raw.t_sim,
        payload,
    })
}

pub fn decode_command(line: &[u8]) -> Result<Command, DecodeError> {
    data(parse_value(line)?)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Decoded {
    Message(TelemetryMessage),
    Command(Command),
}

/// Decodes either direction of traffic. Lines with a `seq` key are messages.
pub fn decode(line: &[u8]) -> Result<Decoded, DecodeError> {
    let v = parse_value(line)?;
    if v.get("seq").is_some() {
        decode_message(line).map(Decoded::Message)
    } else {
        data(v).map(Decoded::Command)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_instance() {
        let m = TelemetryMessage {
            seq: 7,
            t_sim: 1.0,
            payload: Payload::Temperature { celsius: 25.0 },
        };
        assert_eq!(
            encode(&m),
            "{\"type\":\"temperature\",\"seq\":7,\"t_sim\":1.0,\"data\":{\"celsius\":25.0}}\n"
        );
    }

    #[test]
    fn rounding() {
        assert_eq!(round_sig(0.1 + 0.2), 0.3);
        assert_eq!(round_sig(123456789.4), 123456789.0);
        assert_eq!(round_sig(1.23456789012e-7), 1.23456789e-7);
        assert_eq!(round_sig(-0.0), 0.0);
    }

    #[test]
    fn commands() {
        assert_eq!(decode_command(b"{\"type\":\"stop\"}\n").unwrap(), Command::Stop);
        assert!(matches!(decode_command(b"{nope\n"), Err(DecodeError::Frame(_))));
        assert!(matches!(decode_command(b"[1,2]\n"), Err(DecodeError::Frame(_))));
        assert!(matches!(
            decode_command(b"{\"type\":\"jump\"}\n"),
            Err(DecodeError::Schema(_))
        ));
        assert!(matches!(
            decode(b"{\"type\":\"set_task\",\"data\":{\"x\":1.0,\"y\":2.0,\"radius\":0.1}}"),
            Ok(Decoded::Command(Command::SetTask(_)))
        ));
    }

    #[test]
    fn wrong_arity() {
        let line = b"{\"type\":\"joints\",\"seq\":1,\"t_sim\":0.0,\"data\":{\"degrees\":[1,2,3]}}\n";
        assert!(matches!(decode_message(line), Err(DecodeError::Schema(_))));
        let extra = b"{\"type\":\"smoke\",\"seq\":1,\"t_sim\":0.0,\"data\":{\"detected\":true},\"x\":1}\n";
        assert!(matches!(decode_message(extra), Err(DecodeError::Schema(_))));
    }
}
