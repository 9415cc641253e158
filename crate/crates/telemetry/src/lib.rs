//! Live telemetry for the simulator: newline-delimited JSON over TCP and
//! websockets, plus the operator command channel.

pub mod drive;
pub mod message;
pub mod publisher;
pub mod server;

pub use drive::{drive, DriveOptions};
pub use message::{decode, decode_command, decode_message, encode, DecodeError, Decoded, Payload, TelemetryMessage};
pub use publisher::Publisher;
pub use server::{BindError, Hub, Inbound, ServeConfig, Server, DEFAULT_TCP_PORT, DEFAULT_WS_PORT};
