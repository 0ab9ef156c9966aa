//! Teleoperation service for a learned serpentine-arm controller.
//!
//! Each WebSocket connection to `/ws` owns a [`Session`]: the client sends JSON
//! commands (`set_target`, `jog`, `set_mode`, `get_state`) and receives either a
//! `state` message carrying the full pose or an `error` message. Full-robotic
//! mode places the end effector through the learned table; telerobotic mode
//! jogs single joints, clamped to their limits.

pub mod protocol;
pub mod server;
pub mod session;

pub use protocol::{ClientMessage, ErrorCode, Mode, ServerMessage};
pub use server::{router, serve};
pub use session::{Controller, Session};
