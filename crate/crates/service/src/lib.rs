//! Real-time play sessions: one environment and co-agent per connection,
//! advanced on a wall-clock tick, driven by JSON messages.

pub mod protocol;
pub mod server;
pub mod session;

pub use protocol::{ClientMsg, ServerMsg, SessionConfig, StateMsg};
pub use server::{handle_connection, router, serve_tcp, serve_ws, spawn_connection, ServerContext};
pub use session::Session;
