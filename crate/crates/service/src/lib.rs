//! HTTP story service on top of the `taletailor` engine, a provider-protocol
//! server backed by the built-in models, and the work behind the
//! `taletailor` command-line tool.

pub mod api;
pub mod commands;
pub mod engine;
pub mod provider_server;
pub mod store;

pub use api::{router, AppState};
pub use engine::{BuiltinProvider, Engine, EngineConfig};
pub use store::Store;
