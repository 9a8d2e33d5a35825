//! Language server for micro-PVS.

pub mod client;
pub mod debounce;
pub mod jsonrpc;
pub mod lsp;
pub mod providers;
pub mod server;
pub mod sessions;

pub use server::{serve, Config, Exit};
