//! Command-line front end and explorer server for the `hyperwalk` engine.

pub mod app;
pub mod config;
pub mod server;
pub mod session;
