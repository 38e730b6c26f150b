//! Runner library behind the `hdlsd` binary: experiment configuration,
//! per-mode execution, and summary emission. Kept as a library so
//! integration tests can build configs and read summaries type-safely.

pub mod config;
pub mod run;
