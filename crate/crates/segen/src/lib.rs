//! File formats, configuration and the end-to-end runner built on
//! `segen-core`.

pub mod config;
pub mod error;
pub mod io;
pub mod pipeline;

pub use config::RunConfig;
pub use error::RunError;
