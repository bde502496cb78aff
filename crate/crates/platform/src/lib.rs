//! Persistence, file formats, HTTP API and operator commands for the SIT
//! platform. The binary `sitlab` wraps [`commands`] and [`api`].

pub mod api;
pub mod commands;
pub mod dataset;
pub mod error;
pub mod events;
pub mod files;
pub mod modelspec;
pub mod report;

pub use error::{PlatformError, Result};
