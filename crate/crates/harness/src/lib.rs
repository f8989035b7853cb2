//! File formats, CLI plumbing and the local session service for
//! `stereo-core`.

mod error;

pub mod dataset;
pub mod png;
pub mod presets;
pub mod report;
pub mod server;
pub mod session;

pub use error::{HarnessError, Result};
