//! Study platform: a single-file store of participants, route records,
//! analyses, packages and feedback, with an HTTP API and a batch CLI on top.

pub mod http;
pub mod import;
pub mod model;
pub mod report;
pub mod service;
pub mod store;

pub use model::{PlatformError, Result};
pub use service::{Config, Platform};
