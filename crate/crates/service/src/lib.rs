//! Persistence, job queue, REST API and external text-generation client
//! for the transfer planner.

pub mod api;
pub mod llm;
pub mod service;
pub mod store;

pub use service::{Service, ServiceError};
pub use store::{JobState, RunRecord, RunSummary, Store};
