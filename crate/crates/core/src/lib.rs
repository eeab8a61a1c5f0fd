//! Multi-site inventory transfer planning: configuration, MILP model,
//! exact solver, simulator, network plans and narrative reports.

#![allow(clippy::needless_range_loop)]

pub mod config;
pub mod error;
pub mod fixture;
mod float_serde;
pub mod instance;
pub mod model;
pub mod network;
pub mod report;
pub mod sim;
pub mod solver;
