//! Bundled five-site scenario (weeks 30 to 38, three frozen weeks).

use crate::config::NetworkConfig;

pub const FIXTURE_JSON: &str = include_str!("../fixtures/dc_network.json");

pub fn fixture_config() -> NetworkConfig {
    NetworkConfig::from_json(FIXTURE_JSON).expect("bundled fixture parses")
}
