//! Run manifests written next to every output file.

use serde::Serialize;

use crate::config::ExperimentConfig;

pub const GIT_DESCRIBE: &str = env!("SCRAMBLE_GIT_DESCRIBE");

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: &'static str,
    pub git_describe: &'static str,
    pub config: ExperimentConfig,
    #[serde(rename = "L_tau", skip_serializing_if = "Option::is_none")]
    pub logical_len: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub initial_states: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<&'static str>,
}

impl Manifest {
    pub fn new(command: &str, config: &ExperimentConfig) -> Self {
        Manifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION"),
            git_describe: GIT_DESCRIBE,
            config: config.clone(),
            logical_len: config.logical_len().ok(),
            initial_states: Vec::new(),
            ensemble: None,
        }
    }

    pub fn with_initial_states(mut self, states: Vec<String>) -> Self {
        self.initial_states = states;
        self
    }

    pub fn with_ensemble(mut self, ensemble: &'static str) -> Self {
        self.ensemble = Some(ensemble);
        self
    }
}
