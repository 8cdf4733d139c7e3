//! Experiment configuration: a JSON file merged with command-line overrides.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use scrambling_core::basis::{logical_len, validate_sector};
use scrambling_core::{Error, LogicalConfig, Result};

pub const DEFAULT_SAMPLES: usize = 15_000;
pub const DEFAULT_INITIAL_STATES: usize = 10;
pub const DEFAULT_T_INF: f64 = 1e6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
}

/// Either an explicit list of times or a generated range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeGrid {
    Explicit(Vec<f64>),
    Range {
        t_min: f64,
        t_max: f64,
        count: usize,
        spacing: Spacing,
    },
}

impl TimeGrid {
    pub fn points(&self) -> Result<Vec<f64>> {
        let pts = match self {
            TimeGrid::Explicit(v) => v.clone(),
            TimeGrid::Range {
                t_min,
                t_max,
                count,
                spacing,
            } => {
                if *count == 0 {
                    Vec::new()
                } else if *count == 1 {
                    vec![*t_min]
                } else {
                    let step = |i: usize| i as f64 / (*count - 1) as f64;
                    match spacing {
                        Spacing::Linear => (0..*count).map(|i| t_min + (t_max - t_min) * step(i)).collect(),
                        Spacing::Log => {
                            if !(*t_min > 0.0) || !(*t_max > 0.0) {
                                return Err(Error::InvalidArgument("log-spaced grids need positive bounds".into()));
                            }
                            (0..*count)
                                .map(|i| (t_min.ln() + (t_max.ln() - t_min.ln()) * step(i)).exp())
                                .collect()
                        }
                    }
                }
            }
        };
        if pts.is_empty() {
            return Err(Error::InvalidArgument("time grid is empty".into()));
        }
        if pts.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::InvalidArgument("times must be finite and non-negative".into()));
        }
        Ok(pts)
    }
}

/// `"ground"`, `"random-product"` or an explicit logical bitstring.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialState {
    Ground,
    RandomProduct,
    Explicit(LogicalConfig),
}

impl std::str::FromStr for InitialState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ground" => Ok(InitialState::Ground),
            "random-product" => Ok(InitialState::RandomProduct),
            other => Ok(InitialState::Explicit(other.parse()?)),
        }
    }
}

impl std::fmt::Display for InitialState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InitialState::Ground => f.write_str("ground"),
            InitialState::RandomProduct => f.write_str("random-product"),
            InitialState::Explicit(m) => write!(f, "{m}"),
        }
    }
}

impl Serialize for InitialState {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for InitialState {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Every field is optional so that a file and flags can be layered.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(rename = "L", skip_serializing_if = "Option::is_none")]
    pub sites: Option<usize>,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub particles: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<TimeGrid>,
    #[serde(rename = "M_s", skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<InitialState>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_initial_states: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    /// Reference time for the long-time spectrum.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_inf: Option<f64>,
    /// Average the long-time spectrum over 5 log-spaced times in
    /// `[t_inf / 10, t_inf]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_inf_average: Option<bool>,
    /// Inclusive time window for power-law or plateau fits.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_window: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// Perturbed site of the OTOC, 1-based.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub site: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    /// Compute `n(k)` in addition to `S(k)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub momentum: Option<bool>,
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::InvalidArgument(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::InvalidArgument(format!("bad config {}: {e}", path.display())))
    }

    /// Fields set in `other` replace those in `self`.
    pub fn overlay(mut self, other: ExperimentConfig) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(
            sites,
            particles,
            t_grid,
            samples,
            seed,
            threads,
            initial_state,
            n_initial_states,
            output,
            format,
            t_inf,
            t_inf_average,
            fit_window,
            beta,
            site,
            threshold,
            momentum
        );
        self
    }

    /// Validated `(L, N)`.
    pub fn sector(&self) -> Result<(usize, usize)> {
        let l = self.sites.ok_or_else(|| Error::InvalidArgument("L is required".into()))?;
        let n = self.particles.ok_or_else(|| Error::InvalidArgument("N is required".into()))?;
        validate_sector(l, n)?;
        Ok((l, n))
    }

    pub fn logical_len(&self) -> Result<usize> {
        let (l, n) = self.sector()?;
        Ok(logical_len(l, n))
    }

    pub fn times(&self) -> Result<Vec<f64>> {
        self.t_grid
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("t_grid is required".into()))?
            .points()
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::InvalidArgument("a seed is mandatory for sampling runs".into()))
    }

    pub fn samples(&self) -> Result<usize> {
        match self.samples.unwrap_or(DEFAULT_SAMPLES) {
            0 => Err(Error::InvalidArgument("M_s must be positive".into())),
            m => Ok(m),
        }
    }

    pub fn threads(&self) -> usize {
        self.threads.unwrap_or(0)
    }

    pub fn initial_state(&self) -> InitialState {
        self.initial_state.clone().unwrap_or(InitialState::RandomProduct)
    }

    pub fn n_initial_states(&self) -> Result<usize> {
        match self.n_initial_states.unwrap_or(DEFAULT_INITIAL_STATES) {
            0 => Err(Error::InvalidArgument("n_initial_states must be positive".into())),
            n => Ok(n),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        let g = TimeGrid::Range {
            t_min: 1.0,
            t_max: 100.0,
            count: 3,
            spacing: Spacing::Log,
        };
        let p = g.points().unwrap();
        assert!((p[1] - 10.0).abs() < 1e-12);
        assert!(TimeGrid::Explicit(vec![]).points().is_err());
        let json: TimeGrid = serde_json::from_str(r#"{"t_min":0,"t_max":2,"count":3,"spacing":"linear"}"#).unwrap();
        assert_eq!(json.points().unwrap(), vec![0.0, 1.0, 2.0]);
        let json: TimeGrid = serde_json::from_str("[0.5, 1.5]").unwrap();
        assert_eq!(json.points().unwrap(), vec![0.5, 1.5]);
    }

    #[test]
    fn flags_override_file() {
        let file: ExperimentConfig = serde_json::from_str(r#"{"L": 12, "N": 3, "seed": 4, "initial_state": "0100100100"}"#).unwrap();
        let flags = ExperimentConfig {
            seed: Some(9),
            ..Default::default()
        };
        let merged = file.overlay(flags);
        assert_eq!(merged.seed, Some(9));
        assert_eq!(merged.sites, Some(12));
        assert_eq!(merged.initial_state().to_string(), "0100100100");
        assert_eq!(merged.logical_len().unwrap(), 10);
    }

    #[test]
    fn invalid_sector_is_rejected() {
        let c = ExperimentConfig {
            sites: Some(5),
            particles: Some(4),
            ..Default::default()
        };
        assert!(matches!(c.sector(), Err(Error::InvalidSector { .. })));
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"bogus": 1}"#).is_err());
    }
}
