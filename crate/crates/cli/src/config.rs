// Copyright 2026 The bqctl Authors
// SPDX-License-Identifier: Apache-2.0

//! Run configuration, read from TOML with one table per stage.
//!
//! ```toml
//! seed = 0
//!
//! [instance]
//! family = "energy"
//! q = 2
//! t_f = 2.0
//! T = 40
//!
//! [relax]
//! method = "pgrape"
//!
//! [round]
//! method = "ms"
//!
//! [improve]
//! enabled = true
//! ```
//!
//! Unknown keys are errors. Every instance key left out falls back to the
//! family's tabulated default.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use bqctl_core::objectives::Sos1Mode;

use crate::error::CliError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub instance: InstanceConfig,
    #[serde(default)]
    pub relax: RelaxConfig,
    #[serde(default)]
    pub round: RoundConfig,
    #[serde(default)]
    pub improve: ImproveConfig,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    #[default]
    Energy,
    Cnot,
    Not,
    Circuit,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceConfig {
    pub family: Family,
    pub q: Option<usize>,
    pub t_f: Option<f64>,
    #[serde(rename = "T")]
    pub n_steps: Option<usize>,
    pub alpha: Option<f64>,
    pub t_minup: Option<usize>,
    pub s_max: Option<usize>,
    pub rho: Option<f64>,
    pub sos1_mode: Option<Sos1Mode>,
    /// Target unitary file for the circuit family. Relative paths resolve
    /// against the config file. Without it a seeded random target is used.
    pub target: Option<PathBuf>,
    /// 1-based qubit pairs; defaults to the nearest-neighbour grid.
    pub edges: Option<Vec<(usize, usize)>>,
    /// Seed of the random coupling matrix for energy instances with `q > 2`.
    pub coupling_seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelaxMethod {
    #[default]
    Pgrape,
    Admm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RelaxConfig {
    pub method: RelaxMethod,
    /// Constant initial control value.
    pub x0: f64,
    pub memory: usize,
    pub max_iterations: usize,
    pub projected_gradient_tol: f64,
    pub beta: f64,
    pub delta: f64,
    pub max_outer: usize,
}

impl Default for RelaxConfig {
    fn default() -> Self {
        Self {
            method: RelaxMethod::Pgrape,
            x0: 0.5,
            memory: 10,
            max_iterations: 5000,
            projected_gradient_tol: 1e-8,
            beta: 0.5,
            delta: 1e-6,
            max_outer: 100,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoundMethod {
    /// Sum-up rounding.
    #[default]
    Sur,
    /// CIA with min-up time.
    Mt,
    /// CIA with max switching.
    Ms,
    /// CIA without extra constraints.
    Cia,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RoundConfig {
    pub method: RoundMethod,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImproveMode {
    /// TV mode for SUR and unconstrained CIA, constrained mode otherwise.
    #[default]
    Auto,
    Tv,
    Constrained,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ImproveConfig {
    pub enabled: bool,
    pub mode: ImproveMode,
    pub r0: Option<usize>,
    pub r_bar: usize,
    pub eta: f64,
    pub max_outer: usize,
}

impl Default for ImproveConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            mode: ImproveMode::Auto,
            r0: None,
            r_bar: 2,
            eta: 1e-3,
            max_outer: 100,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads `path`, resolving a relative target path against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        if let (Some(target), Some(dir)) = (&cfg.instance.target, path.parent()) {
            if target.is_relative() {
                cfg.instance.target = Some(dir.join(target));
            }
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = RunConfig::parse("[instance]\nfamily = \"cnot\"\nt_f = 5.0\nT = 100\n").unwrap();
        assert_eq!(cfg.instance.family, Family::Cnot);
        assert_eq!(cfg.instance.n_steps, Some(100));
        assert_eq!(cfg.relax, RelaxConfig::default());
        assert!(cfg.improve.enabled);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::parse("[instance]\nfamily = \"energy\"\nrhoo = 1.0\n").unwrap_err();
        assert!(err.to_string().contains("rhoo"), "{err}");
        assert!(RunConfig::parse("sed = 1\n[instance]\nfamily = \"energy\"\n").is_err());
    }

    #[test]
    fn stage_tables_parse() {
        let text = r#"
            seed = 3
            [instance]
            family = "circuit"
            q = 2
            rho = 1.0
            edges = [[1, 2]]
            sos1_mode = "penalized"
            [relax]
            method = "admm"
            beta = 0.5
            [round]
            method = "mt"
            [improve]
            enabled = false
        "#;
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.instance.edges, Some(vec![(1, 2)]));
        assert_eq!(cfg.instance.sos1_mode, Some(Sos1Mode::Penalized));
        assert_eq!(cfg.relax.method, RelaxMethod::Admm);
        assert_eq!(cfg.round.method, RoundMethod::Mt);
        assert!(!cfg.improve.enabled);
    }
}
