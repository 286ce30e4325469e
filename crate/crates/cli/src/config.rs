//! Experiment configuration: a TOML file, command-line flags, or both (flags win).

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Experiment {
    Certify,
    HomogenizeOde,
    HomogenizePde,
    HeatSweep,
    Counterexample,
    Causality,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Certify => "certify",
            Experiment::HomogenizeOde => "homogenize_ode",
            Experiment::HomogenizePde => "homogenize_pde",
            Experiment::HeatSweep => "heat_sweep",
            Experiment::Counterexample => "counterexample",
            Experiment::Causality => "causality",
        }
    }
}

/// `[4, 8, 16]` or a string: `"4..64"` (doubling) or `"1,2,3"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Ladder {
    List(Vec<usize>),
    Text(String),
}

impl Ladder {
    pub fn values(&self) -> Result<Vec<usize>, ConfigError> {
        match self {
            Ladder::List(v) => check_ladder(v.clone()),
            Ladder::Text(s) => parse_ladder(s),
        }
    }
}

fn check_ladder(v: Vec<usize>) -> Result<Vec<usize>, ConfigError> {
    if v.is_empty() || v.contains(&0) {
        return Err(ConfigError::invalid(
            "ladder",
            "entries must be positive and the ladder non-empty",
        ));
    }
    Ok(v)
}

pub fn parse_ladder(s: &str) -> Result<Vec<usize>, ConfigError> {
    let num = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| ConfigError::invalid("ladder", format!("{t:?} is not a positive integer")))
    };
    if let Some((a, b)) = s.split_once("..") {
        let (mut n, hi) = (num(a)?, num(b)?);
        if n == 0 || hi < n {
            return Err(ConfigError::invalid("ladder", format!("empty range {s:?}")));
        }
        let mut v = Vec::new();
        while n <= hi {
            v.push(n);
            n *= 2;
        }
        return Ok(v);
    }
    check_ladder(s.split(',').map(num).collect::<Result<_, _>>()?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Convergence tolerance of series limits.
    pub probe_tol: f64,
    /// Absolute rank threshold; law-relative default when absent.
    pub rank_tol: Option<f64>,
    pub compat_tol: f64,
    /// Largest accepted causality residual.
    pub causality: f64,
    /// Points drawn by the positivity sampler.
    pub positivity_samples: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            probe_tol: 1e-10,
            rank_tol: None,
            compat_tol: 1e-8,
            causality: 1e-7,
            positivity_samples: 10_000,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<Experiment>,
    pub preset: Option<String>,
    /// Law file (JSON) for `certify` and `causality`.
    pub law: Option<PathBuf>,
    /// Law sequence for the homogenization experiments.
    pub laws: Option<Vec<PathBuf>>,
    /// Skew operator `A` as rows of `[re, im]` pairs.
    pub operator: Option<PathBuf>,
    pub split: Option<usize>,
    pub kappa: Option<String>,
    pub ladder: Option<Ladder>,
    /// Spatial grid size (cells, or dimension for the range preset).
    pub grid: Option<usize>,
    pub n: Option<usize>,
    /// Time samples (odd).
    pub samples: Option<usize>,
    pub nu: Option<f64>,
    pub c: Option<f64>,
    pub d: Option<f64>,
    /// Truncation time of the causality check.
    pub at: Option<f64>,
    /// Probe modes for the heat limit system.
    pub probes: Option<usize>,
    /// Run the fine-scale time-domain solves of `heat_sweep`.
    pub solve: Option<bool>,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub rng_seed: u64,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid `{field}`: {detail}")]
    Invalid { field: String, detail: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl ConfigError {
    pub fn invalid(field: &str, detail: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field: field.into(),
            detail: detail.into(),
        }
    }
}

impl ExperimentConfig {
    /// Parses a TOML file. Relative input paths inside it are taken from its
    /// directory; `output` stays relative to the working directory.
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            ConfigError::Parse { message, .. } => ConfigError::Parse {
                path: path.display().to_string(),
                message,
            },
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.rebase(base);
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e: toml::de::Error| ConfigError::Parse {
            path: "<config>".into(),
            message: e.to_string(),
        })
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.law.iter_mut().for_each(fix);
        self.operator.iter_mut().for_each(fix);
        if let Some(v) = &mut self.laws {
            v.iter_mut().for_each(fix);
        }
    }

    /// Fields set in `other` replace those in `self`.
    pub fn overlay(mut self, other: ExperimentConfig) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(
            experiment, preset, law, laws, operator, split, kappa, ladder, grid, n, samples, nu, c,
            d, at, probes, solve, output
        );
        self
    }

    pub fn experiment(&self) -> Result<Experiment, ConfigError> {
        self.experiment
            .ok_or_else(|| ConfigError::invalid("experiment", "no experiment given"))
    }

    pub fn ladder_values(&self) -> Result<Option<Vec<usize>>, ConfigError> {
        self.ladder.as_ref().map(Ladder::values).transpose()
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    /// Referenced files exist, ladder entries divide the grid, sizes are sane.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.experiment()?;
        let exists = |field: &str, p: &Path| {
            if p.exists() {
                Ok(())
            } else {
                Err(ConfigError::invalid(
                    field,
                    format!("{} does not exist", p.display()),
                ))
            }
        };
        if let Some(p) = &self.law {
            exists("law", p)?;
        }
        if let Some(p) = &self.operator {
            exists("operator", p)?;
        }
        for p in self.laws.iter().flatten() {
            exists("laws", p)?;
        }
        if let (Some(grid), Some(ladder)) = (self.grid, self.ladder_values()?) {
            if let Some(bad) = ladder.iter().find(|&&n| grid % n != 0) {
                return Err(ConfigError::invalid(
                    "ladder",
                    format!("{bad} does not divide grid {grid}"),
                ));
            }
        }
        if let (Some(grid), Some(n)) = (self.grid, self.n) {
            if n == 0 || grid % n != 0 {
                return Err(ConfigError::invalid(
                    "n",
                    format!("{n} does not divide grid {grid}"),
                ));
            }
        }
        if let Some(s) = self.samples {
            if s < 3 || s % 2 == 0 {
                return Err(ConfigError::invalid(
                    "samples",
                    "must be odd and at least 3",
                ));
            }
        }
        if let Some(nu) = self.nu {
            if !(nu > 0.0) {
                return Err(ConfigError::invalid("nu", "must be positive"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladders() {
        assert_eq!(parse_ladder("4..64").unwrap(), vec![4, 8, 16, 32, 64]);
        assert_eq!(parse_ladder("1,3, 5").unwrap(), vec![1, 3, 5]);
        assert!(parse_ladder("8..4").is_err());
        assert!(parse_ladder("0,1").is_err());
        assert!(parse_ladder("x").is_err());
    }

    #[test]
    fn toml_roundtrip_and_unknown_fields() {
        let cfg = ExperimentConfig::from_toml(
            "experiment = \"heat_sweep\"\nkappa = \"two_phase_1_2\"\nladder = \"4..64\"\ngrid = 1024\n[tolerances]\ncausality = 1e-8\n",
        )
        .unwrap();
        assert_eq!(cfg.experiment, Some(Experiment::HeatSweep));
        assert_eq!(cfg.ladder_values().unwrap().unwrap().len(), 5);
        assert_eq!(cfg.tolerances.causality, 1e-8);
        assert_eq!(cfg.tolerances.probe_tol, 1e-10);
        cfg.validate().unwrap();

        let err = ExperimentConfig::from_toml("experiment = \"certify\"\ngird = 3\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("gird") && msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn validation() {
        let cfg = ExperimentConfig {
            experiment: Some(Experiment::HeatSweep),
            grid: Some(100),
            ladder: Some(Ladder::List(vec![4, 64])),
            ..Default::default()
        };
        assert!(
            matches!(cfg.validate(), Err(ConfigError::Invalid { field, .. }) if field == "ladder")
        );
        let cfg = ExperimentConfig {
            experiment: Some(Experiment::Certify),
            law: Some("/nonexistent/law.json".into()),
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        assert!(ExperimentConfig::default().validate().is_err());
    }

    #[test]
    fn overlay_prefers_flags() {
        let file = ExperimentConfig {
            experiment: Some(Experiment::Counterexample),
            grid: Some(512),
            n: Some(64),
            ..Default::default()
        };
        let flags = ExperimentConfig {
            n: Some(32),
            ..Default::default()
        };
        let merged = file.overlay(flags);
        assert_eq!((merged.grid, merged.n), (Some(512), Some(32)));
    }
}
