//! Experiment configuration: a config fully determines a run, so equal
//! configs produce byte-identical output at any thread count.

use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::localise::EpsilonTuple;
use crate::tails::{AuxFunction, TailModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Sample,
    Records,
    SumMax,
    Localise,
    Quenched,
    Favoured,
    Audit,
    Balanced,
    CheckAssumptions,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Sample => "sample",
            ExperimentKind::Records => "records",
            ExperimentKind::SumMax => "sum-max",
            ExperimentKind::Localise => "localise",
            ExperimentKind::Quenched => "quenched",
            ExperimentKind::Favoured => "favoured",
            ExperimentKind::Audit => "audit",
            ExperimentKind::Balanced => "balanced",
            ExperimentKind::CheckAssumptions => "check-assumptions",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sample" => Ok(ExperimentKind::Sample),
            "records" => Ok(ExperimentKind::Records),
            "sum-max" => Ok(ExperimentKind::SumMax),
            "localise" => Ok(ExperimentKind::Localise),
            "quenched" => Ok(ExperimentKind::Quenched),
            "favoured" => Ok(ExperimentKind::Favoured),
            "audit" => Ok(ExperimentKind::Audit),
            "balanced" => Ok(ExperimentKind::Balanced),
            "check-assumptions" => Ok(ExperimentKind::CheckAssumptions),
            _ => Err(Error::Config(format!("unknown experiment {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::Config(format!("unknown output format {s:?} (expected csv or json)"))),
        }
    }
}

/// A fully explicit experiment description.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// Tail model spec string, e.g. "stretched-log:0.55".
    pub model: String,
    /// Aux function spec string: "default" or "floor:<h0>".
    pub aux: String,
    /// Number of seeds; landscape seeds are `base_seed .. base_seed + seeds`.
    pub seeds: u32,
    pub base_seed: u64,
    pub i_max: u64,
    /// Log-spaced time grid `[t_min, t_max]` with `t_steps` points.
    pub t_min: f64,
    pub t_max: f64,
    pub t_steps: u32,
    /// Record-index range (inclusive) for audits and balanced runs.
    pub n_min: usize,
    pub n_max: usize,
    pub eps: [f64; 8],
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    /// Worker threads; 0 lets the pool pick.
    pub threads: usize,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        ExperimentConfig {
            experiment,
            model: "stretched-log:0.5".to_string(),
            aux: "default".to_string(),
            seeds: 10,
            base_seed: 0,
            i_max: 100_000,
            t_min: 1e2,
            t_max: 1e8,
            t_steps: 16,
            n_min: 3,
            n_max: 8,
            eps: [0.25, 0.02, 0.01, 0.8, 0.02, 2e-4, 0.02, 0.1],
            out: None,
            format: OutputFormat::Csv,
            threads: 0,
        }
    }

    pub fn tail_model(&self) -> Result<TailModel> {
        self.model.parse()
    }

    pub fn aux_function(&self) -> Result<AuxFunction> {
        self.aux.parse()
    }

    pub fn epsilon_tuple(&self) -> EpsilonTuple {
        EpsilonTuple {
            e0: self.eps[0],
            e1: self.eps[1],
            e2: self.eps[2],
            e3: self.eps[3],
            e4: self.eps[4],
            e5: self.eps[5],
            e6: self.eps[6],
            e7: self.eps[7],
        }
    }

    /// Log-spaced time grid as log-values.
    pub fn t_grid_ln(&self) -> Vec<f64> {
        let steps = self.t_steps.max(1);
        if steps == 1 {
            return vec![self.t_min.ln()];
        }
        let (lo, hi) = (self.t_min.ln(), self.t_max.ln());
        (0..steps).map(|k| lo + (hi - lo) * k as f64 / (steps - 1) as f64).collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.tail_model()?;
        self.aux_function()?;
        if self.seeds == 0 {
            return Err(Error::Config("seeds must be at least 1".into()));
        }
        if self.i_max == 0 {
            return Err(Error::Config("imax must be at least 1".into()));
        }
        if !(self.t_min > 0.0) || !(self.t_max >= self.t_min) {
            return Err(Error::Config(format!(
                "time grid needs 0 < tmin <= tmax, got [{}, {}]",
                self.t_min, self.t_max
            )));
        }
        if self.n_min < 2 || self.n_max < self.n_min {
            return Err(Error::Config(format!(
                "record range needs 2 <= nmin <= nmax, got [{}, {}]",
                self.n_min, self.n_max
            )));
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(&bytes);
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn from_toml_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("config file: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = ExperimentConfig::new(ExperimentKind::SumMax);
        let b = ExperimentConfig::new(ExperimentKind::SumMax);
        assert_eq!(a.hash(), b.hash());
        let mut c = ExperimentConfig::new(ExperimentKind::SumMax);
        c.base_seed = 1;
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ExperimentConfig::new(ExperimentKind::Audit);
        let text = toml::to_string(&cfg).unwrap();
        let back: ExperimentConfig = toml::from_str(&text).unwrap();
        assert_eq!(cfg.hash(), back.hash());
    }

    #[test]
    fn grid_is_log_spaced() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::Favoured);
        cfg.t_min = 1e2;
        cfg.t_max = 1e10;
        cfg.t_steps = 64;
        let grid = cfg.t_grid_ln();
        assert_eq!(grid.len(), 64);
        let d0 = grid[1] - grid[0];
        for w in grid.windows(2) {
            assert!((w[1] - w[0] - d0).abs() < 1e-9);
        }
    }
}
