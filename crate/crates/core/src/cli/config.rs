use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Flags shared by every subcommand. Values given here override the JSON
/// file named by `--config`.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// JSON file with any of the settings below
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores); never changes results
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Vocabulary size
    #[arg(long = "V")]
    pub v: Option<usize>,
    /// Number of topics
    #[arg(long = "K")]
    pub k: Option<usize>,
    /// Words per document
    #[arg(long)]
    pub m: Option<usize>,
    /// Lower bound on every topic-word probability
    #[arg(long)]
    pub c0: Option<f64>,
    #[arg(long, value_parser = ["dirichlet", "vertex"])]
    pub mixing: Option<String>,
    /// Symmetric Dirichlet concentration
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Topic matrix CSV, or a generator: independent, duplicate, midpoint, convex82
    #[arg(long)]
    pub theta: Option<String>,
    /// Comma-separated sample sizes
    #[arg(long = "n-grid", value_delimiter = ',')]
    pub n_grid: Option<Vec<usize>>,
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Random starts per MLE fit
    #[arg(long)]
    pub starts: Option<usize>,
    /// Also write per-figure CSVs
    #[arg(long = "plot-data")]
    pub plot_data: bool,
    /// Two-point test: fixed l1 step between the hypotheses
    #[arg(long)]
    pub distance: Option<f64>,
    /// Two-point test: step r * n^(-1/(2p))
    #[arg(long)]
    pub r: Option<f64>,
    /// Random perturbations in the bound checks
    #[arg(long)]
    pub trials: Option<usize>,
    /// Number of documents to simulate
    #[arg(long)]
    pub n: Option<usize>,
    /// Corpus CSV to fit
    #[arg(long)]
    pub corpus: Option<String>,
}

/// Settings for one command. Unset fields take command defaults; the
/// resolved form is echoed to `config.json` and reproduces the run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(rename = "V", skip_serializing_if = "Option::is_none")]
    pub v: Option<usize>,
    #[serde(rename = "K", skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mixing: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub starts: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plot_data: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corpus: Option<String>,
}

macro_rules! overlay {
    ($base:expr, $flags:expr, $($field:ident),*) => {
        $( if $flags.$field.is_some() { $base.$field = $flags.$field.clone(); } )*
    };
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))
    }

    /// The file's settings with every flag that was given laid over them.
    pub fn merge(file: Option<ExperimentConfig>, flags: &Flags, command: &str) -> Result<Self> {
        let mut cfg = file.unwrap_or_default();
        if let Some(c) = &cfg.command {
            if c != command {
                return Err(Error::InvalidParameter(format!("config file is for `{c}`, not `{command}`")));
            }
        }
        cfg.command = Some(command.to_string());
        overlay!(
            cfg, flags, seed, v, k, m, c0, mixing, alpha, theta, n_grid, replicates, starts, distance, r, trials, n,
            corpus
        );
        if flags.plot_data {
            cfg.plot_data = Some(true);
        }
        Ok(cfg)
    }

    /// Rejects settings the command does not read.
    pub fn restrict(&self, allowed: &[&str]) -> Result<()> {
        let command = self.command.as_deref().unwrap_or("?");
        let value = self.to_json();
        let present = value.as_object().into_iter().flat_map(|map| map.keys()).filter(|k| *k != "command");
        for name in present {
            if !allowed.contains(&name.as_str()) {
                return Err(Error::InvalidParameter(format!("`{name}` is not a setting of `{command}`")));
            }
        }
        Ok(())
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| {
            Error::InvalidParameter(format!(
                "`{}` is stochastic and needs --seed",
                self.command.as_deref().unwrap_or("?")
            ))
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file = ExperimentConfig::from_json(r#"{"seed": 3, "m": 2, "c0": 0.05}"#).unwrap();
        let flags = Flags { m: Some(3), plot_data: true, ..Flags::default() };
        let cfg = ExperimentConfig::merge(Some(file), &flags, "rates").unwrap();
        assert_eq!((cfg.seed, cfg.m, cfg.c0, cfg.plot_data), (Some(3), Some(3), Some(0.05), Some(true)));
    }

    #[test]
    fn unknown_and_foreign_settings_are_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"sed": 3}"#).is_err());
        let file = ExperimentConfig::from_json(r#"{"command": "bounds"}"#).unwrap();
        assert!(ExperimentConfig::merge(Some(file), &Flags::default(), "rates").is_err());
        let cfg = ExperimentConfig { command: Some("table1".into()), m: Some(2), ..Default::default() };
        assert!(cfg.restrict(&["seed"]).is_err());
    }

    #[test]
    fn echo_round_trips() {
        let cfg = ExperimentConfig {
            command: Some("rates".into()),
            seed: Some(1),
            c0: Some(0.1),
            n_grid: Some(vec![1, 2, 3]),
            ..Default::default()
        };
        let text = super::super::report::json_to_string(&cfg.to_json());
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg);
    }
}
