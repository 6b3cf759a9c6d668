use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use fefet_am::device::VariationParams;
use fefet_am::encoder::VoltageLadder;
use fefet_am::metric::MetricKind;
use fefet_am::solver::CurrentRange;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pipeline {
    Knn,
    Hdc,
}

/// Every setting a command can take. Each field is both a flag and a key of
/// the JSON config file; flags given on the command line win.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Subcommand name; filled in when a report is written.
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,

    /// JSON file with default values for any of these flags.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// hamming, manhattan or sq_euclidean.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metric: Option<MetricKind>,
    /// Symbol width in bits.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bits: Option<u32>,
    /// Distance-matrix CSV used instead of a built-in metric.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub custom: Option<PathBuf>,
    /// Allowed per-FeFET currents in unit multiples, e.g. "{0,1,2}".
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cr: Option<CurrentRange>,
    /// Solve at exactly this many FeFETs per cell.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
    /// Cap on row assignments per search row.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    /// Cap on rows x columns x k for the exhaustive checker.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_budget: Option<usize>,

    /// Encoding JSON produced by `compile`.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub encoding: Option<PathBuf>,
    /// CSV of stored symbol vectors, one per line.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stored: Option<PathBuf>,
    /// CSV of query symbol vectors, one per line.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub queries: Option<PathBuf>,

    /// Lowest threshold voltage, volts.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vth_base: Option<f64>,
    /// Spacing between threshold levels, volts.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ladder_step: Option<f64>,
    /// Drain voltage for one unit of current, volts.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unit_vds: Option<f64>,
    /// Series resistance, ohms.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resistance: Option<f64>,

    /// Threshold-voltage spread, volts.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_vth: Option<f64>,
    /// Relative resistance spread.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_r: Option<f64>,
    /// Use the reference spreads (54 mV, 8%) unless set explicitly.
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_variation: Option<bool>,
    /// Gaussian noise on each sensed row current, amperes.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sense_sigma: Option<f64>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Monte-Carlo runs.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runs: Option<usize>,
    /// Rows of a generated margin instance.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
    /// Symbols per vector of a generated margin instance.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dims: Option<usize>,
    /// Hamming distance of the intended winner in a margin instance.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub near: Option<usize>,
    /// Hamming distance of the runner-up in a margin instance.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub far: Option<usize>,

    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pipeline: Option<Pipeline>,
    /// Directory with MNIST IDX files.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset: Option<PathBuf>,
    /// Training CSV (features..., label), used with --test-csv.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_csv: Option<PathBuf>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_csv: Option<PathBuf>,
    /// Training samples to keep.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train: Option<usize>,
    /// Test samples to keep.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test: Option<usize>,
    /// Neighbors per KNN vote.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kq: Option<usize>,
    /// Hypervector dimension.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dimension: Option<usize>,
    /// Retraining passes after single-pass HDC training.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    /// Split stored rows over arrays of at most this many rows.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tile_rows: Option<usize>,

    /// Data output file; stdout when absent.
    #[arg(long, short, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// JSON report file for commands that write data elsewhere.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    /// Write the exhaustive checker's witness programs here.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dump: Option<PathBuf>,
    /// Worker threads (default from FEFET_AM_THREADS, else all cores).
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

pub const THREADS_ENV: &str = "FEFET_AM_THREADS";

impl RunConfig {
    /// Overlays `self` (from flags) on the config file named by `--config`.
    pub fn merged(self) -> Result<RunConfig, CliError> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let text = read_text(&path)?;
        let mut base: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        // Validate the file on its own before merging.
        serde_json::from_value::<RunConfig>(base.clone())
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let flags = serde_json::to_value(&self).expect("config serializes");
        if let (Value::Object(base), Value::Object(flags)) = (&mut base, flags) {
            for (key, value) in flags {
                base.insert(key, value);
            }
        }
        let mut merged: RunConfig = serde_json::from_value(base)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        merged.config = self.config;
        Ok(merged)
    }

    pub fn require<T: Clone>(value: &Option<T>, flag: &str) -> Result<T, CliError> {
        value
            .clone()
            .ok_or_else(|| CliError::Usage(format!("missing --{flag}")))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn ladder(&self) -> Result<VoltageLadder, CliError> {
        let d = VoltageLadder::default();
        let step = self.ladder_step.unwrap_or(d.step);
        let ladder = VoltageLadder {
            max_rank: d.max_rank,
            ..VoltageLadder::centered(
                self.vth_base.unwrap_or(d.vth_base),
                step,
                self.unit_vds.unwrap_or(d.unit_vds),
                self.resistance.unwrap_or(d.resistance),
            )
        };
        ladder
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(ladder)
    }

    /// Variation settings, or `None` when every spread is zero.
    pub fn variation(&self) -> Result<Option<VariationParams>, CliError> {
        let reference = VariationParams::reference(self.seed());
        let (vth0, r0) = if self.reference_variation.unwrap_or(false) {
            (reference.sigma_vth, reference.sigma_r_rel)
        } else {
            (0.0, 0.0)
        };
        let params = VariationParams {
            sigma_vth: self.sigma_vth.unwrap_or(vth0),
            sigma_r_rel: self.sigma_r.unwrap_or(r0),
            seed: self.seed(),
        };
        params.validate().map_err(CliError::Usage)?;
        Ok((!params.is_zero()).then_some(params))
    }

    /// The settings as they will be embedded in reports: the command name is
    /// set, the seed is always explicit, and the thread count (which never
    /// changes results) is dropped.
    pub fn resolved(&self, command: &str) -> RunConfig {
        RunConfig {
            command: Some(command.to_string()),
            seed: Some(self.seed()),
            threads: None,
            ..self.clone()
        }
    }
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Input {
        path: path.to_path_buf(),
        source,
    })
}
