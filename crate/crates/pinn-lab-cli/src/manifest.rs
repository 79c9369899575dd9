//! Experiment manifests: JSON documents tying configurations to runs,
//! sweeps, oracles and landscape exports.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use pinn_lab::evaluation::SweepSpec;
use pinn_lab::training::TrainConfig;

/// One or more training configurations.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TrainEntry {
    One(Box<TrainConfig>),
    Many(Vec<TrainConfig>),
}

impl TrainEntry {
    pub fn configs(&self) -> Vec<TrainConfig> {
        match self {
            TrainEntry::One(c) => vec![(**c).clone()],
            TrainEntry::Many(v) => v.clone(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LandscapeManifest {
    /// Run directory holding the recorded checkpoints.
    pub run_dir: PathBuf,
    /// Epochs of (θ0, θ_mid, θ_final).
    pub checkpoints: [usize; 3],
    /// One grid per horizon.
    pub t_values: Vec<f64>,
    #[serde(default = "default_resolution")]
    pub resolution: [usize; 2],
    #[serde(default = "default_n_col")]
    pub n_collocation: usize,
    #[serde(default)]
    pub truncation: Option<f64>,
    #[serde(default)]
    pub log_scale: bool,
    #[serde(default)]
    pub extents: Option<[[f64; 2]; 2]>,
}

fn default_resolution() -> [usize; 2] {
    [41, 41]
}
fn default_n_col() -> usize {
    1024
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "system", rename_all = "kebab-case")]
pub enum OracleManifest {
    Pendulum {
        y0_deg: f64,
        t_max: f64,
        #[serde(default = "default_dt")]
        dt: f64,
    },
    Toy {
        y0: f64,
        t_max: f64,
        #[serde(default = "default_n_samples")]
        n: usize,
    },
    AllenCahn {
        #[serde(default = "default_nx")]
        nx: usize,
        #[serde(default = "default_dt")]
        dt: f64,
        #[serde(default = "default_t1")]
        t_max: f64,
        /// When set, also solve at this resolution and report the max-norm
        /// difference on the shared nodes.
        #[serde(default)]
        pair_nx: Option<usize>,
    },
}

fn default_dt() -> f64 {
    1e-3
}
fn default_n_samples() -> usize {
    1000
}
fn default_nx() -> usize {
    256
}
fn default_t1() -> f64 {
    1.0
}

/// Top-level manifest. Exactly the section matching the subcommand is
/// consumed.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentManifest {
    pub id: String,
    #[serde(default)]
    pub seed: Option<u64>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub train: Option<TrainEntry>,
    /// Independent runs per train config (seeds derived per index).
    #[serde(default = "default_one")]
    pub seeds_per_config: usize,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub landscape: Option<LandscapeManifest>,
    #[serde(default)]
    pub oracle: Option<OracleManifest>,
}

fn default_one() -> usize {
    1
}
