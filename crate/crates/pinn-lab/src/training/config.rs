//! Training configuration, read from JSON manifests.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Activation, Initializer, NetworkSpec};
use crate::systems::System;

/// Network architecture as it appears in manifests; input and output widths
/// come from the system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetArch {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    #[serde(default = "default_init")]
    pub initializer: Initializer,
}

fn default_init() -> Initializer {
    Initializer::GlorotUniform
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampling {
    /// One collocation set drawn up front and reused every epoch.
    Fixed,
    /// Collocation and condition points drawn anew each epoch.
    ResampleEachEpoch,
}

/// Which losses drive which phase of training.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Schedule {
    /// Physics loss throughout, plus IC/BC losses where the system has them
    /// and the IC is not hard-constrained.
    PhysicsDriven,
    /// Alias for the multi-objective baseline: identical execution to
    /// physics-driven with a soft IC.
    Vanilla,
    /// Labeled oracle samples support the composite loss until
    /// `switch_epoch`, then the physics loss alone.
    DataGuided {
        switch_epoch: usize,
        #[serde(default)]
        n_labels: Option<usize>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LrDecay {
    pub rate: f64,
    pub step: usize,
}

/// Everything one training run depends on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub system: System,
    pub network: NetArch,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default)]
    pub lr_decay: Option<LrDecay>,
    pub epochs: usize,
    /// Collocation count; defaults to 64 for ODEs, 1024 for PDEs.
    #[serde(default)]
    pub n_collocation: Option<usize>,
    /// IC sample count; defaults to 1 for ODEs (t = 0), 128 for Allen-Cahn.
    #[serde(default)]
    pub n_ic: Option<usize>,
    /// BC pair count; defaults to 128 for Allen-Cahn, unused for ODEs.
    #[serde(default)]
    pub n_bc: Option<usize>,
    /// Defaults to fixed sampling for ODEs, resample-each-epoch for PDEs.
    #[serde(default)]
    pub sampling: Option<Sampling>,
    pub schedule: Schedule,
    #[serde(default)]
    pub hard_ic: bool,
    pub seed: u64,
    /// Defaults to {0, epochs/2, epochs}.
    #[serde(default)]
    pub checkpoint_epochs: Option<Vec<usize>>,
    /// Labeled snapshots for data-guided flow runs.
    #[serde(default)]
    pub data_file: Option<PathBuf>,
}

fn default_lambda() -> f64 {
    1.0
}
fn default_lr() -> f64 {
    1e-3
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        if self.epochs < 1 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        if self.lambda < 0.0 {
            return Err(Error::Config("lambda must be >= 0".into()));
        }
        if self.n_collocation() < 1 || self.n_ic() < 1 {
            return Err(Error::Config("point counts must be >= 1".into()));
        }
        if let Schedule::DataGuided { switch_epoch, .. } = self.schedule {
            if switch_epoch >= self.epochs {
                return Err(Error::Config(format!(
                    "switch_epoch {switch_epoch} must be < epochs {}",
                    self.epochs
                )));
            }
        }
        if self.hard_ic && self.system.input_axes() != 1 {
            return Err(Error::Config(
                "hard-IC constraint is available for the ODE systems only".into(),
            ));
        }
        if matches!(self.schedule, Schedule::Vanilla) && self.hard_ic {
            return Err(Error::Config(
                "vanilla schedule means soft IC; drop hard_ic".into(),
            ));
        }
        if let Some(decay) = &self.lr_decay {
            if decay.rate <= 0.0 || decay.step == 0 {
                return Err(Error::Config("lr decay needs rate > 0 and step >= 1".into()));
            }
        }
        Ok(())
    }

    fn is_pde(&self) -> bool {
        self.system.input_axes() > 1
    }

    pub fn n_collocation(&self) -> usize {
        self.n_collocation
            .unwrap_or(if self.is_pde() { 1024 } else { 64 })
    }

    pub fn n_ic(&self) -> usize {
        self.n_ic.unwrap_or(if self.is_pde() { 128 } else { 1 })
    }

    pub fn n_bc(&self) -> usize {
        self.n_bc.unwrap_or(128)
    }

    pub fn sampling(&self) -> Sampling {
        self.sampling.unwrap_or(if self.is_pde() {
            Sampling::ResampleEachEpoch
        } else {
            Sampling::Fixed
        })
    }

    pub fn n_labels(&self) -> usize {
        let default = match self.system {
            System::Pendulum { .. } => 100,
            _ => 10,
        };
        match self.schedule {
            Schedule::DataGuided { n_labels, .. } => n_labels.unwrap_or(default),
            _ => 0,
        }
    }

    pub fn checkpoint_epochs(&self) -> Vec<usize> {
        let mut e = self
            .checkpoint_epochs
            .clone()
            .unwrap_or_else(|| vec![0, self.epochs / 2, self.epochs]);
        e.sort_unstable();
        e.dedup();
        e
    }

    /// Learning rate at `epoch` under the configured decay.
    pub fn lr_at(&self, epoch: usize) -> f64 {
        match &self.lr_decay {
            None => self.learning_rate,
            Some(d) => self.learning_rate * d.rate.powf(epoch as f64 / d.step as f64),
        }
    }

    /// The network specification this run trains, seeds derived from the
    /// run seed.
    pub fn network_spec(&self, net_seed: u64) -> NetworkSpec {
        NetworkSpec {
            input_width: self.system.input_axes(),
            hidden_layers: self.network.hidden.clone(),
            output_width: self.system.output_width(),
            activation: self.network.activation,
            initializer: self.network.initializer,
            seed: net_seed,
        }
    }

    /// Stable hash of the full configuration, for content-addressed output
    /// directories.
    pub fn config_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        let mut s = String::with_capacity(12);
        for b in digest.iter().take(6) {
            s.push_str(&format!("{b:02x}"));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_config() -> TrainConfig {
        serde_json::from_str(
            r#"{
                "system": {"name": "toy", "y0": 0.5, "t_max": 2.5},
                "network": {"hidden": [50,50,50,50], "activation": "tanh"},
                "epochs": 1000,
                "schedule": {"kind": "physics-driven"},
                "hard_ic": true,
                "seed": 7
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn defaults_resolve_per_system() {
        let cfg = toy_config();
        cfg.validate().unwrap();
        assert_eq!(cfg.n_collocation(), 64);
        assert_eq!(cfg.sampling(), Sampling::Fixed);
        assert_eq!(cfg.lambda, 1.0);
        assert_eq!(cfg.checkpoint_epochs(), vec![0, 500, 1000]);

        let ac: TrainConfig = serde_json::from_str(
            r#"{
                "system": {"name": "allen-cahn"},
                "network": {"hidden": [100,100,100,100,100,100], "activation": "tanh"},
                "lambda": 100.0,
                "epochs": 50000,
                "schedule": {"kind": "physics-driven"},
                "seed": 1
            }"#,
        )
        .unwrap();
        ac.validate().unwrap();
        assert_eq!(ac.n_collocation(), 1024);
        assert_eq!(ac.n_ic(), 128);
        assert_eq!(ac.n_bc(), 128);
        assert_eq!(ac.sampling(), Sampling::ResampleEachEpoch);
    }

    #[test]
    fn bad_configs_rejected() {
        let mut cfg = toy_config();
        cfg.epochs = 0;
        assert!(cfg.validate().is_err());

        let mut cfg = toy_config();
        cfg.schedule = Schedule::DataGuided {
            switch_epoch: 1000,
            n_labels: None,
        };
        assert!(cfg.validate().is_err());

        let mut cfg = toy_config();
        cfg.schedule = Schedule::Vanilla;
        assert!(cfg.validate().is_err()); // vanilla with hard_ic

        let mut cfg = toy_config();
        cfg.system = System::allen_cahn();
        assert!(cfg.validate().is_err()); // hard IC on a PDE
    }

    #[test]
    fn data_guided_label_defaults() {
        let mut cfg = toy_config();
        cfg.hard_ic = true;
        cfg.schedule = Schedule::DataGuided {
            switch_epoch: 500,
            n_labels: None,
        };
        assert_eq!(cfg.n_labels(), 10);
        cfg.system = System::pendulum(100.0, 10.0);
        cfg.hard_ic = false;
        assert_eq!(cfg.n_labels(), 100);
    }

    #[test]
    fn exponential_decay_schedule() {
        let mut cfg = toy_config();
        cfg.lr_decay = Some(LrDecay {
            rate: 0.9,
            step: 1000,
        });
        assert_eq!(cfg.lr_at(0), 1e-3);
        assert!((cfg.lr_at(1000) - 0.9e-3).abs() < 1e-12);
        assert!((cfg.lr_at(2000) - 0.81e-3).abs() < 1e-12);
    }

    #[test]
    fn config_hash_distinguishes_configs() {
        let a = toy_config();
        let mut b = toy_config();
        b.seed = 8;
        assert_ne!(a.config_hash(), b.config_hash());
        assert_eq!(a.config_hash(), toy_config().config_hash());
        assert_eq!(a.config_hash().len(), 12);
    }
}
