//! Loss assembly, collocation sampling, Adam optimization and the training
//! schedules: physics-driven, vanilla multi-objective, and data-guided
//! two-phase.

mod adam;
mod config;
mod losses;
mod run;
pub mod sampler;

pub use adam::Adam;
pub use config::{LrDecay, NetArch, Sampling, Schedule, TrainConfig};
pub use losses::{LossEngine, TermVars};
pub use run::{
    composite_loss, train, train_from, write_run_artifacts, RunTrace, DIVERGENCE_BOUND,
};
