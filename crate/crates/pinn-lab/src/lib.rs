//! A laboratory for physics-informed neural networks on dynamical systems.
//!
//! Trains small fully-connected networks against differential-equation
//! residuals, classifies training outcomes, sweeps success rates over
//! system settings, and projects the physics loss onto 2-D parameter
//! slices to expose the optima that fixed points of the governing
//! equations carve into the landscape.

pub mod autodiff;
pub mod error;
pub mod network;
pub mod oracles;
pub mod systems;
pub mod training;
pub mod evaluation;
pub mod landscape;

pub use error::{Error, Result};

/// All experiment arithmetic runs in 64-bit floats; the narrow loss
/// plateaus near fixed points are separated by orders of magnitude that
/// f32 would blur.
pub type Real = f64;

/// Jet over the default experiment scalar.
pub type Jet64 = autodiff::Jet<Real>;
