//! Nested automatic differentiation: forward-mode jets for input
//! derivatives, a reverse-mode tape for parameter gradients, composable so
//! residuals built from input derivatives stay differentiable w.r.t. θ.

mod jet;
mod scalar;
mod tape;

pub use jet::{DerivRequest, Jet};
pub use scalar::Scalar;
pub use tape::{loss_gradient, Gradients, Tape, Var};
