//! Fully-connected networks: specification, deterministic initialization,
//! activations, forward evaluation with input derivatives, and the
//! hard-constraint output wrappers.

mod backprop;
mod forward;
mod params;

pub use backprop::{BatchCache, BatchKernel};
pub use forward::{
    evaluate_hard_ic, evaluate_with_input_derivatives, forward_jets, forward_values,
    stream_function_velocities, DerivativeBundle, OutputTransform, AXIS_T, AXIS_X, AXIS_Y,
};
pub use params::ParameterVector;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Jet, Scalar};
use crate::error::{Error, Result};

/// Hidden-layer activation function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Swish,
    Sin,
}

impl Activation {
    pub fn apply<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Swish => x * x.sigmoid(),
            Activation::Sin => x.sin(),
        }
    }

    /// Chain this activation through a jet.
    pub fn apply_jet<T: Scalar>(self, j: &Jet<T>) -> Jet<T> {
        let v = j.value();
        match self {
            Activation::Tanh => {
                let a = v.tanh();
                let d1 = T::one() - a * a;
                let d2 = -(a + a) * d1;
                j.chain(a, d1, d2)
            }
            Activation::Swish => {
                let s = v.sigmoid();
                let s1 = s * (T::one() - s);
                let s2 = s1 * (T::one() - (s + s));
                let f = v * s;
                let f1 = s + v * s1;
                let f2 = s1 + s1 + v * s2;
                j.chain(f, f1, f2)
            }
            Activation::Sin => j.chain(v.sin(), v.cos(), -v.sin()),
        }
    }

    /// Value and first three derivatives at `v`, for reverse accumulation
    /// through jet-propagated second derivatives.
    pub fn chain4(self, v: f64) -> (f64, f64, f64, f64) {
        match self {
            Activation::Tanh => {
                let a = v.tanh();
                let d1 = 1.0 - a * a;
                let d2 = -2.0 * a * d1;
                let d3 = -2.0 * d1 * d1 - 2.0 * a * d2;
                (a, d1, d2, d3)
            }
            Activation::Swish => {
                let s = Scalar::sigmoid(v);
                let s1 = s * (1.0 - s);
                let s2 = s1 * (1.0 - 2.0 * s);
                let s3 = s2 * (1.0 - 2.0 * s) - 2.0 * s1 * s1;
                (v * s, s + v * s1, 2.0 * s1 + v * s2, 3.0 * s2 + v * s3)
            }
            Activation::Sin => (v.sin(), v.cos(), -v.sin(), -v.cos()),
        }
    }
}

/// Weight initialization scheme. Biases start at zero for both.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Initializer {
    #[serde(rename = "glorot-uniform")]
    GlorotUniform,
    #[serde(rename = "he-uniform")]
    HeUniform,
}

impl Initializer {
    fn bound(self, fan_in: usize, fan_out: usize) -> f64 {
        match self {
            Initializer::GlorotUniform => (6.0 / (fan_in + fan_out) as f64).sqrt(),
            Initializer::HeUniform => (6.0 / fan_in as f64).sqrt(),
        }
    }
}

/// Architecture, activation, initialization scheme and seed of one network.
/// Equal specs initialize to identical parameter vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub input_width: usize,
    pub hidden_layers: Vec<usize>,
    pub output_width: usize,
    pub activation: Activation,
    pub initializer: Initializer,
    pub seed: u64,
}

impl NetworkSpec {
    pub fn validate(&self) -> Result<()> {
        if self.input_width < 1 || self.output_width < 1 {
            return Err(Error::Config("network widths must be >= 1".into()));
        }
        if self.hidden_layers.is_empty() {
            return Err(Error::Config("hidden layer list must be non-empty".into()));
        }
        if self.hidden_layers.iter().any(|&w| w < 1) {
            return Err(Error::Config("hidden widths must be >= 1".into()));
        }
        Ok(())
    }

    /// Layer widths, input through output.
    pub fn dims(&self) -> Vec<usize> {
        let mut d = Vec::with_capacity(self.hidden_layers.len() + 2);
        d.push(self.input_width);
        d.extend_from_slice(&self.hidden_layers);
        d.push(self.output_width);
        d
    }

    pub fn param_count(&self) -> usize {
        let dims = self.dims();
        dims.windows(2).map(|w| (w[0] + 1) * w[1]).sum()
    }

    /// Compact architecture label, e.g. "4x50".
    pub fn arch_label(&self) -> String {
        let h = &self.hidden_layers;
        if h.windows(2).all(|w| w[0] == w[1]) {
            format!("{}x{}", h.len(), h[0])
        } else {
            h.iter()
                .map(|w| w.to_string())
                .collect::<Vec<_>>()
                .join("-")
        }
    }
}

const F64_FROM_U53: f64 = 1.0 / (1u64 << 53) as f64;

fn uniform_unit(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * F64_FROM_U53
}

/// Draw the initial parameter vector for `spec`: weights uniform in the
/// scheme's range, biases zero, reproducible from the spec seed.
pub fn init_params(spec: &NetworkSpec) -> Result<ParameterVector> {
    spec.validate()?;
    let dims = spec.dims();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut data = Vec::with_capacity(spec.param_count());
    for w in dims.windows(2) {
        let (fan_in, fan_out) = (w[0], w[1]);
        let a = spec.initializer.bound(fan_in, fan_out);
        for _ in 0..fan_in * fan_out {
            data.push(a * (2.0 * uniform_unit(&mut rng) - 1.0));
        }
        data.extend(std::iter::repeat(0.0).take(fan_out));
    }
    Ok(ParameterVector::new(dims, data))
}
