//! Loss terms and their parameter gradients.
//!
//! Every term is a scalar expression over network head components (values
//! and input derivatives at a batch of points). The term is built on a
//! small reverse tape whose inputs are the head components; its adjoints
//! seed the batched network backward pass. Residual algebra is shared with
//! the plain evaluation path through the generic [`System::residuals`].

use crate::autodiff::{Jet, Scalar, Tape, Var};
use crate::error::{Error, Result};
use crate::network::{BatchCache, BatchKernel, DerivativeBundle, NetworkSpec, OutputTransform};
use crate::systems::System;

/// Head components of one batch as tape variables.
pub struct TermVars<'t, 'k> {
    vars: Vec<Var<'t>>,
    kernel: &'k BatchKernel,
    points: &'k [f64],
    axes: usize,
    order: u8,
    npts: usize,
}

impl<'t, 'k> TermVars<'t, 'k> {
    pub fn npts(&self) -> usize {
        self.npts
    }

    pub fn value(&self, output: usize, n: usize) -> Var<'t> {
        self.comp(0, output, n)
    }

    pub fn d1(&self, output: usize, axis: usize, n: usize) -> Var<'t> {
        self.comp(self.kernel.d1_channel(axis), output, n)
    }

    fn comp(&self, channel: usize, output: usize, n: usize) -> Var<'t> {
        let n_out = self.kernel.outputs();
        self.vars[(channel * n_out + output) * self.npts + n]
    }

    /// The full bundle at point `n`, for residual evaluation.
    pub fn bundle(&self, n: usize) -> DerivativeBundle<Var<'t>> {
        let n_out = self.kernel.outputs();
        let mut jets = Vec::with_capacity(n_out);
        for o in 0..n_out {
            let mut jet = Jet::constant(self.axes, self.order, self.comp(0, o, n));
            if self.order >= 1 {
                for axis in 0..self.axes {
                    jet.set_d1(axis, self.comp(self.kernel.d1_channel(axis), o, n));
                }
            }
            if self.order >= 2 {
                for i in 0..self.axes {
                    for j in i..self.axes {
                        jet.set_d2(i, j, self.comp(self.kernel.d2_channel(i, j), o, n));
                    }
                }
            }
            jets.push(jet);
        }
        let point = self.points[n * self.axes..(n + 1) * self.axes].to_vec();
        DerivativeBundle::new(point, jets)
    }
}

/// Forward/backward machinery for one run: a kernel plus reusable caches.
pub struct LossEngine {
    system: System,
    kernel: BatchKernel,
    axes: usize,
    order: u8,
    cache: BatchCache,
    scratch: BatchCache,
}

impl LossEngine {
    pub fn new(system: &System, spec: &NetworkSpec, transform: OutputTransform) -> Result<Self> {
        let order = system.derivative_order();
        let kernel = BatchKernel::new(spec, order, transform)?;
        Ok(Self {
            system: system.clone(),
            axes: system.input_axes(),
            order,
            kernel,
            cache: BatchCache::default(),
            scratch: BatchCache::default(),
        })
    }

    /// Evaluate one loss term on `points` (row-major); with `grad`, also
    /// accumulate `weight · ∂term/∂θ`.
    pub fn term<F>(
        &mut self,
        params: &[f64],
        points: &[f64],
        weight: f64,
        mut grad: Option<&mut [f64]>,
        build: F,
    ) -> Result<f64>
    where
        F: for<'t> FnOnce(&'t Tape, &TermVars<'t, '_>) -> Result<Var<'t>>,
    {
        let npts = points.len() / self.axes;
        self.kernel.forward(params, points, &mut self.cache);
        let n_out = self.kernel.outputs();
        let channels = self.kernel.channels();

        let tape = Tape::new();
        let mut vars = Vec::with_capacity(channels * n_out * npts);
        for c in 0..channels {
            for o in 0..n_out {
                for n in 0..npts {
                    vars.push(tape.input(self.kernel.head_value(&self.cache, o, c, n)));
                }
            }
        }
        let tv = TermVars {
            vars,
            kernel: &self.kernel,
            points,
            axes: self.axes,
            order: self.order,
            npts,
        };
        let loss = build(&tape, &tv)?;
        let value = loss.value();
        if !value.is_finite() {
            return Err(Error::Numerical(format!("non-finite loss term {value}")));
        }
        if let Some(grad) = grad.take() {
            let weighted = loss * Var::from_f64(weight);
            let adjoints = tape.backward(&weighted)?;
            let head_adj: Vec<f64> = tv.vars.iter().map(|v| adjoints.get(v)).collect();
            self.kernel
                .backward(params, &self.cache, &head_adj, grad, &mut self.scratch);
        }
        Ok(value)
    }

    /// L_f: mean squared residual over the collocation points; coupled
    /// systems contribute the sum of per-equation mean squares.
    pub fn physics(
        &mut self,
        params: &[f64],
        points: &[f64],
        weight: f64,
        grad: Option<&mut [f64]>,
    ) -> Result<f64> {
        let system = self.system.clone();
        self.term(params, points, weight, grad, |_, tv| {
            let mut acc = Var::from_f64(0.0);
            for n in 0..tv.npts() {
                let bundle = tv.bundle(n);
                for r in system.residuals(&bundle)? {
                    acc = acc + r * r;
                }
            }
            Ok(acc * Var::from_f64(1.0 / tv.npts() as f64))
        })
    }

    /// Soft IC for the ODE systems at t = 0: (y(0) − y0)², plus ẏ(0)² for
    /// the pendulum's zero initial angular velocity.
    pub fn ode_ic(
        &mut self,
        params: &[f64],
        y0: f64,
        with_velocity: bool,
        weight: f64,
        grad: Option<&mut [f64]>,
    ) -> Result<f64> {
        self.term(params, &[0.0], weight, grad, |_, tv| {
            let dy = tv.value(0, 0) - Var::from_f64(y0);
            let mut l = dy * dy;
            if with_velocity {
                let v = tv.d1(0, 0, 0);
                l = l + v * v;
            }
            Ok(l)
        })
    }

    /// Allen-Cahn IC: mean squared mismatch against u0(x) = x²cos(πx) at
    /// the sampled initial points (t = 0, x).
    pub fn ac_ic(
        &mut self,
        params: &[f64],
        xs: &[f64],
        weight: f64,
        grad: Option<&mut [f64]>,
    ) -> Result<f64> {
        let system = self.system.clone();
        let points: Vec<f64> = xs.iter().flat_map(|&x| [0.0, x]).collect();
        self.term(params, &points, weight, grad, |_, tv| {
            let mut acc = Var::from_f64(0.0);
            for (n, &x) in xs.iter().enumerate() {
                let d = tv.value(0, n) - Var::from_f64(system.ic_value(&[x]));
                acc = acc + d * d;
            }
            Ok(acc * Var::from_f64(1.0 / xs.len() as f64))
        })
    }

    /// Periodic BC as a paired-point penalty: value and u_x mismatch
    /// between x = −1 and x = 1 at the sampled times.
    pub fn ac_bc(
        &mut self,
        params: &[f64],
        ts: &[f64],
        weight: f64,
        grad: Option<&mut [f64]>,
    ) -> Result<f64> {
        let m = ts.len();
        let mut points = Vec::with_capacity(2 * m * 2);
        for &t in ts {
            points.extend_from_slice(&[t, -1.0]);
        }
        for &t in ts {
            points.extend_from_slice(&[t, 1.0]);
        }
        self.term(params, &points, weight, grad, |_, tv| {
            let mut acc = Var::from_f64(0.0);
            for n in 0..m {
                let dv = tv.value(0, m + n) - tv.value(0, n);
                let dg = tv.d1(0, 1, m + n) - tv.d1(0, 1, n);
                acc = acc + dv * dv + dg * dg;
            }
            Ok(acc * Var::from_f64(1.0 / m as f64))
        })
    }

    /// Mean squared error against labeled values, all outputs.
    /// `labels` is row-major `[npts][n_outputs]`.
    pub fn data_mse(
        &mut self,
        params: &[f64],
        points: &[f64],
        labels: &[f64],
        weight: f64,
        grad: Option<&mut [f64]>,
    ) -> Result<f64> {
        let n_out = self.kernel.outputs();
        self.term(params, points, weight, grad, |_, tv| {
            let mut acc = Var::from_f64(0.0);
            for n in 0..tv.npts() {
                for o in 0..n_out {
                    let d = tv.value(o, n) - Var::from_f64(labels[n * n_out + o]);
                    acc = acc + d * d;
                }
            }
            Ok(acc * Var::from_f64(1.0 / tv.npts() as f64))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{init_params, Activation, Initializer, ParameterVector};
    use crate::training::sampler::{rng_for, sample_collocation, stream};

    fn toy_engine(hard_ic: bool) -> (System, NetworkSpec, LossEngine) {
        let system = System::toy(0.5, 2.5);
        let spec = NetworkSpec {
            input_width: 1,
            hidden_layers: vec![9, 7],
            output_width: 1,
            activation: Activation::Tanh,
            initializer: Initializer::GlorotUniform,
            seed: 5,
        };
        let tr = if hard_ic {
            OutputTransform::HardIc { y0: 0.5 }
        } else {
            OutputTransform::Identity
        };
        let engine = LossEngine::new(&system, &spec, tr).unwrap();
        (system, spec, engine)
    }

    #[test]
    fn single_point_residual_squares() {
        // constant net at the unstable fixed point y* = 0 has L_f = 0;
        // shifting the output bias makes the residual −y(1−y²) exactly.
        let (_, spec, mut engine) = toy_engine(false);
        let mut params = ParameterVector::zeros(spec.dims());
        let lf = engine
            .physics(params.as_slice(), &[0.7], 1.0, None)
            .unwrap();
        assert_eq!(lf, 0.0);

        let br = params.bias_range(2);
        params.as_mut_slice()[br].copy_from_slice(&[0.5]);
        let lf = engine
            .physics(params.as_slice(), &[0.7], 1.0, None)
            .unwrap();
        // r = 0 − 0.5·(1 − 0.25) = −0.375 → L_f = 0.140625
        assert!((lf - 0.375f64 * 0.375).abs() < 1e-15);
    }

    #[test]
    fn physics_gradient_matches_finite_differences() {
        let (_, spec, mut engine) = toy_engine(true);
        let params = init_params(&spec).unwrap();
        let pts = sample_collocation(&[(0.0, 2.5)], 16, &mut rng_for(1, stream::COLLOCATION));
        let mut grad = vec![0.0; params.len()];
        let lf = engine
            .physics(params.as_slice(), &pts, 1.0, Some(&mut grad))
            .unwrap();
        assert!(lf > 0.0);
        let mut p = params.as_slice().to_vec();
        let h = 1e-6;
        for i in (0..p.len()).step_by(17) {
            let orig = p[i];
            p[i] = orig + h;
            let up = engine.physics(&p, &pts, 1.0, None).unwrap();
            p[i] = orig - h;
            let dn = engine.physics(&p, &pts, 1.0, None).unwrap();
            p[i] = orig;
            let fd = (up - dn) / (2.0 * h);
            assert!(
                (grad[i] - fd).abs() <= 1e-5 * fd.abs().max(1e-7),
                "grad[{i}] = {} vs fd {fd}",
                grad[i]
            );
        }
    }

    #[test]
    fn pendulum_ic_term_of_flat_net() {
        // zero-weight net: y ≡ 0, ẏ ≡ 0 → L_u = y0² from the angle term.
        let system = System::pendulum(100.0, 2.5);
        let spec = NetworkSpec {
            input_width: 1,
            hidden_layers: vec![6, 6],
            output_width: 1,
            activation: Activation::Tanh,
            initializer: Initializer::GlorotUniform,
            seed: 2,
        };
        let mut engine = LossEngine::new(&system, &spec, OutputTransform::Identity).unwrap();
        let params = ParameterVector::zeros(spec.dims());
        let y0 = system.initial_value().unwrap();
        let lu = engine
            .ode_ic(params.as_slice(), y0, true, 1.0, None)
            .unwrap();
        assert!((lu - y0 * y0).abs() < 1e-15);
    }

    #[test]
    fn data_and_bc_gradients_match_finite_differences() {
        let system = System::allen_cahn();
        let spec = NetworkSpec {
            input_width: 2,
            hidden_layers: vec![8, 6],
            output_width: 1,
            activation: Activation::Swish,
            initializer: Initializer::GlorotUniform,
            seed: 9,
        };
        let mut engine = LossEngine::new(&system, &spec, OutputTransform::Identity).unwrap();
        let params = init_params(&spec).unwrap();
        let ts = [0.2, 0.5, 0.9];
        let xs = [-0.7, 0.1, 0.6, 0.9];

        let mut grad = vec![0.0; params.len()];
        engine
            .ac_bc(params.as_slice(), &ts, 1.0, Some(&mut grad))
            .unwrap();
        engine
            .ac_ic(params.as_slice(), &xs, 2.0, Some(&mut grad))
            .unwrap();
        let eval = |p: &[f64], engine: &mut LossEngine| {
            engine.ac_bc(p, &ts, 1.0, None).unwrap() + 2.0 * engine.ac_ic(p, &xs, 2.0, None).unwrap()
        };
        let mut p = params.as_slice().to_vec();
        let h = 1e-6;
        for i in (0..p.len()).step_by(13) {
            let orig = p[i];
            p[i] = orig + h;
            let up = eval(&p, &mut engine);
            p[i] = orig - h;
            let dn = eval(&p, &mut engine);
            p[i] = orig;
            let fd = (up - dn) / (2.0 * h);
            assert!(
                (grad[i] - fd).abs() <= 2e-5 * fd.abs().max(1e-7),
                "grad[{i}] = {} vs fd {fd}",
                grad[i]
            );
        }
    }
}
