//! Outcome scoring and phase-space classification of training runs.

mod sweep;

pub use sweep::{
    economical_minima_report, median, run_sweep, sweep_rows_csv, sweep_table_markdown,
    EconomicalRow,
    SweepCell, SweepOutcome, SweepSpec,
};

use crate::error::{Error, Result};
use crate::network::{BatchCache, BatchKernel, ParameterVector};
use crate::oracles::{self, pendulum_energy, ReferenceSolution};
use crate::systems::System;
use crate::training::{RunTrace, TrainConfig};

/// Default success threshold on the L2 relative error.
pub const DEFAULT_THRESHOLD: f64 = 0.15;

/// ‖prediction − reference‖₂ / ‖reference‖₂ over a common grid.
pub fn l2_relative_error(prediction: &[f64], reference: &[f64]) -> Result<f64> {
    if prediction.len() != reference.len() {
        return Err(Error::Config(format!(
            "prediction has {} samples, reference {}",
            prediction.len(),
            reference.len()
        )));
    }
    let ref_norm: f64 = reference.iter().map(|v| v * v).sum::<f64>().sqrt();
    if ref_norm == 0.0 {
        return Err(Error::Undefined(
            "relative error against a zero reference".into(),
        ));
    }
    let diff: f64 = prediction
        .iter()
        .zip(reference)
        .map(|(p, r)| (p - r) * (p - r))
        .sum::<f64>()
        .sqrt();
    Ok(diff / ref_norm)
}

/// Which basin a run ended in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutcomeClass {
    Success,
    StableFp,
    UnstableFp,
}

impl OutcomeClass {
    pub fn label(self) -> &'static str {
        match self {
            OutcomeClass::Success => "success",
            OutcomeClass::StableFp => "stable-fp",
            OutcomeClass::UnstableFp => "unstable-fp",
        }
    }
}

/// Scored training run.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub l2: f64,
    pub class: OutcomeClass,
    pub min_lf: f64,
    /// (y, ẏ) at t = T for the ODE systems.
    pub final_state: Option<(f64, f64)>,
    /// Energy classification fell inside the tolerance band.
    pub borderline: bool,
    /// The run tripped the divergence guard; classification used the last
    /// finite state.
    pub diverged: bool,
}

/// Evaluation grid: 1000 equispaced times in [0, T].
pub fn evaluation_times(t_max: f64) -> Vec<f64> {
    (0..1000).map(|i| t_max * i as f64 / 999.0).collect()
}

/// Last parameter state of a run that still evaluates to finite numbers.
fn last_finite_params(trace: &RunTrace) -> &ParameterVector {
    if trace.final_params.as_slice().iter().all(|v| v.is_finite()) {
        return &trace.final_params;
    }
    trace
        .checkpoints
        .iter()
        .rev()
        .map(|(_, p)| p)
        .find(|p| p.as_slice().iter().all(|v| v.is_finite()))
        .unwrap_or(&trace.final_params)
}

/// Predicted (y, ẏ) of an ODE run on the given times.
pub fn ode_prediction(
    config: &TrainConfig,
    params: &ParameterVector,
    times: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let spec = config.network_spec(0);
    let transform = if config.hard_ic {
        crate::network::OutputTransform::HardIc {
            y0: config.system.initial_value().ok_or_else(|| {
                Error::Config("ODE prediction needs an initial value".into())
            })?,
        }
    } else {
        crate::network::OutputTransform::Identity
    };
    let kernel = BatchKernel::new(&spec, 1, transform)?;
    let mut cache = BatchCache::default();
    kernel.forward(params.as_slice(), times, &mut cache);
    let mut values = Vec::with_capacity(times.len());
    let mut velocities = Vec::with_capacity(times.len());
    for n in 0..times.len() {
        values.push(kernel.head_value(&cache, 0, 0, n));
        velocities.push(kernel.head_value(&cache, 0, 1, n));
    }
    Ok((values, velocities))
}

/// Reference trajectory for an ODE system on the evaluation grid.
pub fn ode_reference(system: &System, times: &[f64]) -> Result<Vec<f64>> {
    match system {
        System::Toy { y0, .. } => times
            .iter()
            .map(|&t| oracles::toy_analytic(*y0, t))
            .collect(),
        System::Pendulum { .. } => {
            let y0 = system.initial_value().unwrap();
            let sol: ReferenceSolution =
                oracles::pendulum_reference(y0, system.time_horizon(), 1e-3)?;
            Ok(times.iter().map(|&t| sol.sample_linear(t, 0)).collect())
        }
        _ => Err(Error::Config(
            "trajectory reference exists for the ODE systems only".into(),
        )),
    }
}

/// Score a pendulum run: success below the L2 threshold, otherwise
/// classified by the final phase-space energy against the true orbit
/// energy E0 (inside the orbit → stable fixed point, outside → unstable).
pub fn classify_pendulum_outcome(
    config: &TrainConfig,
    trace: &RunTrace,
    threshold: f64,
) -> Result<Outcome> {
    let times = evaluation_times(config.system.time_horizon());
    let params = last_finite_params(trace);
    let (pred, vel) = ode_prediction(config, params, &times)?;
    let reference = ode_reference(&config.system, &times)?;
    let l2 = l2_relative_error(&pred, &reference)?;
    let y0 = config.system.initial_value().unwrap();
    let e0 = pendulum_energy(y0, 0.0);
    let (y_t, v_t) = (*pred.last().unwrap(), *vel.last().unwrap());
    let e_t = pendulum_energy(y_t, v_t);

    let mut borderline = false;
    let class = if l2 < threshold {
        OutcomeClass::Success
    } else {
        let tol = 1e-3 * e0.abs();
        if e_t < e0 - tol {
            OutcomeClass::StableFp
        } else if e_t > e0 + tol {
            OutcomeClass::UnstableFp
        } else {
            borderline = true;
            if e_t <= e0 {
                OutcomeClass::StableFp
            } else {
                OutcomeClass::UnstableFp
            }
        }
    };
    Ok(Outcome {
        l2,
        class,
        min_lf: trace.min_lf,
        final_state: Some((y_t, v_t)),
        borderline,
        diverged: trace.diverged,
    })
}

/// Score a toy run; its failures are influenced by the unstable fixed
/// point only, so the classes are success and unstable-fp.
pub fn classify_toy_outcome(
    config: &TrainConfig,
    trace: &RunTrace,
    threshold: f64,
) -> Result<Outcome> {
    let times = evaluation_times(config.system.time_horizon());
    let params = last_finite_params(trace);
    let (pred, vel) = ode_prediction(config, params, &times)?;
    let reference = ode_reference(&config.system, &times)?;
    let l2 = l2_relative_error(&pred, &reference)?;
    let class = if l2 < threshold {
        OutcomeClass::Success
    } else {
        OutcomeClass::UnstableFp
    };
    Ok(Outcome {
        l2,
        class,
        min_lf: trace.min_lf,
        final_state: Some((*pred.last().unwrap(), *vel.last().unwrap())),
        borderline: false,
        diverged: trace.diverged,
    })
}

/// Classify by system kind.
pub fn classify_outcome(
    config: &TrainConfig,
    trace: &RunTrace,
    threshold: f64,
) -> Result<Outcome> {
    match config.system {
        System::Pendulum { .. } => classify_pendulum_outcome(config, trace, threshold),
        System::Toy { .. } => classify_toy_outcome(config, trace, threshold),
        _ => Err(Error::Config(
            "outcome classification covers the ODE systems".into(),
        )),
    }
}
