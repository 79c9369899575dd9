//! Scan seeds for a late-escape toy run: nonphysical at the midpoint
//! checkpoint, converged at the end.

use pinn_lab::evaluation::{evaluation_times, l2_relative_error, ode_prediction, ode_reference};
use pinn_lab::network::{Activation, Initializer};
use pinn_lab::systems::System;
use pinn_lab::training::{train, NetArch, Schedule, TrainConfig};

fn main() {
    let seeds: Vec<u64> = std::env::args()
        .nth(1)
        .map(|s| (0..s.parse::<u64>().unwrap()).collect())
        .unwrap_or_else(|| (0..20).collect());
    let times = evaluation_times(8.0);
    let sys = System::toy(0.5, 8.0);
    let reference = ode_reference(&sys, &times).unwrap();

    use rayon::prelude::*;
    seeds.par_iter().for_each(|&seed| {
        let cfg = TrainConfig {
            system: System::toy(0.5, 8.0),
            network: NetArch {
                hidden: vec![50; 4],
                activation: Activation::Tanh,
                initializer: Initializer::GlorotUniform,
            },
            lambda: 1.0,
            learning_rate: 1e-3,
            lr_decay: None,
            epochs: 50000,
            n_collocation: Some(64),
            n_ic: None,
            n_bc: None,
            sampling: Some(pinn_lab::training::Sampling::ResampleEachEpoch),
            schedule: Schedule::PhysicsDriven,
            hard_ic: true,
            seed,
            checkpoint_epochs: Some(vec![0, 25000, 50000]),
            data_file: None,
        };
        let trace = train(&cfg).unwrap();
        let l2_at = |params| {
            let (pred, _) = ode_prediction(&cfg, params, &times).unwrap();
            l2_relative_error(&pred, &reference).unwrap()
        };
        let l2_mid = l2_at(trace.checkpoint(25000).unwrap());
        let l2_fin = l2_at(&trace.final_params);
        println!(
            "seed {seed}: L2@25k = {l2_mid:.4}  L2@50k = {l2_fin:.4}  minLf = {:.3e}  {}",
            trace.min_lf,
            if l2_mid > 0.15 && l2_fin < 0.15 {
                "LATE-ESCAPE"
            } else {
                ""
            }
        );
    });
}
