//! Quick wall-time probe for the training loop.

use pinn_lab::network::Activation;
use pinn_lab::systems::System;
use pinn_lab::training::{train, NetArch, Schedule, TrainConfig};

fn main() {
    for (label, system, hidden, hard_ic, schedule) in [
        (
            "toy 4x50 T=2.5",
            System::toy(0.001, 2.5),
            vec![50; 4],
            true,
            Schedule::PhysicsDriven,
        ),
        (
            "pendulum 4x50 T=7.5",
            System::pendulum(25.0, 7.5),
            vec![50; 4],
            false,
            Schedule::Vanilla,
        ),
    ] {
        let epochs = 2000;
        let cfg = TrainConfig {
            system,
            network: NetArch {
                hidden,
                activation: Activation::Tanh,
                initializer: pinn_lab::network::Initializer::GlorotUniform,
            },
            lambda: 1.0,
            learning_rate: 1e-3,
            lr_decay: None,
            epochs,
            n_collocation: Some(64),
            n_ic: None,
            n_bc: None,
            sampling: None,
            schedule,
            hard_ic,
            seed: 0,
            checkpoint_epochs: Some(vec![]),
            data_file: None,
        };
        let t0 = std::time::Instant::now();
        let trace = train(&cfg).unwrap();
        let dt = t0.elapsed().as_secs_f64();
        println!(
            "{label}: {epochs} epochs in {dt:.2}s -> {:.3} ms/epoch (final L={:.3e})",
            dt * 1e3 / epochs as f64,
            trace.l.last().unwrap()
        );
    }
}
