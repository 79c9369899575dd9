//! Subcommand implementations. Exit codes: 0 done, 1 configuration or I/O
//! problem, 2 at least one run diverged.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};

use pinn_lab::evaluation::{classify_outcome, run_sweep, sweep_rows_csv, sweep_table_markdown};
use pinn_lab::landscape::{build_directions, evaluate_grid, GridSettings};
use pinn_lab::network::{OutputTransform, ParameterVector};
use pinn_lab::oracles;
use pinn_lab::systems::System;
use pinn_lab::training::sampler::derive_seed;
use pinn_lab::training::{train, write_run_artifacts, TrainConfig};

use crate::manifest::{ExperimentManifest, OracleManifest};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_DIVERGED: i32 = 2;

fn hash12(value: &impl serde::Serialize) -> String {
    use sha2::{Digest, Sha256};
    let json = serde_json::to_string(value).expect("manifest serializes");
    let digest = Sha256::digest(json.as_bytes());
    digest.iter().take(6).map(|b| format!("{b:02x}")).collect()
}

/// Content-addressed experiment directory; refuses to reuse a directory
/// recorded under a different configuration hash.
fn experiment_dir(manifest: &ExperimentManifest, hash: &str) -> anyhow::Result<PathBuf> {
    let dir = manifest.output_dir.join(format!("{}-{hash}", manifest.id));
    let marker = dir.join("experiment.json");
    if marker.exists() {
        let prev: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&marker)?)?;
        if prev["hash"].as_str() != Some(hash) {
            bail!(
                "output directory {} holds artifacts for a different configuration",
                dir.display()
            );
        }
    }
    std::fs::create_dir_all(&dir)?;
    std::fs::write(
        &marker,
        serde_json::to_string_pretty(&serde_json::json!({
            "id": manifest.id,
            "hash": hash,
        }))?,
    )?;
    Ok(dir)
}

pub fn load_manifest(path: &Path, seed_override: Option<u64>) -> anyhow::Result<ExperimentManifest> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read manifest {}", path.display()))?;
    let mut manifest: ExperimentManifest = serde_json::from_str(&text)
        .with_context(|| format!("manifest {} is not valid", path.display()))?;
    if seed_override.is_some() {
        manifest.seed = seed_override;
    }
    Ok(manifest)
}

fn apply_seed(config: &mut TrainConfig, global: Option<u64>) {
    if let Some(s) = global {
        config.seed = s;
    }
}

pub fn cmd_train(manifest: &ExperimentManifest, verbose: bool) -> anyhow::Result<i32> {
    let Some(entry) = &manifest.train else {
        bail!("manifest has no train section");
    };
    let mut configs = entry.configs();
    if configs.is_empty() {
        bail!("train section is empty");
    }
    for c in configs.iter_mut() {
        apply_seed(c, manifest.seed);
        c.validate()
            .map_err(|e| anyhow::anyhow!("invalid train config: {e}"))?;
    }
    let hash = hash12(&(&configs, manifest.seeds_per_config));
    let dir = experiment_dir(manifest, &hash)?;

    let mut any_diverged = false;
    let mut summary = String::from("config,seed_index,run_seed,system,y0,schedule,L2,class,minLf,diverged\n");
    let mut summary_has_rows = false;
    for (ci, base) in configs.iter().enumerate() {
        for s in 0..manifest.seeds_per_config {
            let mut config = base.clone();
            if manifest.seeds_per_config > 1 {
                config.seed = derive_seed(base.seed, s as u64);
            }
            let run_dir = if configs.len() == 1 && manifest.seeds_per_config == 1 {
                dir.clone()
            } else {
                dir.join(format!("config{ci}-seed{s}"))
            };
            if verbose {
                eprintln!(
                    "training {} config {ci} seed {s} ({} epochs)…",
                    config.system.name(),
                    config.epochs
                );
            }
            let trace = train(&config).map_err(|e| anyhow::anyhow!("{e}"))?;
            any_diverged |= trace.diverged;
            write_run_artifacts(&run_dir, &config, &trace)
                .map_err(|e| anyhow::anyhow!("{e}"))?;

            if matches!(config.system, System::Toy { .. } | System::Pendulum { .. }) {
                let outcome = classify_outcome(&config, &trace, 0.15)
                    .map_err(|e| anyhow::anyhow!("{e}"))?;
                let y0 = match &config.system {
                    System::Pendulum { y0_deg, .. } => *y0_deg,
                    System::Toy { y0, .. } => *y0,
                    _ => f64::NAN,
                };
                let schedule = match config.schedule {
                    pinn_lab::training::Schedule::PhysicsDriven => "physics-driven",
                    pinn_lab::training::Schedule::Vanilla => "vanilla",
                    pinn_lab::training::Schedule::DataGuided { .. } => "data-guided",
                };
                summary.push_str(&format!(
                    "{ci},{s},{},{},{y0},{schedule},{},{},{},{}\n",
                    config.seed,
                    config.system.name(),
                    outcome.l2,
                    outcome.class.label(),
                    trace.min_lf,
                    trace.diverged
                ));
                summary_has_rows = true;
            }
        }
    }
    if summary_has_rows {
        std::fs::write(dir.join("summary.csv"), summary)?;
    }
    // stable pointer so downstream manifests can reference this run
    std::fs::write(
        manifest.output_dir.join(format!("{}.latest.json", manifest.id)),
        serde_json::to_string_pretty(&serde_json::json!({ "dir": dir }))?,
    )?;
    if verbose {
        eprintln!("artifacts in {}", dir.display());
    }
    Ok(if any_diverged { EXIT_DIVERGED } else { EXIT_OK })
}

pub fn cmd_sweep(manifest: &ExperimentManifest, verbose: bool) -> anyhow::Result<i32> {
    let Some(spec) = &manifest.sweep else {
        bail!("manifest has no sweep section");
    };
    let mut spec = spec.clone();
    apply_seed(&mut spec.base, manifest.seed);
    spec.base
        .validate()
        .map_err(|e| anyhow::anyhow!("invalid sweep base config: {e}"))?;
    let hash = hash12(&spec);
    let dir = experiment_dir(manifest, &hash)?;
    if verbose {
        eprintln!(
            "sweep over {} T × {} y0 with {} seeds…",
            spec.t_values.len(),
            spec.y0_values.len(),
            spec.seeds
        );
    }
    let cells = run_sweep(&spec).map_err(|e| anyhow::anyhow!("{e}"))?;
    std::fs::write(dir.join("runs.csv"), sweep_rows_csv(&cells))?;
    let triplets = matches!(spec.base.system, System::Pendulum { .. });
    std::fs::write(dir.join("table.md"), sweep_table_markdown(&cells, triplets))?;
    let mut stats = String::from("T,y0,success_rate,median_minLf\n");
    for c in &cells {
        stats.push_str(&format!(
            "{},{},{},{}\n",
            c.t,
            c.y0,
            c.success_rate(),
            c.median_min_lf()
        ));
    }
    std::fs::write(dir.join("cells.csv"), stats)?;
    if verbose {
        eprintln!("artifacts in {}", dir.display());
    }
    Ok(EXIT_OK)
}

/// A run reference is either the run directory itself or a pointer JSON
/// (`{"dir": …}`) written by `cmd_train`.
fn resolve_run_dir(path: &Path) -> anyhow::Result<PathBuf> {
    if path.is_dir() {
        return Ok(path.to_path_buf());
    }
    if path.is_file() {
        let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if let Some(dir) = v["dir"].as_str() {
            return Ok(PathBuf::from(dir));
        }
    }
    bail!("run reference {} is neither a run directory nor a pointer", path.display());
}

fn load_run_config(run_dir: &Path) -> anyhow::Result<TrainConfig> {
    let meta_path = run_dir.join("metadata.json");
    let meta: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(&meta_path)
            .with_context(|| format!("cannot read {}", meta_path.display()))?,
    )?;
    Ok(serde_json::from_value(meta["config"].clone())
        .context("run metadata holds no usable config")?)
}

pub fn cmd_landscape(manifest: &ExperimentManifest, verbose: bool) -> anyhow::Result<i32> {
    let Some(ls) = &manifest.landscape else {
        bail!("manifest has no landscape section");
    };
    let hash = hash12(ls);
    let dir = experiment_dir(manifest, &hash)?;

    let run_dir = resolve_run_dir(&ls.run_dir)?;
    let config = load_run_config(&run_dir)?;
    let spec = config.network_spec(0);
    let load = |epoch: usize| -> anyhow::Result<ParameterVector> {
        let path = run_dir.join(format!("checkpoint_{epoch}.bin"));
        ParameterVector::load(&path)
            .map_err(|e| anyhow::anyhow!("checkpoint {}: {e}", path.display()))
    };
    let theta0 = load(ls.checkpoints[0])?;
    let theta_mid = load(ls.checkpoints[1])?;
    let theta_final = load(ls.checkpoints[2])?;
    let dirs = build_directions(&theta0, &theta_mid, &theta_final)
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    let transform = if config.hard_ic {
        OutputTransform::HardIc {
            y0: config.system.initial_value().unwrap(),
        }
    } else {
        OutputTransform::Identity
    };

    for &t in &ls.t_values {
        let settings = GridSettings {
            extents: ls
                .extents
                .map(|e| ((e[0][0], e[0][1]), (e[1][0], e[1][1]))),
            resolution: (ls.resolution[0], ls.resolution[1]),
            n_collocation: ls.n_collocation,
            seed: manifest.seed.unwrap_or(config.seed),
        };
        if verbose {
            eprintln!("grid at T = {t}…");
        }
        let mut grid = evaluate_grid(
            &config.system,
            &spec,
            transform,
            &theta0,
            &dirs,
            &theta_mid,
            &theta_final,
            t,
            &settings,
        )
        .map_err(|e| anyhow::anyhow!("{e}"))?;
        if let Some(thr) = ls.truncation {
            grid = grid.truncate(thr).map_err(|e| anyhow::anyhow!("{e}"))?;
        }
        std::fs::write(dir.join(format!("grid_T{t}.csv")), grid.to_csv())?;
        std::fs::write(
            dir.join(format!("grid_T{t}.json")),
            serde_json::to_string_pretty(&grid.metadata_json(ls.log_scale))?,
        )?;
    }
    if verbose {
        eprintln!("artifacts in {}", dir.display());
    }
    Ok(EXIT_OK)
}

pub fn cmd_oracle(manifest: &ExperimentManifest, verbose: bool) -> anyhow::Result<i32> {
    let Some(oracle) = &manifest.oracle else {
        bail!("manifest has no oracle section");
    };
    let hash = hash12(oracle);
    let dir = experiment_dir(manifest, &hash)?;
    match oracle {
        OracleManifest::Pendulum { y0_deg, t_max, dt } => {
            let sol = oracles::pendulum_reference(y0_deg.to_radians(), *t_max, *dt)
                .map_err(|e| anyhow::anyhow!("{e}"))?;
            std::fs::write(dir.join("pendulum.csv"), sol.to_csv())?;
        }
        OracleManifest::Toy { y0, t_max, n } => {
            let sol = oracles::toy_reference(*y0, *t_max, *n)
                .map_err(|e| anyhow::anyhow!("{e}"))?;
            std::fs::write(dir.join("toy.csv"), sol.to_csv())?;
        }
        OracleManifest::AllenCahn {
            nx,
            dt,
            t_max,
            pair_nx,
        } => {
            let sol = oracles::allen_cahn_reference(*nx, *dt, *t_max)
                .map_err(|e| anyhow::anyhow!("{e}"))?;
            std::fs::write(dir.join(format!("allen_cahn_nx{nx}.csv")), sol.to_csv())?;
            if let Some(nx2) = pair_nx {
                let fine = oracles::allen_cahn_reference(*nx2, *dt, *t_max)
                    .map_err(|e| anyhow::anyhow!("{e}"))?;
                std::fs::write(dir.join(format!("allen_cahn_nx{nx2}.csv")), fine.to_csv())?;
                let diff = self_convergence_max_norm(&sol, &fine)
                    .map_err(|e| anyhow::anyhow!("{e}"))?;
                std::fs::write(
                    dir.join("self_convergence.json"),
                    serde_json::to_string_pretty(&serde_json::json!({
                        "nx": nx, "pair_nx": nx2, "max_norm_diff": diff,
                    }))?,
                )?;
                if verbose {
                    eprintln!("self-convergence max-norm difference: {diff:e}");
                }
            }
        }
    }
    if verbose {
        eprintln!("artifacts in {}", dir.display());
    }
    Ok(EXIT_OK)
}

/// Max-norm difference of two periodic-grid solutions at the final time,
/// compared on the coarse grid (which must be nested in the fine one).
pub fn self_convergence_max_norm(
    coarse: &oracles::ReferenceSolution,
    fine: &oracles::ReferenceSolution,
) -> pinn_lab::Result<f64> {
    let (nc, nf) = (coarse.dim, fine.dim);
    if nf % nc != 0 {
        return Err(pinn_lab::Error::Config(format!(
            "grids {nc} and {nf} are not nested"
        )));
    }
    let stride = nf / nc;
    let uc = coarse.row(coarse.times.len() - 1);
    let uf = fine.row(fine.times.len() - 1);
    let mut worst = 0.0f64;
    for i in 0..nc {
        worst = worst.max((uc[i] - uf[i * stride]).abs());
    }
    Ok(worst)
}
