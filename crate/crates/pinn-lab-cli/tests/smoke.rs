//! Every shipped recipe must run to exit 0 on a clean checkout, with epoch
//! counts shortened to smoke-test scale.

use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn recipes_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../recipes")
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_pinn-lab")
}

/// Shrink a recipe to smoke scale without touching its structure.
fn shrink(recipe: &mut Value, out_dir: &Path) {
    recipe["output_dir"] = Value::String(out_dir.to_string_lossy().into_owned());
    if let Some(n) = recipe.get_mut("seeds_per_config") {
        *n = 1.into();
    }
    let shrink_train = |cfg: &mut Value| {
        cfg["epochs"] = 40.into();
        cfg["checkpoint_epochs"] = Value::Null;
        if let Some(s) = cfg.pointer_mut("/schedule/switch_epoch") {
            *s = 20.into();
        }
        cfg["n_collocation"] = 32.into();
        if !cfg["n_ic"].is_null() {
            cfg["n_ic"] = 16.into();
        }
        if !cfg["n_bc"].is_null() {
            cfg["n_bc"] = 16.into();
        }
    };
    match recipe.get_mut("train") {
        Some(Value::Array(configs)) => configs.iter_mut().for_each(shrink_train),
        Some(cfg @ Value::Object(_)) => shrink_train(cfg),
        _ => {}
    }
    if let Some(sweep) = recipe.get_mut("sweep") {
        sweep["seeds"] = 1.into();
        shrink_train(&mut sweep["base"]);
    }
    if let Some(ls) = recipe.get_mut("landscape") {
        ls["checkpoints"] = serde_json::json!([0, 20, 40]);
        ls["resolution"] = serde_json::json!([5, 5]);
        ls["n_collocation"] = 32.into();
        // point at the shrunken training run in the smoke output dir
        let run_ref = ls["run_dir"].as_str().unwrap().to_string();
        let file = Path::new(&run_ref).file_name().unwrap();
        ls["run_dir"] = Value::String(out_dir.join(file).to_string_lossy().into_owned());
    }
}

fn subcommand(recipe: &Value) -> &'static str {
    if recipe.get("train").is_some_and(|v| !v.is_null()) {
        "train"
    } else if recipe.get("sweep").is_some_and(|v| !v.is_null()) {
        "sweep"
    } else if recipe.get("landscape").is_some_and(|v| !v.is_null()) {
        "landscape"
    } else {
        "oracle"
    }
}

#[test]
fn all_recipes_run_to_exit_zero_at_smoke_scale() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    std::fs::create_dir_all(&out_dir).unwrap();

    let mut recipes: Vec<PathBuf> = std::fs::read_dir(recipes_dir())
        .expect("recipes directory")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    assert!(!recipes.is_empty(), "no recipes found");
    // landscape recipes depend on their training run's pointer file
    recipes.sort_by_key(|p| {
        let text = std::fs::read_to_string(p).unwrap();
        let v: Value = serde_json::from_str(&text).unwrap();
        (subcommand(&v) == "landscape", p.clone())
    });

    for path in recipes {
        let mut recipe: Value =
            serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        shrink(&mut recipe, &out_dir);
        let manifest_path = tmp.path().join(path.file_name().unwrap());
        std::fs::write(&manifest_path, serde_json::to_string_pretty(&recipe).unwrap()).unwrap();

        let cmd = subcommand(&recipe);
        let output = Command::new(bin())
            .arg(cmd)
            .arg(&manifest_path)
            .arg("--threads")
            .arg("2")
            .output()
            .expect("binary runs");
        assert!(
            output.status.success(),
            "{} {} exited with {:?}\nstderr: {}",
            cmd,
            path.display(),
            output.status.code(),
            String::from_utf8_lossy(&output.stderr)
        );
    }
}

#[test]
fn missing_manifest_exits_one_and_names_the_path() {
    let output = Command::new(bin())
        .arg("train")
        .arg("/nonexistent/manifest.json")
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("/nonexistent/manifest.json"), "{stderr}");
}

#[test]
fn quick_train_writes_one_trace_row_per_epoch() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = serde_json::json!({
        "id": "quick-toy",
        "output_dir": tmp.path().join("out"),
        "train": {
            "system": {"name": "toy", "y0": 0.5, "t_max": 2.5},
            "network": {"hidden": [8, 8], "activation": "tanh"},
            "epochs": 1000,
            "n_collocation": 8,
            "schedule": {"kind": "physics-driven"},
            "hard_ic": true,
            "seed": 3
        }
    });
    let path = tmp.path().join("quick.json");
    std::fs::write(&path, manifest.to_string()).unwrap();
    let output = Command::new(bin()).arg("train").arg(&path).output().unwrap();
    assert!(output.status.success());

    let pointer: Value = serde_json::from_str(
        &std::fs::read_to_string(tmp.path().join("out/quick-toy.latest.json")).unwrap(),
    )
    .unwrap();
    let run_dir = PathBuf::from(pointer["dir"].as_str().unwrap());
    let csv = std::fs::read_to_string(run_dir.join("losses.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1001); // header + 1000 epochs
}

#[test]
fn landscape_with_missing_checkpoint_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = serde_json::json!({
        "id": "bad-landscape",
        "output_dir": tmp.path().join("out"),
        "landscape": {
            "run_dir": tmp.path().join("nope"),
            "checkpoints": [0, 1, 2],
            "t_values": [1.0]
        }
    });
    let path = tmp.path().join("bad.json");
    std::fs::write(&path, manifest.to_string()).unwrap();
    let output = Command::new(bin()).arg("landscape").arg(&path).output().unwrap();
    assert_eq!(output.status.code(), Some(1));
}
