//! Harness behaviour on a small synthetic dataset: reproducibility, report
//! shapes, CLI command wrappers.

use std::io::Write;
use std::path::{Path, PathBuf};

use geneo_lab::commands::{cmd_check_diagram, cmd_complexity, cmd_distance, cmd_verify};
use geneo_lab::config::ExperimentConfig;
use geneo_lab::experiment::run_experiment;

fn workspace_path(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

/// Writes a small synthetic IDX dataset: blobby class-dependent images that
/// are learnable but cheap.
fn write_synthetic_dataset(dir: &Path, per_class: usize) -> (PathBuf, PathBuf) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
    let (h, w) = (8usize, 8usize);
    let count = per_class * 10;
    let mut pixels: Vec<u8> = Vec::with_capacity(count * h * w);
    let mut labels: Vec<u8> = Vec::with_capacity(count);
    for c in 0..10u8 {
        for _ in 0..per_class {
            // A bright pixel at a class-dependent location plus noise.
            let (cy, cx) = ((c as usize * 5) % h, (c as usize * 3) % w);
            for y in 0..h {
                for x in 0..w {
                    let base: u8 = if (y, x) == (cy, cx) { 230 } else { 10 };
                    let noise: u8 = rng.gen_range(0..20);
                    pixels.push(base.saturating_add(noise));
                }
            }
            labels.push(c);
        }
    }
    let images_path = dir.join("images-idx3-ubyte");
    let labels_path = dir.join("labels-idx1-ubyte");
    let mut f = std::fs::File::create(&images_path).unwrap();
    f.write_all(&0x0000_0803u32.to_be_bytes()).unwrap();
    f.write_all(&(count as u32).to_be_bytes()).unwrap();
    f.write_all(&(h as u32).to_be_bytes()).unwrap();
    f.write_all(&(w as u32).to_be_bytes()).unwrap();
    f.write_all(&pixels).unwrap();
    let mut f = std::fs::File::create(&labels_path).unwrap();
    f.write_all(&0x0000_0801u32.to_be_bytes()).unwrap();
    f.write_all(&(count as u32).to_be_bytes()).unwrap();
    f.write_all(&labels).unwrap();
    (images_path, labels_path)
}

fn synthetic_config(images: &Path, labels: &Path) -> ExperimentConfig {
    let json = serde_json::json!({
        "dataset": [{"images": images, "labels": labels}],
        "split_seed": 5,
        "scale": "desk",
        "pattern_bank": {"count": 6, "w": 3, "h": 3, "seed": 9},
        "blackbox": {"kind": "supervisor"},
        "targets": "labels",
        "out_dir": "unused",
        "models": [
            {"kind": "geo1", "id": "geo1-6", "patterns": 6, "expected_params": 70,
             "train": {"lr": 0.2, "epochs": 40, "batch": 16, "patience": 40, "seed": 3}},
            {"kind": "mlp", "id": "mlp-64", "hidden": null, "expected_params": 650,
             "train": {"lr": 0.05, "epochs": 40, "batch": 16, "patience": 40, "seed": 4}}
        ]
    });
    serde_json::from_value(json).expect("valid synthetic config")
}

#[test]
fn identical_configs_and_seeds_give_byte_identical_results() {
    let data_dir = tempfile::tempdir().unwrap();
    let (images, labels) = write_synthetic_dataset(data_dir.path(), 30);
    let config = synthetic_config(&images, &labels);

    let out1 = tempfile::tempdir().unwrap();
    let out2 = tempfile::tempdir().unwrap();
    run_experiment(&config, out1.path()).unwrap();
    run_experiment(&config, out2.path()).unwrap();

    let results1 = std::fs::read(out1.path().join("results.csv")).unwrap();
    let results2 = std::fs::read(out2.path().join("results.csv")).unwrap();
    assert_eq!(results1, results2, "results.csv must be byte-identical across reruns");

    let curve1 = std::fs::read(out1.path().join("curve.csv")).unwrap();
    let curve2 = std::fs::read(out2.path().join("curve.csv")).unwrap();
    assert_eq!(curve1, curve2);
}

#[test]
fn curve_rows_are_exactly_the_result_pairs() {
    let data_dir = tempfile::tempdir().unwrap();
    let (images, labels) = write_synthetic_dataset(data_dir.path(), 25);
    let config = synthetic_config(&images, &labels);
    let out = tempfile::tempdir().unwrap();
    let outcome = run_experiment(&config, out.path()).unwrap();

    let results = std::fs::read_to_string(out.path().join("results.csv")).unwrap();
    let curve = std::fs::read_to_string(out.path().join("curve.csv")).unwrap();
    let result_rows: Vec<&str> = results.lines().skip(1).collect();
    let curve_rows: Vec<&str> = curve.lines().skip(1).collect();
    assert_eq!(result_rows.len(), curve_rows.len());
    for (res, cur) in result_rows.iter().zip(curve_rows.iter()) {
        let res_fields: Vec<&str> = res.split(',').collect();
        let cur_fields: Vec<&str> = cur.split(',').collect();
        assert_eq!(res_fields[1], cur_fields[0], "params column");
        assert_eq!(res_fields[3], cur_fields[1], "accuracy column");
    }
    // Round-trip integrity ran inside the experiment; rows must carry the
    // persisted models' counts.
    for row in &outcome.rows {
        let loaded =
            geneo_models::persist::load_model(&out.path().join("models"), &row.model_id).unwrap();
        assert_eq!(loaded.count_params(), row.params);
    }
}

#[test]
fn supervisor_blackbox_fidelity_equals_accuracy() {
    let data_dir = tempfile::tempdir().unwrap();
    let (images, labels) = write_synthetic_dataset(data_dir.path(), 20);
    let config = synthetic_config(&images, &labels);
    let out = tempfile::tempdir().unwrap();
    let outcome = run_experiment(&config, out.path()).unwrap();
    for row in &outcome.rows {
        assert_eq!(row.fidelity, Some(row.accuracy));
    }
}

#[test]
fn rescaled_run_halves_input_dimensions() {
    let data_dir = tempfile::tempdir().unwrap();
    let (images, labels) = write_synthetic_dataset(data_dir.path(), 25);
    let mut config = synthetic_config(&images, &labels);
    config.rescale = geneo_lab::config::RescaleKind::Max2x2;
    // 4x4 inputs after rescaling: the MLP row must re-declare its size.
    config.models = vec![serde_json::from_value(serde_json::json!(
        {"kind": "mlp", "id": "mlp-16", "hidden": null, "expected_params": 170,
         "train": {"lr": 0.05, "epochs": 30, "batch": 16, "patience": 30, "seed": 4}}
    ))
    .unwrap()];
    let out = tempfile::tempdir().unwrap();
    let outcome = run_experiment(&config, out.path()).unwrap();
    assert_eq!(outcome.row("mlp-16").unwrap().params, 170);
    assert_eq!(outcome.dataset.images[0].height, 4);
}

#[test]
fn config_rejects_wrong_parameter_declarations() {
    let data_dir = tempfile::tempdir().unwrap();
    let (images, labels) = write_synthetic_dataset(data_dir.path(), 20);
    let mut config = synthetic_config(&images, &labels);
    config.models = vec![serde_json::from_value(serde_json::json!(
        {"kind": "mlp", "id": "bad", "hidden": null, "expected_params": 9999,
         "train": {"lr": 0.05, "epochs": 5, "batch": 16, "patience": 5, "seed": 4}}
    ))
    .unwrap()];
    let out = tempfile::tempdir().unwrap();
    let err = match run_experiment(&config, out.path()) {
        Err(e) => e,
        Ok(_) => panic!("expected the parameter-count check to fail"),
    };
    assert!(err.to_string().contains("does not match the architecture formula"), "{err}");
}

#[test]
fn missing_dataset_is_a_startup_error() {
    let json = serde_json::json!({
        "dataset": [{"images": "/nonexistent/images", "labels": "/nonexistent/labels"}],
        "split_seed": 1,
        "pattern_bank": {"count": 5, "w": 3, "h": 3, "seed": 1},
        "blackbox": {"kind": "supervisor"},
        "models": []
    });
    let config: ExperimentConfig = serde_json::from_value(json).unwrap();
    assert!(config.validate().is_err());
}

#[test]
fn distance_command_reports_the_collapsing_pair() {
    let out = cmd_distance(
        &workspace_path("configs/universes/toy.json"),
        &workspace_path("configs/observers/toy.json"),
        "reference",
        "surrogate",
        "discrete",
    )
    .unwrap();
    assert!(out.contains("h = 0.25"), "{out}");
    assert!(out.contains("backward 'collapse'"), "{out}");
    // Self-distance is zero.
    let self_out = cmd_distance(
        &workspace_path("configs/universes/toy.json"),
        &workspace_path("configs/observers/toy.json"),
        "reference",
        "reference",
        "discrete",
    )
    .unwrap();
    assert!(self_out.contains("h = 0\n"), "{self_out}");
}

#[test]
fn check_diagram_command_typechecks_and_prices() {
    let out = cmd_check_diagram(
        &workspace_path("configs/diagrams/pipeline.gdsl"),
        Some(&workspace_path("configs/diagrams/params.json")),
    )
    .unwrap();
    assert!(out.contains("surrogate: Img -> Scores @ 30"), "{out}");
    assert!(out.contains("reference: Img -> Scores @ inf"), "{out}");

    let c = cmd_complexity(
        &workspace_path("configs/diagrams/pipeline.gdsl"),
        "surrogate",
        Some(&workspace_path("configs/diagrams/params.json")),
    )
    .unwrap();
    assert_eq!(c, 30.0);

    // An ill-typed pipeline is an error naming the mismatch.
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.gdsl");
    std::fs::write(&bad, "sort A; sort B; gen f : A -> B; diagram d = f ; f;").unwrap();
    let err = cmd_check_diagram(&bad, None).unwrap_err();
    assert!(format!("{err:#}").contains("does not match"), "{err:#}");
}

#[test]
fn verify_command_knows_its_suites() {
    assert!(cmd_verify("functor-law", 7, 10).unwrap());
    assert!(cmd_verify("unknown-suite", 7, 10).is_err());
}

#[test]
fn expansive_arrow_fails_observer_validation() {
    use geneo_core::json::{parse_observer, parse_space, SpaceRegistry};
    let mut registry = SpaceRegistry::new();
    registry.register(
        parse_space(&serde_json::json!({
            "id": "wide",
            "elements": ["a", "b"],
            "metric": {"kind": "table", "d": [[0.0, 2.0], [2.0, 0.0]]},
            "group": {"compose": [[0]]},
            "action": {"kind": "trivial"}
        }))
        .unwrap(),
    );
    registry.register(
        parse_space(&serde_json::json!({
            "id": "narrow",
            "elements": ["a", "b"],
            "metric": {"kind": "table", "d": [[0.0, 1.0], [1.0, 0.0]]},
            "group": {"compose": [[0]]},
            "action": {"kind": "trivial"}
        }))
        .unwrap(),
    );
    // narrow -> wide doubles the only distance: expansive, must be rejected.
    let err = parse_observer(
        &serde_json::json!({
            "translations": {
                "objects": ["wide", "narrow"],
                "arrows": [
                    {"id": "id_w", "dom": "wide", "cod": "wide", "kind": "identity"},
                    {"id": "id_n", "dom": "narrow", "cod": "narrow", "kind": "identity"},
                    {"id": "stretch", "dom": "narrow", "cod": "wide", "kind": "lookup",
                     "table": [0, 1], "certificate": "validated"}
                ],
                "closure": [[0,0,0],[1,1,1],[1,2,2],[2,0,2]]
            }
        }),
        &registry,
    );
    match err {
        Err(e) => assert!(format!("{e}").contains("non-expansiveness"), "{e}"),
        Ok(_) => panic!("expected the expansive arrow to be rejected"),
    }
}
