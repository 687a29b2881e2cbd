//! End-to-end experiment orchestration: data ingestion, model training,
//! metric evaluation and CSV reporting.

use std::path::Path;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};

use geneo_core::observer::fidelity;
use geneo_core::space::{Element, PerceptionSpace};

use geneo_models::activation::{downscale_2x2_max, extract_cwm_sparse, extract_features};
use geneo_models::blackbox::{BlackBox, PredictionTable};
use geneo_models::bridge;
use geneo_models::dataset::{load_mnist, stratified_split, Image, ImageDataset, Split};
use geneo_models::models::{accuracy, CnnModel, Geo1Model, Geo2Model, MlpModel};
use geneo_models::patterns::{sample_patterns, PatternBank};
use geneo_models::persist::{load_model, save_model, PersistedModel};
use geneo_models::train::{train_sgd, TrainConfig, TrainOutcome};

use crate::config::{BlackBoxSpec, ExperimentConfig, ModelSpec, RescaleKind, TrainSpec};

/// One reported row of an experiment.
#[derive(Debug, Clone)]
pub struct ResultRow {
    pub model_id: String,
    pub params: usize,
    pub nonlinearities: usize,
    pub accuracy: f64,
    pub fidelity: Option<f64>,
    pub runtime_seconds: f64,
    pub split_seed: u64,
    pub model_seed: u64,
}

/// Everything an experiment run produces, kept in memory for the tests.
pub struct ExperimentOutcome {
    pub rows: Vec<ResultRow>,
    pub dataset: ImageDataset,
    pub bank: PatternBank,
    pub trained_geo1: Vec<(String, Geo1Model)>,
    pub trained_geo2: Vec<(String, Geo2Model)>,
    pub trained_mlp: Vec<(String, MlpModel)>,
    pub trained_cnn: Vec<(String, CnnModel)>,
    pub histories: Vec<(String, TrainOutcome)>,
    /// Rows that failed, with their error text.
    pub failures: Vec<(String, String)>,
}

impl ExperimentOutcome {
    pub fn geo1(&self, id: &str) -> Option<&Geo1Model> {
        self.trained_geo1.iter().find(|(mid, _)| mid == id).map(|(_, m)| m)
    }

    pub fn cnn(&self, id: &str) -> Option<&CnnModel> {
        self.trained_cnn.iter().find(|(mid, _)| mid == id).map(|(_, m)| m)
    }

    pub fn mlp(&self, id: &str) -> Option<&MlpModel> {
        self.trained_mlp.iter().find(|(mid, _)| mid == id).map(|(_, m)| m)
    }

    pub fn row(&self, id: &str) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.model_id == id)
    }
}

fn to_train_config(spec: &TrainSpec) -> TrainConfig {
    TrainConfig {
        learning_rate: spec.lr,
        max_epochs: spec.epochs,
        batch_size: spec.batch,
        seed: spec.seed,
        patience: spec.patience,
    }
}

fn slice_bank(bank: &PatternBank, count: usize) -> PatternBank {
    PatternBank {
        patterns: bank.patterns[..count].to_vec(),
        patch_w: bank.patch_w,
        patch_h: bank.patch_h,
        provenance: bank.provenance[..count].to_vec(),
        seed: bank.seed,
    }
}

/// Loads and concatenates the configured IDX pairs, applies the optional
/// rescale, and splits.
pub fn load_dataset(config: &ExperimentConfig) -> Result<ImageDataset> {
    let mut images = Vec::new();
    let mut labels = Vec::new();
    for pair in &config.dataset {
        let (im, lb) = load_mnist(&pair.images, &pair.labels)
            .with_context(|| format!("loading {}", pair.images.display()))?;
        images.extend(im);
        labels.extend(lb);
    }
    if config.rescale == RescaleKind::Max2x2 {
        images = images
            .iter()
            .map(downscale_2x2_max)
            .collect::<std::result::Result<Vec<_>, _>>()?;
    }
    Ok(stratified_split(images, labels, config.split_seed)?)
}

struct SharedData<'a> {
    ds: &'a ImageDataset,
    train_idx: Vec<usize>,
    val_idx: Vec<usize>,
    test_idx: Vec<usize>,
    /// Training/early-stopping targets (ground truth or black-box outputs).
    targets: Vec<u8>,
    /// Ground truth, for the accuracy column.
    truth: Vec<u8>,
    split_seed: u64,
}

/// Runs the whole experiment described by `config`, writing `results.csv`,
/// `curve.csv` and `timings.csv` under the output directory and persisting
/// each trained model.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentOutcome> {
    let ds = load_dataset(config)?;
    let (h, w) = match ds.images.first() {
        Some(img) => (img.height, img.width),
        None => bail!("dataset is empty"),
    };
    // The dataset is already rescaled here, so formulas check against the
    // dimensions models will actually see.
    for spec in &config.models {
        spec.check_params(h, w)?;
    }

    let train_idx = ds.indices_of(Split::Train);
    let val_idx = ds.indices_of(Split::Val);
    let test_idx = ds.indices_of(Split::Test);

    // Pattern bank, always sampled from the train split.
    let train_images: Vec<Image> = train_idx.iter().map(|&i| ds.images[i].clone()).collect();
    let bank = sample_patterns(
        &train_images,
        config.pattern_bank.count,
        config.pattern_bank.w,
        config.pattern_bank.h,
        config.pattern_bank.seed,
    )?;

    // Resolve the black-box. A CNN black-box is trained first, on ground
    // truth.
    let mut blackbox_table: Option<PredictionTable> = None;
    let blackbox_model_id = match &config.blackbox {
        BlackBoxSpec::Cnn { model_id } => Some(model_id.clone()),
        BlackBoxSpec::Table { path } => {
            let table = PredictionTable::from_csv(path)?;
            if table.predicted.len() != ds.len() {
                bail!(
                    "prediction table covers {} rows but the dataset has {}",
                    table.predicted.len(),
                    ds.len()
                );
            }
            blackbox_table = Some(table);
            None
        }
        _ => None,
    };

    let mut shared = SharedData {
        ds: &ds,
        train_idx,
        val_idx,
        test_idx,
        targets: ds.labels.clone(),
        truth: ds.labels.clone(),
        split_seed: config.split_seed,
    };
    let mut acc = Accumulator::default();

    // Train the black-box CNN first when configured.
    if let Some(bb_id) = &blackbox_model_id {
        let spec = config
            .models
            .iter()
            .find(|m| m.id() == bb_id)
            .ok_or_else(|| anyhow!("blackbox model '{bb_id}' not in config"))?;
        match train_row(config, spec, &shared, &bank, out_dir) {
            Ok((row, trained, history)) => acc.record(row, trained, history),
            Err(e) => bail!("black-box training failed: {e}"),
        }
    }

    // Materialize black-box labels for the surrogate-training regime.
    let blackbox_labels: Option<Vec<u8>> = match &config.blackbox {
        BlackBoxSpec::Supervisor => Some(ds.labels.clone()),
        BlackBoxSpec::Cnn { model_id } => {
            let cnn = acc
                .cnn(model_id)
                .ok_or_else(|| anyhow!("black-box cnn '{model_id}' missing after training"))?;
            Some(BlackBox::Cnn(cnn).labels_for(&ds.images))
        }
        BlackBoxSpec::Table { .. } => blackbox_table.as_ref().map(|t| t.predicted.clone()),
        BlackBoxSpec::None => None,
    };
    if config.targets == "blackbox" {
        shared.targets = blackbox_labels
            .clone()
            .ok_or_else(|| anyhow!("targets = blackbox needs a black-box"))?;
    }

    // Remaining rows; failures abort only their own row.
    for spec in &config.models {
        if Some(spec.id().to_string()) == blackbox_model_id {
            continue;
        }
        match train_row(config, spec, &shared, &bank, out_dir) {
            Ok((row, trained, history)) => acc.record(row, trained, history),
            Err(e) => {
                eprintln!("model '{}' failed: {e}", spec.id());
                acc.failures.push((spec.id().to_string(), e.to_string()));
            }
        }
    }

    let mut outcome = ExperimentOutcome {
        rows: acc.rows,
        dataset: ds,
        bank,
        trained_geo1: acc.trained_geo1,
        trained_geo2: acc.trained_geo2,
        trained_mlp: acc.trained_mlp,
        trained_cnn: acc.trained_cnn,
        histories: acc.histories,
        failures: acc.failures,
    };

    // Fidelity against the black-box, measured through the observer layer on
    // the test split.
    let test_idx = outcome.dataset.indices_of(Split::Test);
    if blackbox_labels.is_some() && !matches!(config.blackbox, BlackBoxSpec::Supervisor) {
        compute_fidelities(config, &mut outcome, &test_idx)?;
    } else if matches!(config.blackbox, BlackBoxSpec::Supervisor) {
        // Fidelity to the supervisor is agreement with ground truth.
        for row in outcome.rows.iter_mut() {
            row.fidelity = Some(row.accuracy);
        }
    }

    write_reports(&outcome, out_dir)?;
    verify_round_trips(&outcome, out_dir)?;
    Ok(outcome)
}

#[derive(Default)]
struct Accumulator {
    rows: Vec<ResultRow>,
    trained_geo1: Vec<(String, Geo1Model)>,
    trained_geo2: Vec<(String, Geo2Model)>,
    trained_mlp: Vec<(String, MlpModel)>,
    trained_cnn: Vec<(String, CnnModel)>,
    histories: Vec<(String, TrainOutcome)>,
    failures: Vec<(String, String)>,
}

impl Accumulator {
    fn cnn(&self, id: &str) -> Option<&CnnModel> {
        self.trained_cnn.iter().find(|(mid, _)| mid == id).map(|(_, m)| m)
    }

    fn record(&mut self, row: ResultRow, trained: TrainedModel, history: TrainOutcome) {
        self.histories.push((row.model_id.clone(), history));
        match trained {
            TrainedModel::Geo1(m) => self.trained_geo1.push((row.model_id.clone(), m)),
            TrainedModel::Geo2(m) => self.trained_geo2.push((row.model_id.clone(), m)),
            TrainedModel::Mlp(m) => self.trained_mlp.push((row.model_id.clone(), m)),
            TrainedModel::Cnn(m) => self.trained_cnn.push((row.model_id.clone(), m)),
        }
        self.rows.push(row);
    }
}

enum TrainedModel {
    Geo1(Geo1Model),
    Geo2(Geo2Model),
    Mlp(MlpModel),
    Cnn(CnnModel),
}

fn train_row(
    _config: &ExperimentConfig,
    spec: &ModelSpec,
    shared: &SharedData,
    bank: &PatternBank,
    out_dir: &Path,
) -> Result<(ResultRow, TrainedModel, TrainOutcome)> {
    let started = Instant::now();
    let cfg = to_train_config(spec.train());
    let ds = shared.ds;
    let (train_idx, val_idx, test_idx) = (&shared.train_idx, &shared.val_idx, &shared.test_idx);
    let targets = &shared.targets;
    let truth = &shared.truth;

    let (row_core, trained, history): ((usize, usize, f64), TrainedModel, TrainOutcome) = match spec {
        ModelSpec::Geo1 { patterns, .. } => {
            let bank = slice_bank(bank, *patterns);
            let mut model = Geo1Model::new(bank, cfg.seed);
            let features = extract_features(&ds.images, &model.bank);
            let mut params = model.params.clone();
            let history = {
                let lg = model.loss_grad(&features, targets);
                let remap = |p: &[f64], e: usize, g: &mut [f64]| lg(p, train_idx[e], g);
                let val = model.accuracy_eval(&features, val_idx, targets);
                train_sgd(&mut params, train_idx.len(), &cfg, remap, val)?
            };
            model.params = params;
            let preds: Vec<usize> = test_idx.iter().map(|&i| model.predict(features.row(i))).collect();
            let truth_test: Vec<u8> = test_idx.iter().map(|&i| truth[i]).collect();
            let acc = accuracy(&preds, &truth_test);
            (
                (model.count_params(), model.count_nonlinearities(), acc),
                TrainedModel::Geo1(model),
                history,
            )
        }
        ModelSpec::Geo2 { patterns, .. } => {
            let bank = slice_bank(bank, *patterns);
            let map_size = ds.images[0].height * ds.images[0].width;
            let mut model = Geo2Model::new(bank, map_size, cfg.seed);
            let caches = extract_cwm_sparse(&ds.images, &model.bank);
            let mut params = model.params.clone();
            let history = {
                let lg = model.loss_grad(&caches, targets);
                let remap = |p: &[f64], e: usize, g: &mut [f64]| lg(p, train_idx[e], g);
                let val = model.accuracy_eval(&caches, val_idx, targets);
                train_sgd(&mut params, train_idx.len(), &cfg, remap, val)?
            };
            model.params = params;
            let preds: Vec<usize> = test_idx.iter().map(|&i| model.predict(&caches[i])).collect();
            let truth_test: Vec<u8> = test_idx.iter().map(|&i| truth[i]).collect();
            let acc = accuracy(&preds, &truth_test);
            (
                (model.count_params(), model.count_nonlinearities(), acc),
                TrainedModel::Geo2(model),
                history,
            )
        }
        ModelSpec::Mlp { hidden, .. } => {
            let input_dim = ds.images[0].height * ds.images[0].width;
            let mut model = MlpModel::new(input_dim, *hidden, cfg.seed);
            let mut params = model.params.clone();
            let history = {
                let lg = model.loss_grad(&ds.images, targets);
                let remap = |p: &[f64], e: usize, g: &mut [f64]| lg(p, train_idx[e], g);
                let val = model.accuracy_eval(&ds.images, val_idx, targets);
                train_sgd(&mut params, train_idx.len(), &cfg, remap, val)?
            };
            model.params = params;
            let preds: Vec<usize> =
                test_idx.iter().map(|&i| model.predict(&ds.images[i].pixels)).collect();
            let truth_test: Vec<u8> = test_idx.iter().map(|&i| truth[i]).collect();
            let acc = accuracy(&preds, &truth_test);
            (
                (model.count_params(), model.count_nonlinearities(), acc),
                TrainedModel::Mlp(model),
                history,
            )
        }
        ModelSpec::Cnn { channels1, channels2, head_bias, .. } => {
            let (h, w) = (ds.images[0].height, ds.images[0].width);
            let mut model = CnnModel::new(h, w, *channels1, *channels2, *head_bias, cfg.seed);
            let mut params = model.params.clone();
            let history = {
                let lg = model.loss_grad(&ds.images, targets);
                let remap = |p: &[f64], e: usize, g: &mut [f64]| lg(p, train_idx[e], g);
                let val = model.accuracy_eval(&ds.images, val_idx, targets);
                train_sgd(&mut params, train_idx.len(), &cfg, remap, val)?
            };
            model.params = params;
            let preds: Vec<usize> = test_idx.iter().map(|&i| model.predict(&ds.images[i])).collect();
            let truth_test: Vec<u8> = test_idx.iter().map(|&i| truth[i]).collect();
            let acc = accuracy(&preds, &truth_test);
            (
                (model.count_params(), model.count_nonlinearities(), acc),
                TrainedModel::Cnn(model),
                history,
            )
        }
    };

    let persisted = match &trained {
        TrainedModel::Geo1(m) => PersistedModel::Geo1(m.clone()),
        TrainedModel::Geo2(m) => PersistedModel::Geo2(m.clone()),
        TrainedModel::Mlp(m) => PersistedModel::Mlp(m.clone()),
        TrainedModel::Cnn(m) => PersistedModel::Cnn(m.clone()),
    };
    save_model(&out_dir.join("models"), spec.id(), &persisted)?;

    let row = ResultRow {
        model_id: spec.id().to_string(),
        params: row_core.0,
        nonlinearities: row_core.1,
        accuracy: row_core.2,
        fidelity: None,
        runtime_seconds: started.elapsed().as_secs_f64(),
        split_seed: shared.split_seed,
        model_seed: cfg.seed,
    };
    Ok((row, trained, history))
}

/// Fidelity of every surrogate row against the black-box, computed through
/// the observer layer (identity pair, discrete metric over predicted labels)
/// on the test split.
fn compute_fidelities(
    config: &ExperimentConfig,
    outcome: &mut ExperimentOutcome,
    test_idx: &[usize],
) -> Result<()> {
    let ds = &outcome.dataset;
    let (h, w) = (ds.images[0].height, ds.images[0].width);
    let images_space = PerceptionSpace::plain_images("fidelity_imgs", h, w);
    let labels_space = PerceptionSpace::label_space("fidelity_labels", 10);
    let test_elements: Vec<Element> = test_idx
        .iter()
        .map(|&i| bridge::image_to_element(&ds.images[i]))
        .collect();

    let blackbox_geo = match &config.blackbox {
        BlackBoxSpec::Cnn { model_id } => {
            let cnn = outcome
                .cnn(model_id)
                .ok_or_else(|| anyhow!("missing black-box cnn"))?
                .clone();
            bridge::cnn_as_geo(&cnn, &images_space, &labels_space)?
        }
        BlackBoxSpec::Table { path } => {
            let table = PredictionTable::from_csv(path)?;
            // Table lookups need the dataset index; build a label map keyed
            // by test position instead.
            let preds: Vec<u8> = test_idx.iter().map(|&i| table.predicted[i]).collect();
            let elements = test_elements.clone();
            geneo_core::geo::Geo::builtin(
                "prediction_table",
                &images_space,
                &labels_space,
                geneo_core::geo::GroupHom::annihilator(1, 0, 1),
                move |e| {
                    let pos = elements
                        .iter()
                        .position(|x| x == e)
                        .ok_or_else(|| geneo_core::GeoError::RangeViolation(
                            "element not in the tabulated test set".into(),
                        ))?;
                    Ok(Element::Point(preds[pos] as usize))
                },
            )?
        }
        _ => return Ok(()),
    };

    let geo1_rows: Vec<(String, Geo1Model)> = outcome.trained_geo1.clone();
    let geo2_rows: Vec<(String, Geo2Model)> = outcome.trained_geo2.clone();
    let mlp_rows: Vec<(String, MlpModel)> = outcome.trained_mlp.clone();
    for (id, model) in &geo1_rows {
        let geo = bridge::geo1_as_geo(model, &images_space, &labels_space)?;
        let f = fidelity(&blackbox_geo, &geo, &test_elements)?;
        set_fidelity(outcome, id, f);
    }
    for (id, model) in &geo2_rows {
        let geo = bridge::geo2_as_geo(model, &images_space, &labels_space)?;
        let f = fidelity(&blackbox_geo, &geo, &test_elements)?;
        set_fidelity(outcome, id, f);
    }
    for (id, model) in &mlp_rows {
        let geo = bridge::mlp_as_geo(model, &images_space, &labels_space)?;
        let f = fidelity(&blackbox_geo, &geo, &test_elements)?;
        set_fidelity(outcome, id, f);
    }
    Ok(())
}

fn set_fidelity(outcome: &mut ExperimentOutcome, id: &str, f: f64) {
    if let Some(row) = outcome.rows.iter_mut().find(|r| r.model_id == id) {
        row.fidelity = Some(f);
    }
}

/// Writes results.csv (deterministic columns), curve.csv and timings.csv.
fn write_reports(outcome: &ExperimentOutcome, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let mut results = String::from("model_id,c1_params,c2_nonlinearities,accuracy,fidelity,split_seed,model_seed\n");
    let mut curve = String::from("c1_params,accuracy\n");
    let mut timings = String::from("model_id,runtime_seconds\n");
    for row in &outcome.rows {
        let fidelity = row.fidelity.map(|f| format!("{f:.6}")).unwrap_or_default();
        results.push_str(&format!(
            "{},{},{},{:.6},{},{},{}\n",
            row.model_id, row.params, row.nonlinearities, row.accuracy, fidelity, row.split_seed, row.model_seed
        ));
        curve.push_str(&format!("{},{:.6}\n", row.params, row.accuracy));
        timings.push_str(&format!("{},{:.3}\n", row.model_id, row.runtime_seconds));
    }
    std::fs::write(out_dir.join("results.csv"), results)?;
    std::fs::write(out_dir.join("curve.csv"), curve)?;
    std::fs::write(out_dir.join("timings.csv"), timings)?;
    Ok(())
}

/// Round-trip integrity: every row's parameter count must equal the count of
/// the model reloaded from disk.
fn verify_round_trips(outcome: &ExperimentOutcome, out_dir: &Path) -> Result<()> {
    for row in &outcome.rows {
        let loaded = load_model(&out_dir.join("models"), &row.model_id)?;
        if loaded.count_params() != row.params {
            bail!(
                "round-trip mismatch for '{}': reported {} params, reloaded {}",
                row.model_id,
                row.params,
                loaded.count_params()
            );
        }
    }
    Ok(())
}
