//! Experiment configuration schema and validation.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use geneo_models::models::CnnModel;

/// One IDX image/label file pair.
#[derive(Debug, Clone, Deserialize)]
pub struct DatasetFiles {
    pub images: PathBuf,
    pub labels: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
pub struct PatternBankSpec {
    pub count: usize,
    pub w: usize,
    pub h: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BlackBoxSpec {
    /// Ground-truth labels.
    Supervisor,
    /// The model row with this id (trained first).
    Cnn { model_id: String },
    /// Frozen predictions from CSV, indexed by dataset position.
    Table { path: PathBuf },
    /// No fidelity column.
    None,
}

#[derive(Debug, Clone, Deserialize)]
pub struct TrainSpec {
    pub lr: f64,
    pub epochs: usize,
    pub batch: usize,
    pub patience: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Geo1 {
        id: String,
        patterns: usize,
        expected_params: usize,
        train: TrainSpec,
    },
    Geo2 {
        id: String,
        patterns: usize,
        expected_params: usize,
        train: TrainSpec,
    },
    Mlp {
        id: String,
        hidden: Option<usize>,
        expected_params: usize,
        train: TrainSpec,
    },
    Cnn {
        id: String,
        channels1: usize,
        channels2: usize,
        head_bias: bool,
        expected_params: usize,
        train: TrainSpec,
    },
}

impl ModelSpec {
    pub fn id(&self) -> &str {
        match self {
            ModelSpec::Geo1 { id, .. }
            | ModelSpec::Geo2 { id, .. }
            | ModelSpec::Mlp { id, .. }
            | ModelSpec::Cnn { id, .. } => id,
        }
    }

    pub fn train(&self) -> &TrainSpec {
        match self {
            ModelSpec::Geo1 { train, .. }
            | ModelSpec::Geo2 { train, .. }
            | ModelSpec::Mlp { train, .. }
            | ModelSpec::Cnn { train, .. } => train,
        }
    }

    /// Checks the declared parameter count against the architecture formula
    /// for the given image dimensions.
    pub fn check_params(&self, height: usize, width: usize) -> Result<()> {
        let computed = match self {
            ModelSpec::Geo1 { patterns, .. } => 10 * patterns + 10,
            ModelSpec::Geo2 { patterns, .. } => {
                // Constructing the full model is cheap enough here and keeps
                // one source of truth.
                patterns + 1 + 10 * (height * width) + 10
            }
            ModelSpec::Mlp { hidden, .. } => match hidden {
                None => 10 * (height * width) + 10,
                Some(k) => k * (height * width) + k + 10 * k + 10,
            },
            ModelSpec::Cnn { channels1, channels2, head_bias, .. } => {
                CnnModel::param_count(height, width, *channels1, *channels2, *head_bias)
            }
        };
        let declared = match self {
            ModelSpec::Geo1 { expected_params, .. }
            | ModelSpec::Geo2 { expected_params, .. }
            | ModelSpec::Mlp { expected_params, .. }
            | ModelSpec::Cnn { expected_params, .. } => *expected_params,
        };
        if computed != declared {
            bail!(
                "model '{}': declared parameter count {declared} does not match the architecture formula ({computed})",
                self.id()
            );
        }
        Ok(())
    }
}

/// What the rescale stage applies before training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RescaleKind {
    #[default]
    None,
    Max2x2,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: Vec<DatasetFiles>,
    pub split_seed: u64,
    pub pattern_bank: PatternBankSpec,
    pub blackbox: BlackBoxSpec,
    /// "labels" trains on ground truth; "blackbox" trains on the black-box
    /// outputs.
    #[serde(default = "default_targets")]
    pub targets: String,
    pub models: Vec<ModelSpec>,
    #[serde(default)]
    pub rescale: RescaleKind,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Free-form tag recorded in outputs ("desk" or "full").
    #[serde(default = "default_scale")]
    pub scale: String,
}

fn default_targets() -> String {
    "labels".into()
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_scale() -> String {
    "desk".into()
}

fn resolve_path(raw: &Path, config_dir: &Path) -> PathBuf {
    if raw.exists() || raw.is_absolute() {
        return raw.to_path_buf();
    }
    let mut candidates: Vec<PathBuf> = vec![config_dir.join(raw)];
    if let Some(parent) = config_dir.parent() {
        candidates.push(parent.join(raw));
    }
    if let (Ok(base), Some(name)) = (std::env::var("GENEO_LAB_DATA"), raw.file_name()) {
        candidates.push(PathBuf::from(base).join(name));
    }
    candidates.into_iter().find(|c| c.exists()).unwrap_or_else(|| raw.to_path_buf())
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut config: ExperimentConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        // Relative dataset paths resolve against the working directory, then
        // the config file's directory and its parent, then GENEO_LAB_DATA.
        let config_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        for pair in config.dataset.iter_mut() {
            pair.images = resolve_path(&pair.images, &config_dir);
            pair.labels = resolve_path(&pair.labels, &config_dir);
        }
        if let BlackBoxSpec::Table { path: table } = &mut config.blackbox {
            *table = resolve_path(table, &config_dir);
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dataset.is_empty() {
            bail!("config lists no dataset files");
        }
        for pair in &self.dataset {
            if !pair.images.exists() {
                bail!("dataset images file not found: {}", pair.images.display());
            }
            if !pair.labels.exists() {
                bail!("dataset labels file not found: {}", pair.labels.display());
            }
        }
        if let BlackBoxSpec::Table { path } = &self.blackbox {
            if !path.exists() {
                bail!("prediction table not found: {}", path.display());
            }
        }
        if let BlackBoxSpec::Cnn { model_id } = &self.blackbox {
            if !self.models.iter().any(|m| m.id() == model_id && matches!(m, ModelSpec::Cnn { .. })) {
                bail!("blackbox references model '{model_id}', which is not a cnn row");
            }
        }
        if self.targets != "labels" && self.targets != "blackbox" {
            bail!("targets must be \"labels\" or \"blackbox\"");
        }
        if self.pattern_bank.count == 0 {
            bail!("pattern bank must have at least one pattern");
        }
        for model in &self.models {
            match model {
                ModelSpec::Geo1 { patterns, .. } | ModelSpec::Geo2 { patterns, .. } => {
                    if *patterns > self.pattern_bank.count {
                        bail!(
                            "model '{}' wants {patterns} patterns but the bank only has {}",
                            model.id(),
                            self.pattern_bank.count
                        );
                    }
                }
                _ => {}
            }
        }
        let mut seen = std::collections::HashSet::new();
        for model in &self.models {
            if !seen.insert(model.id().to_string()) {
                bail!("duplicate model id '{}'", model.id());
            }
        }
        Ok(())
    }

    /// Validates parameter formulas against the post-rescale image size.
    pub fn check_param_formulas(&self, height: usize, width: usize) -> Result<()> {
        let (h, w) = match self.rescale {
            RescaleKind::None => (height, width),
            RescaleKind::Max2x2 => (height / 2, width / 2),
        };
        for model in &self.models {
            model.check_params(h, w)?;
        }
        Ok(())
    }
}
