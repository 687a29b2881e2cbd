//! Model persistence: a JSON manifest plus sidecar blobs of little-endian
//! IEEE-754 binary32 in row-major order.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::PersistError;
use crate::models::{CnnModel, Geo1Model, Geo2Model, MlpModel};
use crate::patterns::PatternBank;

#[derive(Debug, Serialize, Deserialize)]
pub struct BlobSpec {
    pub name: String,
    pub dtype: String,
    pub shape: Vec<usize>,
    pub file: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub kind: String,
    pub shape: serde_json::Value,
    pub blobs: Vec<BlobSpec>,
}

fn write_blob(dir: &Path, name: &str, data: &[f32]) -> Result<String, PersistError> {
    let file = format!("{name}.bin");
    let mut bytes = Vec::with_capacity(data.len() * 4);
    for v in data {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(dir.join(&file), bytes)?;
    Ok(file)
}

fn read_blob(dir: &Path, spec: &BlobSpec) -> Result<Vec<f32>, PersistError> {
    if spec.dtype != "f32le" {
        return Err(PersistError::Manifest(format!("unsupported dtype '{}'", spec.dtype)));
    }
    let bytes = std::fs::read(dir.join(&spec.file))?;
    let expected: usize = spec.shape.iter().product::<usize>() * 4;
    if bytes.len() != expected {
        return Err(PersistError::Manifest(format!(
            "blob '{}' has {} bytes, expected {expected}",
            spec.name,
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

fn bank_to_blob(bank: &PatternBank) -> Vec<f32> {
    bank.patterns.iter().flatten().copied().collect()
}

fn bank_meta(bank: &PatternBank) -> serde_json::Value {
    serde_json::json!({
        "count": bank.len(),
        "patch_w": bank.patch_w,
        "patch_h": bank.patch_h,
        "seed": bank.seed,
        "provenance": bank.provenance,
    })
}

fn bank_from_parts(meta: &serde_json::Value, blob: Vec<f32>) -> Result<PatternBank, PersistError> {
    let count = meta["count"].as_u64().ok_or_else(|| PersistError::Manifest("bank count".into()))? as usize;
    let patch_w = meta["patch_w"].as_u64().ok_or_else(|| PersistError::Manifest("patch_w".into()))? as usize;
    let patch_h = meta["patch_h"].as_u64().ok_or_else(|| PersistError::Manifest("patch_h".into()))? as usize;
    let seed = meta["seed"].as_u64().unwrap_or(0);
    let provenance: Vec<(usize, usize, usize)> =
        serde_json::from_value(meta["provenance"].clone()).unwrap_or_default();
    let per = patch_w * patch_h;
    if blob.len() != count * per {
        return Err(PersistError::Manifest("bank blob size mismatch".into()));
    }
    Ok(PatternBank {
        patterns: blob.chunks_exact(per).map(|c| c.to_vec()).collect(),
        patch_w,
        patch_h,
        provenance,
        seed,
    })
}

/// A model that can be saved and reloaded.
pub enum PersistedModel {
    Geo1(Geo1Model),
    Geo2(Geo2Model),
    Mlp(MlpModel),
    Cnn(CnnModel),
}

impl PersistedModel {
    pub fn kind(&self) -> &'static str {
        match self {
            PersistedModel::Geo1(_) => "geo1",
            PersistedModel::Geo2(_) => "geo2",
            PersistedModel::Mlp(_) => "mlp",
            PersistedModel::Cnn(_) => "cnn",
        }
    }

    pub fn count_params(&self) -> usize {
        match self {
            PersistedModel::Geo1(m) => m.count_params(),
            PersistedModel::Geo2(m) => m.count_params(),
            PersistedModel::Mlp(m) => m.count_params(),
            PersistedModel::Cnn(m) => m.count_params(),
        }
    }

    pub fn count_nonlinearities(&self) -> usize {
        match self {
            PersistedModel::Geo1(m) => m.count_nonlinearities(),
            PersistedModel::Geo2(m) => m.count_nonlinearities(),
            PersistedModel::Mlp(m) => m.count_nonlinearities(),
            PersistedModel::Cnn(m) => m.count_nonlinearities(),
        }
    }
}

/// Saves a model into `dir` as `<name>.json` plus blob files.
pub fn save_model(dir: &Path, name: &str, model: &PersistedModel) -> Result<(), PersistError> {
    std::fs::create_dir_all(dir)?;
    let (shape, blobs): (serde_json::Value, Vec<(String, Vec<usize>, Vec<f32>)>) = match model {
        PersistedModel::Geo1(m) => (
            serde_json::json!({"classes": 10, "bank": bank_meta(&m.bank)}),
            vec![
                ("params".into(), vec![m.count_params()], m.params.clone()),
                (
                    "patterns".into(),
                    vec![m.bank.len(), m.bank.patch_h, m.bank.patch_w],
                    bank_to_blob(&m.bank),
                ),
            ],
        ),
        PersistedModel::Geo2(m) => (
            serde_json::json!({"classes": 10, "map_size": m.map_size, "bank": bank_meta(&m.bank)}),
            vec![
                ("params".into(), vec![m.count_params()], m.params.clone()),
                (
                    "patterns".into(),
                    vec![m.bank.len(), m.bank.patch_h, m.bank.patch_w],
                    bank_to_blob(&m.bank),
                ),
            ],
        ),
        PersistedModel::Mlp(m) => (
            serde_json::json!({"input_dim": m.input_dim, "hidden": m.hidden, "classes": 10}),
            vec![("params".into(), vec![m.count_params()], m.params.clone())],
        ),
        PersistedModel::Cnn(m) => (
            serde_json::json!({
                "height": m.height, "width": m.width,
                "channels1": m.channels1, "channels2": m.channels2,
                "head_bias": m.head_bias,
            }),
            vec![("params".into(), vec![m.count_params()], m.params.clone())],
        ),
    };
    let blob_specs = blobs
        .iter()
        .map(|(bname, shape, data)| {
            let file = write_blob(dir, &format!("{name}_{bname}"), data)?;
            Ok(BlobSpec { name: bname.clone(), dtype: "f32le".into(), shape: shape.clone(), file })
        })
        .collect::<Result<Vec<_>, PersistError>>()?;
    let manifest = Manifest { kind: model.kind().to_string(), shape, blobs: blob_specs };
    std::fs::write(dir.join(format!("{name}.json")), serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

/// Loads a model saved by [`save_model`].
pub fn load_model(dir: &Path, name: &str) -> Result<PersistedModel, PersistError> {
    let manifest: Manifest =
        serde_json::from_str(&std::fs::read_to_string(dir.join(format!("{name}.json")))?)?;
    let blob = |bname: &str| -> Result<Vec<f32>, PersistError> {
        let spec = manifest
            .blobs
            .iter()
            .find(|b| b.name == bname)
            .ok_or_else(|| PersistError::Manifest(format!("missing blob '{bname}'")))?;
        read_blob(dir, spec)
    };
    match manifest.kind.as_str() {
        "geo1" => {
            let bank = bank_from_parts(&manifest.shape["bank"], blob("patterns")?)?;
            let mut model = Geo1Model::new(bank, 0);
            let params = blob("params")?;
            if params.len() != model.count_params() {
                return Err(PersistError::Manifest("geo1 param size mismatch".into()));
            }
            model.params = params;
            Ok(PersistedModel::Geo1(model))
        }
        "geo2" => {
            let bank = bank_from_parts(&manifest.shape["bank"], blob("patterns")?)?;
            let map_size = manifest.shape["map_size"]
                .as_u64()
                .ok_or_else(|| PersistError::Manifest("map_size".into()))? as usize;
            let mut model = Geo2Model::new(bank, map_size, 0);
            let params = blob("params")?;
            if params.len() != model.count_params() {
                return Err(PersistError::Manifest("geo2 param size mismatch".into()));
            }
            model.params = params;
            Ok(PersistedModel::Geo2(model))
        }
        "mlp" => {
            let input_dim = manifest.shape["input_dim"]
                .as_u64()
                .ok_or_else(|| PersistError::Manifest("input_dim".into()))? as usize;
            let hidden = manifest.shape["hidden"].as_u64().map(|h| h as usize);
            let mut model = MlpModel::new(input_dim, hidden, 0);
            let params = blob("params")?;
            if params.len() != model.count_params() {
                return Err(PersistError::Manifest("mlp param size mismatch".into()));
            }
            model.params = params;
            Ok(PersistedModel::Mlp(model))
        }
        "cnn" => {
            let g = |k: &str| -> Result<usize, PersistError> {
                manifest.shape[k]
                    .as_u64()
                    .map(|v| v as usize)
                    .ok_or_else(|| PersistError::Manifest(k.into()))
            };
            let head_bias = manifest.shape["head_bias"].as_bool().unwrap_or(true);
            let mut model =
                CnnModel::new(g("height")?, g("width")?, g("channels1")?, g("channels2")?, head_bias, 0);
            let params = blob("params")?;
            if params.len() != model.count_params() {
                return Err(PersistError::Manifest("cnn param size mismatch".into()));
            }
            model.params = params;
            Ok(PersistedModel::Cnn(model))
        }
        other => Err(PersistError::Manifest(format!("unknown model kind '{other}'"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Image;
    use crate::patterns::sample_patterns;

    #[test]
    fn geo1_round_trip_preserves_params_bit_for_bit() {
        let images = vec![Image::new(6, 6, (0..36).map(|i| (i % 5) as f32 / 5.0).collect())];
        let bank = sample_patterns(&images, 4, 3, 3, 1).unwrap();
        let model = Geo1Model::new(bank, 2);
        let dir = tempfile::tempdir().unwrap();
        save_model(dir.path(), "m", &PersistedModel::Geo1(model.clone())).unwrap();
        let loaded = load_model(dir.path(), "m").unwrap();
        match loaded {
            PersistedModel::Geo1(l) => {
                assert_eq!(l.params, model.params);
                assert_eq!(l.bank.patterns, model.bank.patterns);
                assert_eq!(l.count_params(), model.count_params());
            }
            _ => panic!("wrong kind"),
        }
    }

    #[test]
    fn cnn_and_mlp_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cnn = CnnModel::new(4, 4, 2, 3, false, 5);
        save_model(dir.path(), "cnn", &PersistedModel::Cnn(cnn.clone())).unwrap();
        match load_model(dir.path(), "cnn").unwrap() {
            PersistedModel::Cnn(l) => {
                assert_eq!(l.params, cnn.params);
                assert!(!l.head_bias);
            }
            _ => panic!("wrong kind"),
        }
        let mlp = MlpModel::new(16, Some(3), 6);
        save_model(dir.path(), "mlp", &PersistedModel::Mlp(mlp.clone())).unwrap();
        match load_model(dir.path(), "mlp").unwrap() {
            PersistedModel::Mlp(l) => assert_eq!(l.params, mlp.params),
            _ => panic!("wrong kind"),
        }
    }
}
