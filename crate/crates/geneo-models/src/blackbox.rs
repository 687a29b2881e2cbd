//! Pluggable reference classifiers: ground-truth labels, a prediction table
//! loaded from CSV, or a trained CNN.

use std::path::Path;

use crate::dataset::Image;
use crate::error::DataError;
use crate::models::CnnModel;

/// Predictions (and optional score vectors) indexed by dataset position.
#[derive(Debug, Clone)]
pub struct PredictionTable {
    pub predicted: Vec<u8>,
    pub scores: Option<Vec<[f32; 10]>>,
}

impl PredictionTable {
    /// Parses `index,predicted_class[,score_0..score_9]` rows. A header line
    /// starting with "index" is permitted. Rows may arrive in any order but
    /// must cover 0..n densely.
    pub fn from_csv(path: &Path) -> Result<PredictionTable, DataError> {
        let text = std::fs::read_to_string(path)?;
        let mut rows: Vec<(usize, u8, Option<[f32; 10]>)> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (lineno == 0 && line.starts_with("index")) {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 2 && fields.len() != 12 {
                return Err(DataError::Invalid(format!(
                    "line {}: expected 2 or 12 fields, found {}",
                    lineno + 1,
                    fields.len()
                )));
            }
            let index: usize = fields[0]
                .parse()
                .map_err(|_| DataError::Invalid(format!("line {}: bad index", lineno + 1)))?;
            let class: u8 = fields[1]
                .parse()
                .map_err(|_| DataError::Invalid(format!("line {}: bad class", lineno + 1)))?;
            if class > 9 {
                return Err(DataError::LabelOutOfRange(class));
            }
            let scores = if fields.len() == 12 {
                let mut s = [0.0f32; 10];
                for (slot, raw) in s.iter_mut().zip(&fields[2..]) {
                    *slot = raw
                        .parse()
                        .map_err(|_| DataError::Invalid(format!("line {}: bad score", lineno + 1)))?;
                }
                Some(s)
            } else {
                None
            };
            rows.push((index, class, scores));
        }
        rows.sort_by_key(|r| r.0);
        for (expected, row) in rows.iter().enumerate() {
            if row.0 != expected {
                return Err(DataError::Invalid(format!(
                    "prediction table is not dense: expected index {expected}, found {}",
                    row.0
                )));
            }
        }
        let with_scores = rows.iter().all(|r| r.2.is_some());
        let predicted = rows.iter().map(|r| r.1).collect();
        let scores = if with_scores { Some(rows.into_iter().map(|r| r.2.unwrap()).collect()) } else { None };
        Ok(PredictionTable { predicted, scores })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,predicted_class\n");
        for (i, &c) in self.predicted.iter().enumerate() {
            out.push_str(&format!("{i},{c}\n"));
        }
        out
    }
}

/// Reference output provider for training and fidelity measurements.
pub enum BlackBox<'a> {
    /// The supervisor: each input's ground-truth label.
    Supervisor(&'a [u8]),
    /// Frozen per-index predictions.
    Table(&'a PredictionTable),
    /// A trained CNN evaluated on demand.
    Cnn(&'a CnnModel),
}

impl BlackBox<'_> {
    /// The reference label for dataset position `index` with image `image`.
    pub fn label(&self, index: usize, image: &Image) -> u8 {
        match self {
            BlackBox::Supervisor(labels) => labels[index],
            BlackBox::Table(table) => table.predicted[index],
            BlackBox::Cnn(model) => model.predict(image) as u8,
        }
    }

    /// Materializes labels for a whole dataset slice.
    pub fn labels_for(&self, images: &[Image]) -> Vec<u8> {
        use rayon::prelude::*;
        match self {
            BlackBox::Supervisor(labels) => labels.to_vec(),
            BlackBox::Table(table) => table.predicted.clone(),
            BlackBox::Cnn(model) => images
                .par_iter()
                .map(|image| model.predict(image) as u8)
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("preds.csv");
        std::fs::write(&path, "index,predicted_class\n1,3\n0,7\n2,9\n").unwrap();
        let table = PredictionTable::from_csv(&path).unwrap();
        assert_eq!(table.predicted, vec![7, 3, 9]);
        assert!(table.scores.is_none());

        std::fs::write(&path, "0,3\n2,9\n").unwrap();
        assert!(PredictionTable::from_csv(&path).is_err(), "gap in indices");

        std::fs::write(&path, "0,12\n").unwrap();
        assert!(PredictionTable::from_csv(&path).is_err(), "class out of range");
    }

    #[test]
    fn csv_with_scores() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("preds.csv");
        let mut body = String::from("index,predicted_class,s0,s1,s2,s3,s4,s5,s6,s7,s8,s9\n");
        body.push_str("0,2,0.0,0.1,0.8,0.0,0.0,0.0,0.0,0.1,0.0,0.0\n");
        std::fs::write(&path, body).unwrap();
        let table = PredictionTable::from_csv(&path).unwrap();
        assert_eq!(table.predicted, vec![2]);
        let scores = table.scores.unwrap();
        assert!((scores[0][2] - 0.8).abs() < 1e-6);
    }
}
