//! The `mbpep-model/1` file format.
//!
//! A model file is a single self-describing JSON document carrying the
//! trained pool (per-learner shapes and parameters), the selection mask,
//! the normalization fitted on the training split, and the training config
//! that produced it. Serialization is deterministic — fixed field order,
//! shortest round-trip floats — so saving the same model twice yields
//! byte-identical files, and a load/save cycle reproduces every parameter
//! bit for bit.
//!
//! Parsing treats the input as untrusted: shapes, finiteness, and the
//! selection mask are all validated before a learner is constructed.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::Normalization;
use crate::nnet::{Activation, BaseLearner, BoundMode};
use crate::{Error, Matrix, Result};

use super::{EnsemblePool, TrainConfig};

pub const MODEL_FORMAT: &str = "mbpep-model/1";

/// A trained pool bundled with everything needed to predict on raw data.
#[derive(Debug, Clone)]
pub struct SavedModel {
    pub pool: EnsemblePool,
    pub normalization: Normalization,
    /// Base seed each learner was trained from, by original pool index.
    pub learner_seeds: Vec<u64>,
    pub feature_names: Vec<String>,
    pub target_name: String,
}

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    format: String,
    config: TrainConfig,
    feature_names: Vec<String>,
    target_name: String,
    normalization: Normalization,
    learner_seeds: Vec<u64>,
    selection: Vec<bool>,
    learners: Vec<LearnerDoc>,
}

#[derive(Serialize, Deserialize)]
struct LearnerDoc {
    layer_dims: Vec<usize>,
    activation: Activation,
    bound_mode: BoundMode,
    dropout_retention: f64,
    /// Row-major `fan_in x fan_out` buffers, one per layer.
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

impl SavedModel {
    pub fn to_json(&self) -> String {
        let learners = self
            .pool
            .learners()
            .iter()
            .map(|l| LearnerDoc {
                layer_dims: l.layer_dims().to_vec(),
                activation: l.activation(),
                bound_mode: l.bound_mode(),
                dropout_retention: l.dropout_retention(),
                weights: l.weights().iter().map(|w| w.data().to_vec()).collect(),
                biases: l.biases().to_vec(),
            })
            .collect();
        let doc = ModelDoc {
            format: MODEL_FORMAT.to_string(),
            config: self.pool.config().clone(),
            feature_names: self.feature_names.clone(),
            target_name: self.target_name.clone(),
            normalization: self.normalization.clone(),
            learner_seeds: self.learner_seeds.clone(),
            selection: self.pool.selection().to_vec(),
            learners,
        };
        let mut text =
            serde_json::to_string_pretty(&doc).expect("model document always serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<SavedModel> {
        let doc: ModelDoc = serde_json::from_str(text)
            .map_err(|e| Error::Model(format!("malformed document: {e}")))?;
        if doc.format != MODEL_FORMAT {
            return Err(Error::Model(format!(
                "unsupported format {:?}, expected {MODEL_FORMAT:?}",
                doc.format
            )));
        }
        doc.config
            .validate()
            .map_err(|e| Error::Model(format!("embedded config: {e}")))?;
        if doc.learners.is_empty() {
            return Err(Error::Model("no learners".into()));
        }
        if doc.selection.len() != doc.learners.len()
            || doc.learner_seeds.len() != doc.learners.len()
        {
            return Err(Error::Model(format!(
                "{} learners but {} selection flags and {} seeds",
                doc.learners.len(),
                doc.selection.len(),
                doc.learner_seeds.len()
            )));
        }

        let mut learners = Vec::with_capacity(doc.learners.len());
        for (i, ld) in doc.learners.into_iter().enumerate() {
            let build = || -> Result<BaseLearner> {
                if ld.weights.len() + 1 != ld.layer_dims.len() {
                    return Err(Error::Shape(format!(
                        "{} weight layers for {} dims",
                        ld.weights.len(),
                        ld.layer_dims.len()
                    )));
                }
                let weights = ld
                    .weights
                    .into_iter()
                    .zip(ld.layer_dims.windows(2))
                    .map(|(buf, win)| Matrix::from_vec(win[0], win[1], buf))
                    .collect::<Result<Vec<_>>>()?;
                BaseLearner::from_parts(
                    ld.layer_dims,
                    weights,
                    ld.biases,
                    ld.activation,
                    ld.bound_mode,
                    ld.dropout_retention,
                )
            };
            learners.push(build().map_err(|e| Error::Model(format!("learner {i}: {e}")))?);
        }

        let n_features = learners[0].layer_dims()[0];
        if doc.normalization.features.len() != n_features
            || doc.feature_names.len() != n_features
        {
            return Err(Error::Model(format!(
                "learners take {n_features} features but normalization covers {} and names cover {}",
                doc.normalization.features.len(),
                doc.feature_names.len()
            )));
        }
        for (i, &(lo, hi)) in doc
            .normalization
            .features
            .iter()
            .chain(std::iter::once(&doc.normalization.target))
            .enumerate()
        {
            if !(lo.is_finite() && hi.is_finite() && hi >= lo) {
                return Err(Error::Model(format!(
                    "normalization range {i} is invalid: ({lo}, {hi})"
                )));
            }
        }

        let mut pool = EnsemblePool::new(learners, doc.config)
            .map_err(|e| Error::Model(e.to_string()))?;
        pool.set_selection(doc.selection)
            .map_err(|e| Error::Model(e.to_string()))?;
        Ok(SavedModel {
            pool,
            normalization: doc.normalization,
            learner_seeds: doc.learner_seeds,
            feature_names: doc.feature_names,
            target_name: doc.target_name,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<SavedModel> {
        let text = std::fs::read_to_string(path)?;
        SavedModel::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::gen_cubic;
    use crate::ensemble::{train_pool, TrainOutcome};
    use crate::seeds;

    fn trained_model() -> SavedModel {
        let data = gen_cubic(60, 3.0, (-4.0, 4.0), 17).unwrap();
        let norm_data = data.normalize(&data).unwrap();
        let config = TrainConfig {
            pool_size: 2,
            epochs: 3,
            batch_size: 16,
            hidden_dims: vec![6],
            ..TrainConfig::default()
        };
        let learner_seeds: Vec<u64> = (0..2).map(|i| seeds::derive(1, i)).collect();
        let TrainOutcome { mut pool, failures } =
            train_pool(&norm_data, &config, &learner_seeds, 1).unwrap();
        assert!(failures.is_empty());
        pool.set_selection(vec![true, false]).unwrap();
        SavedModel {
            pool,
            normalization: norm_data.normalization().unwrap().clone(),
            learner_seeds,
            feature_names: vec!["x".into()],
            target_name: "y".into(),
        }
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let model = trained_model();
        let text = model.to_json();
        let back = SavedModel::from_json(&text).unwrap();
        assert_eq!(back.to_json(), text);
        for (a, b) in model.pool.learners().iter().zip(back.pool.learners()) {
            for (wa, wb) in a.weights().iter().zip(b.weights()) {
                let bits_a: Vec<u64> = wa.data().iter().map(|v| v.to_bits()).collect();
                let bits_b: Vec<u64> = wb.data().iter().map(|v| v.to_bits()).collect();
                assert_eq!(bits_a, bits_b);
            }
        }
        assert_eq!(back.pool.selection(), model.pool.selection());
        assert_eq!(back.normalization, model.normalization);
        assert_eq!(back.learner_seeds, model.learner_seeds);
    }

    #[test]
    fn save_load_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let model = trained_model();
        model.save(&path).unwrap();
        let back = SavedModel::load(&path).unwrap();
        assert_eq!(back.to_json(), model.to_json());
    }

    #[test]
    fn rejects_wrong_format_tag() {
        let mut text = trained_model().to_json();
        text = text.replace("mbpep-model/1", "mbpep-model/9");
        match SavedModel::from_json(&text) {
            Err(Error::Model(msg)) => assert!(msg.contains("unsupported format")),
            other => panic!("expected a model error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_malformed_and_truncated_json() {
        assert!(matches!(
            SavedModel::from_json("not json at all"),
            Err(Error::Model(_))
        ));
        let text = trained_model().to_json();
        let truncated = &text[..text.len() / 2];
        assert!(SavedModel::from_json(truncated).is_err());
    }

    #[test]
    fn rejects_inconsistent_shapes() {
        let text = trained_model().to_json();
        // corrupt the selection length
        let bad = text.replace(
            "\"selection\": [\n    true,\n    false\n  ]",
            "\"selection\": [\n    true\n  ]",
        );
        assert_ne!(bad, text, "test fixture must actually change the doc");
        assert!(SavedModel::from_json(&bad).is_err());
    }

    #[test]
    fn rejects_nothing_selected() {
        let text = trained_model().to_json();
        let bad = text.replace(
            "\"selection\": [\n    true,\n    false\n  ]",
            "\"selection\": [\n    false,\n    false\n  ]",
        );
        assert_ne!(bad, text);
        assert!(SavedModel::from_json(&bad).is_err());
    }
}
