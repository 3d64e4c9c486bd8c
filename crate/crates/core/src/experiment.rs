//! Fold-wise training and conflict-based evaluation.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::dataset::{evaluate, AccuracyReport, ClassSet, ConflictTable, DatasetError, Fold, SetEvaluation, SongRecord};
use crate::knn::{FeatureWeights, KnnError, TrainedModel, TrainingRow};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("song `{0}` has no feature vector")]
    MissingVector(String),
    #[error("cross-validation needs at least two folds")]
    TooFewFolds,
    #[error(transparent)]
    Knn(#[from] KnnError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

/// Classifier settings for one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunParams<T> {
    pub k: usize,
    pub threshold: usize,
    pub weights: FeatureWeights<T>,
}

/// Raw (unscaled) training rows; songs without a class are skipped.
pub fn training_rows<'a, T: Scalar>(
    records: impl IntoIterator<Item = &'a SongRecord<T>>,
) -> Result<Vec<TrainingRow<T>>, ExperimentError> {
    records
        .into_iter()
        .filter(|r| !r.classes.is_empty())
        .map(|r| {
            let vector = r.vector.ok_or_else(|| ExperimentError::MissingVector(r.id()))?;
            Ok(TrainingRow {
                id: r.id(),
                vector,
                classes: r.classes.clone(),
            })
        })
        .collect()
}

/// Classifies every song of `test` with `model` and scores the result.
pub fn evaluate_model<T: Scalar>(
    model: &TrainedModel<T>,
    test: &[SongRecord<T>],
    table: &ConflictTable,
) -> Result<(SetEvaluation, BTreeMap<String, ClassSet>), ExperimentError> {
    let mut predictions = BTreeMap::new();
    let mut truth = BTreeMap::new();
    for r in test {
        let vector = r.vector.ok_or_else(|| ExperimentError::MissingVector(r.id()))?;
        predictions.insert(r.id(), model.classify_raw(&vector).classes);
        truth.insert(r.id(), r.classes.clone());
    }
    Ok((evaluate(&predictions, &truth, table)?, predictions))
}

/// Trains on all folds but one and tests on the held-out fold, for each
/// fold in turn.
pub fn cross_validate<T: Scalar>(
    folds: &[Fold<SongRecord<T>>],
    params: &RunParams<T>,
    table: &ConflictTable,
) -> Result<AccuracyReport, ExperimentError> {
    if folds.len() < 2 {
        return Err(ExperimentError::TooFewFolds);
    }
    let mut sets = Vec::with_capacity(folds.len());
    for held in folds {
        let train = training_rows(folds.iter().filter(|f| f.index != held.index).flat_map(|f| &f.records))?;
        let model = TrainedModel::train(train, params.weights, params.k, params.threshold)?;
        let (eval, _) = evaluate_model(&model, &held.records, table)?;
        sets.push((format!("Set {}", held.index), eval));
    }
    Ok(AccuracyReport::from_sets(sets))
}
