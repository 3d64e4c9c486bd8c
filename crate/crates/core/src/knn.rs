//! Feature-weighted Euclidean kNN with fuzzy, stepwise-reduced threshold
//! assignment.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{ClassSet, MoodClass};
use crate::features::{Feature, FeatureError, FeatureVector, ScalingParams, FEATURE_COUNT};
use crate::scalar::Scalar;

pub const DEFAULT_K: usize = 30;
pub const DEFAULT_THRESHOLD: usize = 13;
/// Per-feature weights in feature order: danceability, loudness, valence,
/// bpm, energy, mode, arousal.
pub const DEFAULT_WEIGHTS: [f64; FEATURE_COUNT] = [1.0, 0.7, 1.0, 0.8, 1.0, 0.5, 0.9];

#[derive(Debug, Error)]
pub enum KnnError {
    #[error("k must be at least 1")]
    ZeroK,
    #[error("threshold {threshold} must lie in 1..={k}")]
    BadThreshold { threshold: usize, k: usize },
    #[error("model has {rows} training rows but k = {k}")]
    TooSmall { rows: usize, k: usize },
    #[error("feature weights must be finite and non-negative")]
    BadWeights,
    #[error("training row `{0}` has no class")]
    Unlabeled(String),
    #[error("training row `{id}` is not scaled: {feature} = {value}")]
    Unscaled { id: String, feature: Feature, value: f64 },
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error("model file {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("model file {}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureWeights<T>(pub [T; FEATURE_COUNT]);

impl<T: Scalar> Default for FeatureWeights<T> {
    fn default() -> Self {
        Self(DEFAULT_WEIGHTS.map(T::lit))
    }
}

impl<T: Scalar> FeatureWeights<T> {
    pub fn uniform() -> Self {
        Self([T::one(); FEATURE_COUNT])
    }

    pub fn validate(&self) -> Result<(), KnnError> {
        if self.0.iter().all(|w| w.is_finite() && *w >= T::zero()) {
            Ok(())
        } else {
            Err(KnnError::BadWeights)
        }
    }

    pub fn get(&self, f: Feature) -> T {
        self.0[f.index()]
    }
}

/// `sqrt(Σ w_j (x_j − y_j)²)`.
pub fn weighted_distance<T: Scalar>(x: &FeatureVector<T>, y: &FeatureVector<T>, w: &FeatureWeights<T>) -> T {
    x.0.iter()
        .zip(&y.0)
        .zip(&w.0)
        .fold(T::zero(), |acc, ((&a, &b), &wj)| {
            let d = a - b;
            acc + wj * d * d
        })
        .sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingRow<T> {
    pub id: String,
    pub vector: FeatureVector<T>,
    pub classes: ClassSet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Neighbor<'a, T> {
    pub row: &'a TrainingRow<T>,
    pub distance: T,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassificationResult {
    pub classes: ClassSet,
    pub neighbor_counts: BTreeMap<MoodClass, usize>,
    pub effective_threshold: usize,
}

/// Counts class occurrences over neighbours; a multi-label neighbour counts
/// once for each of its classes.
pub fn count_classes<'a, I>(neighbor_classes: I) -> BTreeMap<MoodClass, usize>
where
    I: IntoIterator<Item = &'a ClassSet>,
{
    let mut counts = BTreeMap::new();
    for set in neighbor_classes {
        for &c in set {
            *counts.entry(c).or_insert(0) += 1;
        }
    }
    counts
}

/// Every class whose count reaches the threshold. When none does, the
/// threshold drops by one until at least one class qualifies. Returns the
/// classes and the threshold that produced them; empty only when `counts`
/// has no positive entry.
pub fn assign_with_threshold(counts: &BTreeMap<MoodClass, usize>, threshold: usize) -> (ClassSet, usize) {
    let best = counts.values().copied().max().unwrap_or(0);
    if best == 0 {
        return (ClassSet::new(), 0);
    }
    // stepwise reduction stops at the first threshold any class reaches
    let effective = threshold.max(1).min(best);
    let classes = counts
        .iter()
        .filter(|(_, &n)| n >= effective)
        .map(|(&c, _)| c)
        .collect();
    (classes, effective)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel<T> {
    k: usize,
    threshold: usize,
    weights: FeatureWeights<T>,
    scaling: ScalingParams<T>,
    rows: Vec<TrainingRow<T>>,
}

impl<T: Scalar> TrainedModel<T> {
    /// Validates and builds a model from already scaled rows.
    pub fn new(
        rows: Vec<TrainingRow<T>>,
        scaling: ScalingParams<T>,
        weights: FeatureWeights<T>,
        k: usize,
        threshold: usize,
    ) -> Result<Self, KnnError> {
        let model = Self {
            k,
            threshold,
            weights,
            scaling,
            rows,
        };
        model.validate()?;
        Ok(model)
    }

    /// Fits scaling on raw training vectors, scales them and builds the
    /// model.
    pub fn train(
        raw: Vec<TrainingRow<T>>,
        weights: FeatureWeights<T>,
        k: usize,
        threshold: usize,
    ) -> Result<Self, KnnError> {
        let vectors: Vec<FeatureVector<T>> = raw.iter().map(|r| r.vector).collect();
        let scaling = ScalingParams::fit(&vectors)?;
        let rows = raw
            .into_iter()
            .map(|r| TrainingRow {
                vector: scaling.scale(&r.vector),
                ..r
            })
            .collect();
        Self::new(rows, scaling, weights, k, threshold)
    }

    fn validate(&self) -> Result<(), KnnError> {
        if self.k == 0 {
            return Err(KnnError::ZeroK);
        }
        if self.threshold == 0 || self.threshold > self.k {
            return Err(KnnError::BadThreshold {
                threshold: self.threshold,
                k: self.k,
            });
        }
        self.weights.validate()?;
        if self.rows.len() < self.k {
            return Err(KnnError::TooSmall {
                rows: self.rows.len(),
                k: self.k,
            });
        }
        for r in &self.rows {
            if r.classes.is_empty() {
                return Err(KnnError::Unlabeled(r.id.clone()));
            }
            for f in Feature::ALL {
                let v = r.vector[f];
                if !(v >= T::zero() && v <= T::one()) {
                    return Err(KnnError::Unscaled {
                        id: r.id.clone(),
                        feature: f,
                        value: v.as_f64(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Same training data with different k, threshold or weights.
    pub fn with_params(
        &self,
        k: Option<usize>,
        threshold: Option<usize>,
        weights: Option<FeatureWeights<T>>,
    ) -> Result<Self, KnnError> {
        Self::new(
            self.rows.clone(),
            self.scaling,
            weights.unwrap_or(self.weights),
            k.unwrap_or(self.k),
            threshold.unwrap_or(self.threshold),
        )
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn threshold(&self) -> usize {
        self.threshold
    }

    pub fn weights(&self) -> &FeatureWeights<T> {
        &self.weights
    }

    pub fn scaling(&self) -> &ScalingParams<T> {
        &self.scaling
    }

    pub fn rows(&self) -> &[TrainingRow<T>] {
        &self.rows
    }

    /// The k rows closest to `query` (already scaled), by ascending
    /// distance and then ascending song id.
    pub fn nearest_neighbors(&self, query: &FeatureVector<T>) -> Vec<Neighbor<'_, T>> {
        let mut all: Vec<Neighbor<'_, T>> = self
            .rows
            .iter()
            .map(|row| Neighbor {
                row,
                distance: weighted_distance(query, &row.vector, &self.weights),
            })
            .collect();
        let order = |a: &Neighbor<'_, T>, b: &Neighbor<'_, T>| {
            a.distance
                .partial_cmp(&b.distance)
                .unwrap_or(Ordering::Equal)
                .then_with(|| a.row.id.cmp(&b.row.id))
        };
        if all.len() > self.k {
            all.select_nth_unstable_by(self.k - 1, order);
            all.truncate(self.k);
        }
        all.sort_by(order);
        all
    }

    /// Fuzzy classification of a scaled query.
    pub fn classify(&self, query: &FeatureVector<T>) -> ClassificationResult {
        let neighbors = self.nearest_neighbors(query);
        let neighbor_counts = count_classes(neighbors.iter().map(|n| &n.row.classes));
        let (classes, effective_threshold) = assign_with_threshold(&neighbor_counts, self.threshold);
        ClassificationResult {
            classes,
            neighbor_counts,
            effective_threshold,
        }
    }

    /// Scales a raw feature vector with the training parameters, then
    /// classifies it.
    pub fn classify_raw(&self, raw: &FeatureVector<T>) -> ClassificationResult {
        self.classify(&self.scaling.scale(raw))
    }

    pub fn save(&self, path: &Path) -> Result<(), KnnError> {
        let io_err = |source| KnnError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
        serde_json::to_writer_pretty(&mut w, self).map_err(|source| KnnError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        w.write_all(b"\n").map_err(io_err)?;
        w.flush().map_err(io_err)
    }

    pub fn load(path: &Path) -> Result<Self, KnnError> {
        let file = File::open(path).map_err(|source| KnnError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let model: Self = serde_json::from_reader(BufReader::new(file)).map_err(|source| KnnError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        model.validate()?;
        Ok(model)
    }
}
