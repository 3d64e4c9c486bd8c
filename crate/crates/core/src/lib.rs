//! Lyric valence/arousal analysis, audio feature fusion and fuzzy
//! multi-label mood classification with a feature-weighted kNN.
//!
//! Every numeric type is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix it to `f64`.

pub mod affect;
pub mod dataset;
pub mod experiment;
pub mod features;
pub mod knn;
pub mod lexicon;
pub mod lyrics;
pub mod pos;
pub mod scalar;
pub mod synthetic;
pub mod tag_client;

pub use affect::{AffectError, DEFAULT_NEGATION_WINDOW, DEFAULT_VERB_DOMINANCE};
pub use dataset::{
    AccuracyReport, ClassSet, ConflictTable, DatasetError, MoodClass, TagWeight, DEFAULT_FOLDS,
    DEFAULT_MIN_TAG_WEIGHT,
};
pub use features::{Feature, FeatureError, Mode, FEATURE_COUNT};
pub use knn::{ClassificationResult, KnnError, DEFAULT_K, DEFAULT_THRESHOLD, DEFAULT_WEIGHTS};
pub use lexicon::{LexiconError, NativeScale, Source, SynonymMap};
pub use lyrics::{LyricsError, SegmentKind};
pub use pos::{PosTag, Tagger};
pub use scalar::Scalar;
pub use tag_client::{TagClient, TagError, TagServiceConfig};

pub type AffectScore = lexicon::AffectScore<f64>;
pub type Lexicon = lexicon::Lexicon<f64>;
pub type LyricDocument = lyrics::LyricDocument<f64>;
pub type SegmentationConfig = lyrics::SegmentationConfig<f64>;
pub type AnalysisConfig = affect::AnalysisConfig<f64>;
pub type Analyzer = affect::Analyzer<f64>;
pub type LyricAnalysis = affect::LyricAnalysis<f64>;
pub type SongAffect = affect::SongAffect<f64>;
pub type AudioFeatures = features::AudioFeatures<f64>;
pub type FeatureVector = features::FeatureVector<f64>;
pub type ScalingParams = features::ScalingParams<f64>;
pub type FeatureWeights = knn::FeatureWeights<f64>;
pub type TrainingRow = knn::TrainingRow<f64>;
pub type TrainedModel = knn::TrainedModel<f64>;
pub type SongRecord = dataset::SongRecord<f64>;
