//! Seven-dimensional song features and min-max scaling.

use std::fmt;
use std::ops::Index;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::affect::SongAffect;
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("cannot fit scaling on an empty training set")]
    EmptyTraining,
    #[error("invalid audio features: {0}")]
    InvalidAudio(String),
    #[error("feature {0} is not finite")]
    NonFinite(Feature),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Minor,
    Major,
}

impl Mode {
    pub fn as_scalar<T: Scalar>(self) -> T {
        match self {
            Mode::Major => T::one(),
            Mode::Minor => T::zero(),
        }
    }
}

/// Audio descriptors supplied with each song.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AudioFeatures<T> {
    pub bpm: T,
    pub mode: Mode,
    pub loudness_db: T,
    pub danceability: T,
    pub energy: T,
}

impl<T: Scalar> AudioFeatures<T> {
    pub fn validate(&self) -> Result<(), FeatureError> {
        let unit = |x: T| x >= T::zero() && x <= T::one();
        if !(self.bpm.is_finite() && self.bpm > T::zero()) {
            return Err(FeatureError::InvalidAudio(format!("bpm must be positive, got {}", self.bpm)));
        }
        if !self.loudness_db.is_finite() {
            return Err(FeatureError::InvalidAudio("loudness_db is not finite".into()));
        }
        if !unit(self.danceability) {
            return Err(FeatureError::InvalidAudio(format!(
                "danceability must lie in [0, 1], got {}",
                self.danceability
            )));
        }
        if !unit(self.energy) {
            return Err(FeatureError::InvalidAudio(format!(
                "energy must lie in [0, 1], got {}",
                self.energy
            )));
        }
        Ok(())
    }
}

/// Feature axes in distance-term order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Feature {
    Danceability,
    Loudness,
    Valence,
    Bpm,
    Energy,
    Mode,
    Arousal,
}

pub const FEATURE_COUNT: usize = 7;

impl Feature {
    pub const ALL: [Feature; FEATURE_COUNT] = [
        Feature::Danceability,
        Feature::Loudness,
        Feature::Valence,
        Feature::Bpm,
        Feature::Energy,
        Feature::Mode,
        Feature::Arousal,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Feature::Danceability => "danceability",
            Feature::Loudness => "loudness",
            Feature::Valence => "valence",
            Feature::Bpm => "bpm",
            Feature::Energy => "energy",
            Feature::Mode => "mode",
            Feature::Arousal => "arousal",
        }
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `[danceability, loudness, valence, bpm, energy, mode, arousal]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector<T>(pub [T; FEATURE_COUNT]);

impl<T: Scalar> FeatureVector<T> {
    pub fn new(values: [T; FEATURE_COUNT]) -> Self {
        Self(values)
    }

    /// Joins lyric affect and audio descriptors.
    pub fn assemble(affect: SongAffect<T>, audio: &AudioFeatures<T>) -> Self {
        Self([
            audio.danceability,
            audio.loudness_db,
            affect.valence,
            audio.bpm,
            audio.energy,
            audio.mode.as_scalar(),
            affect.arousal,
        ])
    }

    pub fn get(&self, f: Feature) -> T {
        self.0[f.index()]
    }

    pub fn values(&self) -> &[T; FEATURE_COUNT] {
        &self.0
    }

    pub fn check_finite(&self) -> Result<(), FeatureError> {
        match Feature::ALL.iter().find(|f| !self.get(**f).is_finite()) {
            Some(&f) => Err(FeatureError::NonFinite(f)),
            None => Ok(()),
        }
    }
}

impl<T> Index<Feature> for FeatureVector<T> {
    type Output = T;

    fn index(&self, f: Feature) -> &T {
        &self.0[f as usize]
    }
}

#[derive(Serialize, Deserialize)]
struct NamedFeatures<T> {
    danceability: T,
    loudness: T,
    valence: T,
    bpm: T,
    energy: T,
    mode: T,
    arousal: T,
}

impl<T: Serialize> Serialize for FeatureVector<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let [danceability, loudness, valence, bpm, energy, mode, arousal] = &self.0;
        NamedFeatures {
            danceability,
            loudness,
            valence,
            bpm,
            energy,
            mode,
            arousal,
        }
        .serialize(s)
    }
}

impl<'de, T: Deserialize<'de>> Deserialize<'de> for FeatureVector<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let n = NamedFeatures::deserialize(d)?;
        Ok(Self([
            n.danceability,
            n.loudness,
            n.valence,
            n.bpm,
            n.energy,
            n.mode,
            n.arousal,
        ]))
    }
}

/// Per-feature training minima and maxima.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams<T> {
    pub min: FeatureVector<T>,
    pub max: FeatureVector<T>,
}

impl<T: Scalar> ScalingParams<T> {
    pub fn fit(training: &[FeatureVector<T>]) -> Result<Self, FeatureError> {
        let (first, rest) = training.split_first().ok_or(FeatureError::EmptyTraining)?;
        first.check_finite()?;
        let mut min = *first;
        let mut max = *first;
        for v in rest {
            v.check_finite()?;
            for i in 0..FEATURE_COUNT {
                min.0[i] = min.0[i].min(v.0[i]);
                max.0[i] = max.0[i].max(v.0[i]);
            }
        }
        Ok(Self { min, max })
    }

    /// Maps each feature onto `[0, 1]` by `(e - min) / (max - min)`,
    /// clamping out-of-range values. A constant feature maps to 0.5. Mode is
    /// already binary and passes through.
    pub fn scale(&self, v: &FeatureVector<T>) -> FeatureVector<T> {
        let mut out = *v;
        for f in Feature::ALL {
            let i = f.index();
            out.0[i] = if f == Feature::Mode {
                v.0[i].clamp_to(T::zero(), T::one())
            } else {
                let (lo, hi) = (self.min.0[i], self.max.0[i]);
                if hi > lo {
                    ((v.0[i] - lo) / (hi - lo)).clamp_to(T::zero(), T::one())
                } else {
                    T::lit(0.5)
                }
            };
        }
        out
    }

    /// Inverse of [`scale`](Self::scale) for in-range values of
    /// non-degenerate features.
    pub fn unscale(&self, v: &FeatureVector<T>) -> FeatureVector<T> {
        let mut out = *v;
        for f in Feature::ALL {
            let i = f.index();
            if f != Feature::Mode {
                let (lo, hi) = (self.min.0[i], self.max.0[i]);
                out.0[i] = lo + v.0[i] * (hi - lo);
            }
        }
        out
    }
}
