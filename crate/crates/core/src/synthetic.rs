//! Class-conditioned Gaussian song generator for end-to-end experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::affect::SongAffect;
use crate::dataset::{ConflictTable, MoodClass, SongRecord, TagWeight, CLASS_COUNT};
use crate::features::{AudioFeatures, FeatureVector, Mode};
use crate::scalar::Scalar;

/// Cluster centre of one class in raw units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Centroid {
    pub danceability: f64,
    pub loudness_db: f64,
    pub valence: f64,
    pub bpm: f64,
    pub energy: f64,
    /// Probability of a major key.
    pub major: f64,
    pub arousal: f64,
}

const fn c(danceability: f64, loudness_db: f64, valence: f64, bpm: f64, energy: f64, major: f64, arousal: f64) -> Centroid {
    Centroid {
        danceability,
        loudness_db,
        valence,
        bpm,
        energy,
        major,
        arousal,
    }
}

/// Indexed by [`MoodClass::index`].
pub const CENTROIDS: [Centroid; CLASS_COUNT] = [
    c(0.35, -14.0, 6.0, 75.0, 0.25, 0.6, 2.5),  // Calm
    c(0.55, -5.0, 6.0, 150.0, 0.90, 0.6, 8.0),  // Energetic
    c(0.85, -5.0, 7.0, 124.0, 0.80, 0.7, 7.0),  // Dance
    c(0.65, -7.0, 8.5, 118.0, 0.65, 0.85, 6.5), // Happy
    c(0.35, -12.0, 2.0, 80.0, 0.30, 0.2, 3.0),  // Sad
    c(0.50, -10.0, 7.5, 95.0, 0.40, 0.7, 4.5),  // Romantic
    c(0.70, -9.0, 6.5, 100.0, 0.50, 0.4, 5.5),  // Seductive
    c(0.50, -8.0, 7.5, 110.0, 0.60, 0.8, 5.5),  // Hopeful
    c(0.45, -4.0, 1.5, 140.0, 0.95, 0.3, 8.5),  // Angry
];

/// Standard deviations at spread 1, in feature order without mode.
const BASE_SD: Centroid = c(0.10, 2.5, 1.2, 15.0, 0.10, 0.0, 1.2);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    pub songs: usize,
    /// Multiplier on the per-feature standard deviations.
    pub spread: f64,
    /// Chance that a song also carries a second, non-conflicting class.
    pub secondary_probability: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            songs: 400,
            spread: 1.0,
            secondary_probability: 0.25,
            seed: 0,
        }
    }
}

/// Classes that can accompany `primary` without conflicting either way.
pub fn compatible_classes(primary: MoodClass) -> Vec<MoodClass> {
    let table = ConflictTable::symmetrized();
    MoodClass::ALL
        .into_iter()
        .filter(|&c| c != primary && !table.conflicts(primary, c))
        .collect()
}

/// Songs with primary classes in round-robin order, each drawn around its
/// class centroid (or the midpoint of two centroids for two-class songs).
/// Every record carries tags, classes and its raw feature vector.
pub fn generate<T: Scalar>(config: &SyntheticConfig) -> Vec<SongRecord<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    (0..config.songs)
        .map(|i| {
            let primary = MoodClass::ALL[i % CLASS_COUNT];
            let mut classes = vec![primary];
            if rng.random::<f64>() < config.secondary_probability {
                let options = compatible_classes(primary);
                if !options.is_empty() {
                    classes.push(options[rng.random_range(0..options.len())]);
                }
            }
            let centre = mix(classes.iter().map(|c| CENTROIDS[c.index()]));
            let mut draw = |mean: f64, sd: f64| mean + sd * config.spread * noise.sample(&mut rng);
            let danceability = draw(centre.danceability, BASE_SD.danceability).clamp(0.0, 1.0);
            let loudness_db = draw(centre.loudness_db, BASE_SD.loudness_db).min(0.0);
            let valence = draw(centre.valence, BASE_SD.valence).clamp(0.0, 10.0);
            let bpm = draw(centre.bpm, BASE_SD.bpm).max(40.0);
            let energy = draw(centre.energy, BASE_SD.energy).clamp(0.0, 1.0);
            let arousal = draw(centre.arousal, BASE_SD.arousal).clamp(0.0, 10.0);
            let mode = if rng.random::<f64>() < centre.major {
                Mode::Major
            } else {
                Mode::Minor
            };
            let audio = AudioFeatures {
                bpm: T::lit(bpm),
                mode,
                loudness_db: T::lit(loudness_db),
                danceability: T::lit(danceability),
                energy: T::lit(energy),
            };
            let affect = SongAffect {
                valence: T::lit(valence),
                arousal: T::lit(arousal),
            };
            let tags = classes
                .iter()
                .enumerate()
                .map(|(rank, c)| TagWeight::new(c.tags()[0], 100 - 40 * rank as u32))
                .collect();
            SongRecord {
                artist: format!("Synthetic {:03}", i / CLASS_COUNT),
                title: format!("Song {i:04}"),
                tags,
                audio,
                lyrics: None,
                classes: classes.into_iter().collect(),
                vector: Some(FeatureVector::assemble(affect, &audio)),
            }
        })
        .collect()
}

fn mix(centroids: impl Iterator<Item = Centroid>) -> Centroid {
    let all: Vec<Centroid> = centroids.collect();
    let n = all.len() as f64;
    let avg = |f: fn(&Centroid) -> f64| all.iter().map(f).sum::<f64>() / n;
    c(
        avg(|c| c.danceability),
        avg(|c| c.loudness_db),
        avg(|c| c.valence),
        avg(|c| c.bpm),
        avg(|c| c.energy),
        avg(|c| c.major),
        avg(|c| c.arousal),
    )
}
