//! Mood classes, tag → class mapping, conflict-based evaluation and
//! stratified fold partitioning.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{AudioFeatures, FeatureVector};
use crate::scalar::Scalar;

/// Default minimum tag weight kept when mapping tags to classes.
pub const DEFAULT_MIN_TAG_WEIGHT: u32 = 10;
pub const DEFAULT_FOLDS: usize = 4;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot access {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{origin}:{line}: {source}")]
    Json {
        origin: String,
        line: usize,
        source: serde_json::Error,
    },
    #[error("duplicate song `{0}`")]
    Duplicate(String),
    #[error("need at least {folds} songs to build {folds} folds, got {records}")]
    TooFewRecords { records: usize, folds: usize },
    #[error("fold count must be positive")]
    NoFolds,
    #[error("song `{0}` has no mood class")]
    Unlabeled(String),
    #[error("song `{0}` is missing from the predictions or the truth set")]
    Unmatched(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MoodClass {
    Calm,
    Energetic,
    Dance,
    Happy,
    Sad,
    Romantic,
    Seductive,
    Hopeful,
    Angry,
}

pub const CLASS_COUNT: usize = 9;

impl MoodClass {
    pub const ALL: [MoodClass; CLASS_COUNT] = [
        MoodClass::Calm,
        MoodClass::Energetic,
        MoodClass::Dance,
        MoodClass::Happy,
        MoodClass::Sad,
        MoodClass::Romantic,
        MoodClass::Seductive,
        MoodClass::Hopeful,
        MoodClass::Angry,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            MoodClass::Calm => "Calm",
            MoodClass::Energetic => "Energetic",
            MoodClass::Dance => "Dance",
            MoodClass::Happy => "Happy",
            MoodClass::Sad => "Sad",
            MoodClass::Romantic => "Romantic",
            MoodClass::Seductive => "Seductive",
            MoodClass::Hopeful => "Hopeful",
            MoodClass::Angry => "Angry",
        }
    }

    /// Social tags that place a song in this class.
    pub fn tags(self) -> &'static [&'static str] {
        match self {
            MoodClass::Calm => &[
                "slow",
                "soft",
                "mellow",
                "peaceful",
                "calm",
                "serene",
                "relaxed",
                "down-tempo",
                "meditative",
            ],
            MoodClass::Energetic => &["energetic", "upbeat", "speed", "energy", "intense", "uptempo", "metal"],
            MoodClass::Dance => &["party", "dance", "dancing", "club"],
            MoodClass::Happy => &["happy", "joy", "euphoria", "ecstatic", "cheerful"],
            MoodClass::Sad => &[
                "sad",
                "anxiety",
                "fear",
                "gloomy",
                "depressed",
                "depression",
                "depressive",
                "melancholic",
                "miserable",
                "misery",
            ],
            MoodClass::Romantic => &["love", "love songs", "affectionate", "romantic"],
            MoodClass::Seductive => &["sensual", "seductive", "naughty", "erotic", "sexy"],
            MoodClass::Hopeful => &["hope", "hopeful", "inspirational", "up-lifting", "inspiring", "lifting"],
            MoodClass::Angry => &["angry", "anger", "rage", "aggression", "aggressive", "hate"],
        }
    }

    /// Classes that contradict this one when it is the assigned class, as
    /// printed in the published conflict table (the Angry row's self entry
    /// omitted).
    pub fn printed_conflicts(self) -> &'static [MoodClass] {
        use MoodClass::*;
        match self {
            Calm => &[Energetic, Dance],
            Energetic => &[Calm],
            Dance => &[Sad, Calm, Angry, Hopeful],
            Happy => &[Sad, Angry],
            Sad => &[Happy, Dance, Seductive],
            Romantic => &[Angry],
            Seductive => &[Sad, Angry],
            Hopeful => &[Dance, Angry],
            Angry => &[Happy, Romantic],
        }
    }

    /// Class whose tag list contains `tag` (case-insensitive, exact).
    pub fn for_tag(tag: &str) -> Option<MoodClass> {
        let tag = tag.trim().to_lowercase();
        MoodClass::ALL.into_iter().find(|c| c.tags().contains(&tag.as_str()))
    }
}

impl fmt::Display for MoodClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MoodClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MoodClass::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown mood class `{s}`"))
    }
}

pub type ClassSet = BTreeSet<MoodClass>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagWeight {
    pub tag: String,
    pub weight: u32,
}

impl TagWeight {
    pub fn new(tag: impl Into<String>, weight: u32) -> Self {
        Self {
            tag: tag.into(),
            weight,
        }
    }
}

/// Classes named by the tags with weight at least `min_weight`. Tags that
/// name no class ("awesome", "cool") are ignored.
pub fn map_tags_to_classes(tags: &[TagWeight], min_weight: u32) -> ClassSet {
    tags.iter()
        .filter(|t| t.weight >= min_weight)
        .filter_map(|t| MoodClass::for_tag(&t.tag))
        .collect()
}

/// Assigned-class → conflicting-tagged-class relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConflictTable {
    cells: [[bool; CLASS_COUNT]; CLASS_COUNT],
}

impl Default for ConflictTable {
    fn default() -> Self {
        Self::printed()
    }
}

impl ConflictTable {
    /// The relation exactly as published, asymmetries included.
    pub fn printed() -> Self {
        let mut cells = [[false; CLASS_COUNT]; CLASS_COUNT];
        for a in MoodClass::ALL {
            for &t in a.printed_conflicts() {
                cells[a.index()][t.index()] = true;
            }
        }
        Self { cells }
    }

    /// Closure of the printed relation under symmetry.
    pub fn symmetrized() -> Self {
        let mut t = Self::printed();
        for i in 0..CLASS_COUNT {
            for j in 0..CLASS_COUNT {
                if t.cells[i][j] {
                    t.cells[j][i] = true;
                }
            }
        }
        t
    }

    pub fn new(symmetric: bool) -> Self {
        if symmetric {
            Self::symmetrized()
        } else {
            Self::printed()
        }
    }

    pub fn conflicts(&self, assigned: MoodClass, tagged: MoodClass) -> bool {
        self.cells[assigned.index()][tagged.index()]
    }

    /// True when any assigned class conflicts with any tag-derived class.
    pub fn is_incorrect(&self, assigned: &ClassSet, truth: &ClassSet) -> bool {
        assigned.iter().any(|&a| truth.iter().any(|&t| self.conflicts(a, t)))
    }
}

/// Printed-table conflict test.
pub fn conflicts(assigned: MoodClass, tagged: MoodClass) -> bool {
    ConflictTable::printed().conflicts(assigned, tagged)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SongRecord<T> {
    pub artist: String,
    pub title: String,
    #[serde(default)]
    pub tags: Vec<TagWeight>,
    pub audio: AudioFeatures<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lyrics: Option<PathBuf>,
    #[serde(default)]
    pub classes: ClassSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vector: Option<FeatureVector<T>>,
}

impl<T: Scalar> SongRecord<T> {
    /// Stable identifier, also the neighbour tie-break key.
    pub fn id(&self) -> String {
        song_id(&self.artist, &self.title)
    }

    /// Case- and whitespace-insensitive identity used for deduplication.
    pub fn key(&self) -> (String, String) {
        song_key(&self.artist, &self.title)
    }

    pub fn derive_classes(&mut self, min_weight: u32) {
        self.classes = map_tags_to_classes(&self.tags, min_weight);
    }
}

pub fn song_id(artist: &str, title: &str) -> String {
    format!("{} - {}", artist.trim(), title.trim())
}

pub fn song_key(artist: &str, title: &str) -> (String, String) {
    let norm = |s: &str| s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    (norm(artist), norm(title))
}

/// Drops repeated (artist, title) pairs, keeping the first. Returns the
/// number removed.
pub fn dedupe<T: Scalar>(records: &mut Vec<SongRecord<T>>) -> usize {
    let before = records.len();
    let mut seen = HashSet::new();
    records.retain(|r| seen.insert(r.key()));
    before - records.len()
}

/// Reads one JSON value per non-blank line.
pub fn read_jsonl<V: serde::de::DeserializeOwned, R: Read>(reader: R, origin: &str) -> Result<Vec<V>, DatasetError> {
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(|e| DatasetError::Json {
            origin: origin.to_string(),
            line: idx + 1,
            source: serde_json::Error::io(e),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| DatasetError::Json {
            origin: origin.to_string(),
            line: idx + 1,
            source,
        })?);
    }
    Ok(out)
}

pub fn write_jsonl<V: Serialize, W: Write>(writer: W, values: &[V]) -> io::Result<()> {
    let mut w = BufWriter::new(writer);
    for v in values {
        serde_json::to_writer(&mut w, v)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

/// Loads a dataset file, rejecting duplicate songs.
pub fn load_dataset<T: Scalar>(path: &Path) -> Result<Vec<SongRecord<T>>, DatasetError> {
    let file = File::open(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let records: Vec<SongRecord<T>> = read_jsonl(file, &path.display().to_string())?;
    let mut seen = HashSet::new();
    for r in &records {
        if !seen.insert(r.key()) {
            return Err(DatasetError::Duplicate(r.id()));
        }
    }
    Ok(records)
}

pub fn save_dataset<T: Scalar>(path: &Path, records: &[SongRecord<T>]) -> Result<(), DatasetError> {
    let io_err = |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    write_jsonl(file, records).map_err(io_err)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fold<R> {
    /// 1-based.
    pub index: usize,
    pub records: Vec<R>,
}

/// Assigns item indices to `folds` folds, balancing each class across
/// folds. Items are visited in a seeded shuffle; each goes to the fold
/// holding the fewest items of its rarest class, then the fewest of all its
/// classes, then the fewest items overall. Indices within a fold ascend.
pub fn partition_indices(classes: &[ClassSet], folds: usize, seed: u64) -> Result<Vec<Vec<usize>>, DatasetError> {
    if folds == 0 {
        return Err(DatasetError::NoFolds);
    }
    if classes.len() < folds {
        return Err(DatasetError::TooFewRecords {
            records: classes.len(),
            folds,
        });
    }
    if let Some(i) = classes.iter().position(|c| c.is_empty()) {
        return Err(DatasetError::Unlabeled(format!("#{}", i + 1)));
    }

    let mut class_sizes = [0usize; CLASS_COUNT];
    for set in classes {
        for c in set {
            class_sizes[c.index()] += 1;
        }
    }

    let mut order: Vec<usize> = (0..classes.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut counts = vec![[0usize; CLASS_COUNT]; folds];
    let mut out = vec![Vec::new(); folds];
    for i in order {
        let set = &classes[i];
        let rarest = *set
            .iter()
            .min_by_key(|c| (class_sizes[c.index()], **c))
            .expect("non-empty class set");
        let fold = (0..folds)
            .min_by_key(|&f| {
                let own: usize = set.iter().map(|c| counts[f][c.index()]).sum();
                (counts[f][rarest.index()], own, out[f].len(), f)
            })
            .expect("at least one fold");
        for c in set {
            counts[fold][c.index()] += 1;
        }
        out[fold].push(i);
    }
    for f in &mut out {
        f.sort_unstable();
    }
    Ok(out)
}

/// Seeded class-stratified split of a dataset.
pub fn stratified_partition<T: Scalar>(
    records: &[SongRecord<T>],
    folds: usize,
    seed: u64,
) -> Result<Vec<Fold<SongRecord<T>>>, DatasetError> {
    if let Some(r) = records.iter().find(|r| r.classes.is_empty()) {
        return Err(DatasetError::Unlabeled(r.id()));
    }
    let classes: Vec<ClassSet> = records.iter().map(|r| r.classes.clone()).collect();
    Ok(partition_indices(&classes, folds, seed)?
        .into_iter()
        .enumerate()
        .map(|(i, idx)| Fold {
            index: i + 1,
            records: idx.into_iter().map(|j| records[j].clone()).collect(),
        })
        .collect())
}

/// Outcome for one evaluated set of songs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetEvaluation {
    pub total: usize,
    pub incorrect: usize,
    pub correct: usize,
    /// Songs without any tag-derived class; not counted in `total`.
    pub excluded: Vec<String>,
    pub incorrect_songs: Vec<String>,
}

impl SetEvaluation {
    pub fn accuracy(&self) -> f64 {
        accuracy_percent(self.total, self.incorrect)
    }
}

/// `100 × (total − incorrect) / total`, 0 for an empty set.
pub fn accuracy_percent(total: usize, incorrect: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * (total - incorrect) as f64 / total as f64
    }
}

/// A song is incorrect when any assigned class conflicts with any of its
/// tag-derived classes.
pub fn evaluate(
    predictions: &BTreeMap<String, ClassSet>,
    truth: &BTreeMap<String, ClassSet>,
    table: &ConflictTable,
) -> Result<SetEvaluation, DatasetError> {
    if let Some(id) = predictions.keys().find(|k| !truth.contains_key(*k)) {
        return Err(DatasetError::Unmatched(id.clone()));
    }
    let mut eval = SetEvaluation {
        total: 0,
        incorrect: 0,
        correct: 0,
        excluded: Vec::new(),
        incorrect_songs: Vec::new(),
    };
    for (id, tagged) in truth {
        let assigned = predictions.get(id).ok_or_else(|| DatasetError::Unmatched(id.clone()))?;
        if tagged.is_empty() {
            eval.excluded.push(id.clone());
            continue;
        }
        eval.total += 1;
        if table.is_incorrect(assigned, tagged) {
            eval.incorrect += 1;
            eval.incorrect_songs.push(id.clone());
        } else {
            eval.correct += 1;
        }
    }
    Ok(eval)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub set: String,
    pub total: usize,
    pub incorrect: usize,
    pub correct: usize,
    pub accuracy: f64,
}

impl ReportRow {
    pub fn new(set: impl Into<String>, total: usize, incorrect: usize) -> Self {
        Self {
            set: set.into(),
            total,
            incorrect,
            correct: total - incorrect,
            accuracy: round2(accuracy_percent(total, incorrect)),
        }
    }
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Per-set and pooled accuracy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub sets: Vec<ReportRow>,
    pub all: ReportRow,
    pub excluded: Vec<String>,
}

impl AccuracyReport {
    pub fn from_sets<S: Into<String>>(sets: impl IntoIterator<Item = (S, SetEvaluation)>) -> Self {
        let mut rows = Vec::new();
        let mut excluded = Vec::new();
        let (mut total, mut incorrect) = (0, 0);
        for (name, eval) in sets {
            total += eval.total;
            incorrect += eval.incorrect;
            excluded.extend(eval.excluded.iter().cloned());
            rows.push(ReportRow::new(name, eval.total, eval.incorrect));
        }
        Self {
            sets: rows,
            all: ReportRow::new("All", total, incorrect),
            excluded,
        }
    }

    /// Aligned text table: set, total, incorrect, correct, accuracy.
    pub fn render_table(&self) -> String {
        let header = ["Set", "Total Songs", "Incorrect", "Correct", "Accuracy (%)"];
        let mut rows: Vec<[String; 5]> = vec![header.map(String::from)];
        for r in self.sets.iter().chain(std::iter::once(&self.all)) {
            rows.push([
                r.set.clone(),
                r.total.to_string(),
                r.incorrect.to_string(),
                r.correct.to_string(),
                format!("{:.2}", r.accuracy),
            ]);
        }
        let widths: Vec<usize> = (0..5).map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0)).collect();
        let mut out = String::new();
        for r in &rows {
            let cells: Vec<String> = r
                .iter()
                .enumerate()
                .map(|(c, cell)| {
                    if c == 0 {
                        format!("{cell:<w$}", w = widths[c])
                    } else {
                        format!("{cell:>w$}", w = widths[c])
                    }
                })
                .collect();
            out.push_str(cells.join("  ").trim_end());
            out.push('\n');
        }
        if !self.excluded.is_empty() {
            out.push_str(&format!("excluded (no tag-derived class): {}\n", self.excluded.len()));
        }
        out
    }
}
