//! Affective dictionaries: loading, rescaling, merging, synonym expansion
//! and token lookup.
//!
//! All scores are held on a unified `[0, 10]` scale for both valence and
//! arousal. Source files on another native scale (ANEW and its large
//! extension are rated 1–9) are rescaled linearly at load time.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

/// Upper end of the unified affect scale.
pub const SCALE_MAX: f64 = 10.0;
/// Midpoint of the unified scale; valence above it reads as positive.
pub const SCALE_MID: f64 = 5.0;

const BUILTIN_LEXICON: &str = include_str!("../data/lexicon.csv");

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("cannot read {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{origin}:{line}: {reason}")]
    Malformed {
        origin: String,
        line: u64,
        reason: String,
    },
    #[error("{origin}:{line}: {column} {value} lies outside native scale [{low}, {high}]")]
    OutOfRange {
        origin: String,
        line: u64,
        column: &'static str,
        value: f64,
        low: f64,
        high: f64,
    },
    #[error("native scale [{low}, {high}] is empty or not finite")]
    InvalidScale { low: f64, high: f64 },
    #[error("affect score ({valence}, {arousal}) outside [0, 10]")]
    ScoreRange { valence: f64, arousal: f64 },
    #[error("cannot write lexicon: {0}")]
    Write(#[from] csv::Error),
}

/// A valence/arousal pair on the unified `[0, 10]` scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffectScore<T> {
    pub valence: T,
    pub arousal: T,
}

impl<T: Scalar> AffectScore<T> {
    pub fn new(valence: T, arousal: T) -> Result<Self, LexiconError> {
        let max = T::lit(SCALE_MAX);
        let ok = |x: T| x >= T::zero() && x <= max;
        if ok(valence) && ok(arousal) {
            Ok(Self { valence, arousal })
        } else {
            Err(LexiconError::ScoreRange {
                valence: valence.as_f64(),
                arousal: arousal.as_f64(),
            })
        }
    }

    /// Clamps both axes into `[0, 10]`.
    pub fn clamped(valence: T, arousal: T) -> Self {
        let max = T::lit(SCALE_MAX);
        Self {
            valence: valence.clamp_to(T::zero(), max),
            arousal: arousal.clamp_to(T::zero(), max),
        }
    }

    /// Mirror of the valence around the scale midpoint. Arousal is kept.
    pub fn with_inverted_valence(self) -> Self {
        Self::clamped(T::lit(SCALE_MAX) - self.valence, self.arousal)
    }

    /// Component-wise arithmetic mean.
    pub fn mean_of<I: IntoIterator<Item = Self>>(scores: I) -> Option<Self> {
        let mut v = T::zero();
        let mut a = T::zero();
        let mut n = 0usize;
        for s in scores {
            v = v + s.valence;
            a = a + s.arousal;
            n += 1;
        }
        let n = T::from_usize(n).filter(|n| !n.is_zero())?;
        Some(Self::clamped(v / n, a / n))
    }

    /// `alpha * self + (1 - alpha) * other` on both axes.
    pub fn blend(self, other: Self, alpha: T) -> Self {
        let beta = T::one() - alpha;
        Self::clamped(
            alpha * self.valence + beta * other.valence,
            alpha * self.arousal + beta * other.arousal,
        )
    }
}

/// Which dictionary an entry came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Source {
    Anew,
    Extended,
    SynonymExpanded,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Anew => "ANEW",
            Source::Extended => "EXTENDED",
            Source::SynonymExpanded => "SYNONYM_EXPANDED",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Source {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "ANEW" => Ok(Source::Anew),
            "EXTENDED" => Ok(Source::Extended),
            "SYNONYM_EXPANDED" => Ok(Source::SynonymExpanded),
            other => Err(format!("unknown lexicon source `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexiconEntry<T> {
    pub word: String,
    pub score: AffectScore<T>,
    pub source: Source,
}

/// Native rating range of a dictionary file, mapped linearly onto `[0, 10]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NativeScale {
    pub low: f64,
    pub high: f64,
}

impl NativeScale {
    pub const UNIFIED: NativeScale = NativeScale { low: 0.0, high: 10.0 };
    /// The 1–9 self-assessment scale used by ANEW and its extension.
    pub const ANEW: NativeScale = NativeScale { low: 1.0, high: 9.0 };

    pub fn new(low: f64, high: f64) -> Result<Self, LexiconError> {
        if low.is_finite() && high.is_finite() && low < high {
            Ok(Self { low, high })
        } else {
            Err(LexiconError::InvalidScale { low, high })
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.low && x <= self.high
    }

    pub fn rescale<T: Scalar>(&self, x: f64) -> T {
        let unit = (x - self.low) / (self.high - self.low);
        T::lit(unit * SCALE_MAX).clamp_to(T::zero(), T::lit(SCALE_MAX))
    }
}

/// Lowercased, trimmed form used as a dictionary key.
pub fn normalize_word(word: &str) -> String {
    word.trim().replace('\u{2019}', "'").to_lowercase()
}

/// Word → synonyms, as produced from a thesaurus export.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SynonymMap {
    map: BTreeMap<String, BTreeSet<String>>,
}

impl SynonymMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert<I, S>(&mut self, word: &str, synonyms: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let set = self.map.entry(normalize_word(word)).or_default();
        set.extend(
            synonyms
                .into_iter()
                .map(|s| normalize_word(s.as_ref()))
                .filter(|s| !s.is_empty()),
        );
    }

    pub fn get(&self, word: &str) -> Option<&BTreeSet<String>> {
        self.map.get(word)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &BTreeSet<String>)> {
        self.map.iter()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Reads `word<TAB>syn1,syn2,...` lines. Blank lines and `#` comments
    /// are skipped.
    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        let file = File::open(path).map_err(|source| LexiconError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_reader(file, &path.display().to_string())
    }

    pub fn from_reader<R: Read>(reader: R, origin: &str) -> Result<Self, LexiconError> {
        let mut out = Self::new();
        for (idx, line) in BufReader::new(reader).lines().enumerate() {
            let line_no = idx as u64 + 1;
            let line = line.map_err(|e| LexiconError::Malformed {
                origin: origin.to_string(),
                line: line_no,
                reason: e.to_string(),
            })?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (word, syns) = trimmed.split_once('\t').ok_or_else(|| LexiconError::Malformed {
                origin: origin.to_string(),
                line: line_no,
                reason: "expected `word<TAB>synonyms`".into(),
            })?;
            if normalize_word(word).is_empty() {
                return Err(LexiconError::Malformed {
                    origin: origin.to_string(),
                    line: line_no,
                    reason: "empty head word".into(),
                });
            }
            out.insert(word, syns.split(','));
        }
        Ok(out)
    }
}

/// A set of scored words, at most one entry per word.
#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon<T> {
    entries: BTreeMap<String, LexiconEntry<T>>,
    provenance: Vec<PathBuf>,
}

impl<T> Default for Lexicon<T> {
    fn default() -> Self {
        Self {
            entries: BTreeMap::new(),
            provenance: Vec::new(),
        }
    }
}

impl<T: Scalar> Lexicon<T> {
    pub fn new() -> Self {
        Self::default()
    }

    /// The small demonstration lexicon bundled with the crate, already on
    /// the unified scale.
    pub fn builtin() -> Self {
        Self::from_reader(
            BUILTIN_LEXICON.as_bytes(),
            NativeScale::UNIFIED,
            Source::Extended,
            "builtin lexicon",
        )
        .expect("bundled lexicon is well formed")
    }

    /// Loads a `word,valence,arousal[,source]` CSV file and rescales it from
    /// `scale` to `[0, 10]`. A `source` column, when present, overrides
    /// `source` per row.
    pub fn load(path: &Path, scale: NativeScale, source: Source) -> Result<Self, LexiconError> {
        let file = File::open(path).map_err(|e| LexiconError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let mut lex = Self::from_reader(file, scale, source, &path.display().to_string())?;
        lex.provenance = vec![path.to_path_buf()];
        Ok(lex)
    }

    pub fn from_reader<R: Read>(
        reader: R,
        scale: NativeScale,
        source: Source,
        origin: &str,
    ) -> Result<Self, LexiconError> {
        let scale = NativeScale::new(scale.low, scale.high)?;
        let malformed = |line: u64, reason: String| LexiconError::Malformed {
            origin: origin.to_string(),
            line,
            reason,
        };

        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| malformed(1, e.to_string()))?
            .iter()
            .map(|h| h.to_ascii_lowercase())
            .collect::<Vec<_>>();
        let column = |name: &str| headers.iter().position(|h| h == name);
        let (word_col, val_col, aro_col) = match (column("word"), column("valence"), column("arousal")) {
            (Some(w), Some(v), Some(a)) => (w, v, a),
            _ => {
                return Err(malformed(
                    1,
                    format!("header must name word, valence, arousal (got `{}`)", headers.join(",")),
                ))
            }
        };
        let source_col = column("source");

        let mut lex = Self::new();
        for record in rdr.records() {
            let record = record.map_err(|e| {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                malformed(line, e.to_string())
            })?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            if record.iter().all(str::is_empty) {
                continue;
            }
            let field = |col: usize, name: &str| {
                record
                    .get(col)
                    .filter(|s| !s.is_empty())
                    .ok_or_else(|| malformed(line, format!("missing {name} column")))
            };
            let word = normalize_word(field(word_col, "word")?);
            let number = |col: usize, name: &'static str| -> Result<f64, LexiconError> {
                let raw = field(col, name)?;
                let value: f64 = raw
                    .parse()
                    .ok()
                    .filter(|v: &f64| v.is_finite())
                    .ok_or_else(|| malformed(line, format!("{name} `{raw}` is not a number")))?;
                if !scale.contains(value) {
                    return Err(LexiconError::OutOfRange {
                        origin: origin.to_string(),
                        line,
                        column: name,
                        value,
                        low: scale.low,
                        high: scale.high,
                    });
                }
                Ok(value)
            };
            let valence = number(val_col, "valence")?;
            let arousal = number(aro_col, "arousal")?;
            let row_source = match source_col.and_then(|c| record.get(c)).filter(|s| !s.is_empty()) {
                Some(s) => s.parse().map_err(|e: String| malformed(line, e))?,
                None => source,
            };
            lex.insert_if_absent(LexiconEntry {
                word,
                score: AffectScore {
                    valence: scale.rescale(valence),
                    arousal: scale.rescale(arousal),
                },
                source: row_source,
            });
        }
        Ok(lex)
    }

    /// Adds the entry unless its word is already present. Returns whether
    /// it was added.
    pub fn insert_if_absent(&mut self, entry: LexiconEntry<T>) -> bool {
        if entry.word.is_empty() || self.entries.contains_key(&entry.word) {
            return false;
        }
        self.entries.insert(entry.word.clone(), entry);
        true
    }

    /// Union of the given lexicons; on collision the earlier one wins.
    pub fn merge<'a, I>(lexicons: I) -> Self
    where
        I: IntoIterator<Item = &'a Lexicon<T>>,
    {
        let mut out = Self::new();
        for lex in lexicons {
            for entry in lex.entries.values() {
                out.insert_if_absent(entry.clone());
            }
            for p in &lex.provenance {
                if !out.provenance.contains(p) {
                    out.provenance.push(p.clone());
                }
            }
        }
        out
    }

    /// Gives each synonym of a scored word that word's score. A synonym
    /// reached from several scored words takes the mean of their scores.
    /// Existing entries are never touched.
    pub fn expand_with_synonyms(&self, synonyms: &SynonymMap) -> Self {
        let mut gathered: BTreeMap<&str, Vec<AffectScore<T>>> = BTreeMap::new();
        for (word, syns) in synonyms.iter() {
            let Some(base) = self.entries.get(word) else {
                continue;
            };
            for syn in syns {
                if !self.entries.contains_key(syn) {
                    gathered.entry(syn.as_str()).or_default().push(base.score);
                }
            }
        }

        let mut out = self.clone();
        for (syn, scores) in gathered {
            if let Some(score) = AffectScore::mean_of(scores) {
                out.insert_if_absent(LexiconEntry {
                    word: syn.to_string(),
                    score,
                    source: Source::SynonymExpanded,
                });
            }
        }
        out
    }

    /// Case-folded lookup with a small inflection fallback: strip a trailing
    /// `s`, then `ing`, then `ed`; the first hit wins.
    pub fn lookup(&self, token: &str) -> Option<AffectScore<T>> {
        let word = normalize_word(token);
        if word.is_empty() {
            return None;
        }
        if let Some(e) = self.entries.get(&word) {
            return Some(e.score);
        }
        ["s", "ing", "ed"].iter().find_map(|suffix| {
            word.strip_suffix(suffix)
                .filter(|stem| !stem.is_empty())
                .and_then(|stem| self.entries.get(stem))
                .map(|e| e.score)
        })
    }

    pub fn get(&self, word: &str) -> Option<&LexiconEntry<T>> {
        self.entries.get(word)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains_key(word)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in word order.
    pub fn iter(&self) -> impl Iterator<Item = &LexiconEntry<T>> {
        self.entries.values()
    }

    pub fn provenance(&self) -> &[PathBuf] {
        &self.provenance
    }

    /// Writes `word,valence,arousal,source` rows in word order.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), LexiconError> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["word", "valence", "arousal", "source"])?;
        for e in self.entries.values() {
            wtr.write_record([
                e.word.as_str(),
                &format_score(e.score.valence),
                &format_score(e.score.arousal),
                e.source.as_str(),
            ])?;
        }
        wtr.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

impl<T: Scalar> FromIterator<LexiconEntry<T>> for Lexicon<T> {
    fn from_iter<I: IntoIterator<Item = LexiconEntry<T>>>(iter: I) -> Self {
        let mut lex = Self::new();
        for e in iter {
            lex.insert_if_absent(e);
        }
        lex
    }
}

fn format_score<T: Scalar>(x: T) -> String {
    // shortest repr that round-trips, trimmed of float noise past 1e-6
    let v = (x.as_f64() * 1e6).round() / 1e6;
    format!("{v}")
}
