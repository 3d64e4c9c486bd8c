//! Contextual association rules and sentence/song affect.
//!
//! Per sentence: negation words flip the valence of the verb or adjective
//! they govern, adjectives attach to nouns to form phrases, and scored verbs
//! pull the whole sentence towards their own affect. Song affect is the
//! segment-weighted mean of scored sentences.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexicon::{AffectScore, Lexicon};
use crate::lyrics::{LyricDocument, LyricsError, SegmentKind, SegmentationConfig, Sentence};
use crate::pos::{PosTag, Tagger};
use crate::scalar::Scalar;

/// Default blend factor for verb dominance.
pub const DEFAULT_VERB_DOMINANCE: f64 = 0.6;
/// Tokens after a negation word that it can reach.
pub const DEFAULT_NEGATION_WINDOW: usize = 4;

#[derive(Debug, Error, PartialEq)]
pub enum AffectError {
    #[error(transparent)]
    Lyrics(#[from] LyricsError),
    #[error("no lyric line contains a scored word; lyric affect unavailable")]
    Unavailable,
    #[error("verb dominance must lie in [0, 1], got {0}")]
    InvalidVerbDominance(f64),
}

/// A token after lexicon lookup, ready for the rule passes.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggedWord<T> {
    pub word: String,
    pub pos: PosTag,
    pub score: Option<AffectScore<T>>,
    pub negated: bool,
}

impl<T: Scalar> TaggedWord<T> {
    pub fn new(word: impl Into<String>, pos: PosTag, score: Option<AffectScore<T>>) -> Self {
        Self {
            word: word.into(),
            pos,
            score,
            negated: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum UnitKind {
    NounPhrase,
    Verb,
    FreeWord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffectUnit<T> {
    pub kind: UnitKind,
    pub score: AffectScore<T>,
    pub negated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SongAffect<T> {
    pub valence: T,
    pub arousal: T,
}

/// Marks verbs and adjectives governed by a negation word and removes the
/// negation words. Each negation word reaches the nearest verb or adjective
/// within `window` following tokens; two negations on the same word cancel.
/// Negated words get valence `10 - v`.
pub fn apply_negation<T: Scalar>(words: Vec<TaggedWord<T>>, window: usize) -> Vec<TaggedWord<T>> {
    let mut flips = vec![false; words.len()];
    for (i, w) in words.iter().enumerate() {
        if w.pos != PosTag::Negation {
            continue;
        }
        let target = words
            .iter()
            .enumerate()
            .skip(i + 1)
            .take(window)
            .find(|(_, t)| matches!(t.pos, PosTag::Verb | PosTag::Adj));
        if let Some((j, _)) = target {
            flips[j] = !flips[j];
        }
    }

    words
        .into_iter()
        .zip(flips)
        .filter(|(w, _)| w.pos != PosTag::Negation)
        .map(|(mut w, flip)| {
            if flip {
                w.negated = !w.negated;
                w.score = w.score.map(AffectScore::with_inverted_valence);
            }
            w
        })
        .collect()
}

/// One slot of the sentence after adjacent adjectives are collapsed.
#[derive(Debug, Clone)]
struct Slot<T> {
    pos: PosTag,
    score: Option<AffectScore<T>>,
    negated: bool,
}

fn collapse_adjectives<T: Scalar>(words: &[TaggedWord<T>]) -> Vec<Slot<T>> {
    let mut slots: Vec<Slot<T>> = Vec::with_capacity(words.len());
    let mut i = 0;
    while i < words.len() {
        if words[i].pos == PosTag::Adj {
            let end = words[i..]
                .iter()
                .position(|w| w.pos != PosTag::Adj)
                .map_or(words.len(), |n| i + n);
            let run = &words[i..end];
            slots.push(Slot {
                pos: PosTag::Adj,
                score: AffectScore::mean_of(run.iter().filter_map(|w| w.score)),
                negated: run.iter().any(|w| w.negated),
            });
            i = end;
        } else {
            let w = &words[i];
            slots.push(Slot {
                pos: w.pos,
                score: w.score,
                negated: w.negated,
            });
            i += 1;
        }
    }
    slots
}

/// Binds adjectives to nouns and turns the sentence into scored units.
///
/// Rules, applied in order: adjacent adjectives merge (mean score); an
/// adjective directly before a noun binds to it; otherwise to the nearest
/// preceding noun not yet bound; otherwise to the nearest following unbound
/// noun, where the closer of two competing adjectives wins. A bound pair
/// scores as the mean of its scored members. Unscored tokens produce no unit.
pub fn bind_adjectives<T: Scalar>(words: &[TaggedWord<T>]) -> Vec<AffectUnit<T>> {
    let slots = collapse_adjectives(words);
    let n = slots.len();
    let is_noun = |i: usize| slots[i].pos == PosTag::Noun;
    let adjectives: Vec<usize> = (0..n).filter(|&i| slots[i].pos == PosTag::Adj).collect();

    // noun_of[adj] = bound noun, adj_of[noun] = bound adjective
    let mut noun_of: Vec<Option<usize>> = vec![None; n];
    let mut adj_of: Vec<Option<usize>> = vec![None; n];

    for &a in &adjectives {
        if a + 1 < n && is_noun(a + 1) && adj_of[a + 1].is_none() {
            noun_of[a] = Some(a + 1);
            adj_of[a + 1] = Some(a);
        }
    }

    for &a in &adjectives {
        if noun_of[a].is_some() {
            continue;
        }
        if let Some(noun) = (0..a).rev().find(|&j| is_noun(j) && adj_of[j].is_none()) {
            noun_of[a] = Some(noun);
            adj_of[noun] = Some(a);
        }
    }

    let mut claims: Vec<Option<usize>> = vec![None; n];
    for &a in &adjectives {
        if noun_of[a].is_some() {
            continue;
        }
        if let Some(noun) = (a + 1..n).find(|&j| is_noun(j) && adj_of[j].is_none()) {
            // adjectives scan left to right, so a later claimant is closer
            claims[noun] = Some(a);
        }
    }
    for (noun, claim) in claims.into_iter().enumerate() {
        if let Some(a) = claim {
            noun_of[a] = Some(noun);
            adj_of[noun] = Some(a);
        }
    }

    let mut units = Vec::new();
    for (i, slot) in slots.iter().enumerate() {
        match slot.pos {
            PosTag::Adj if noun_of[i].is_some() => {}
            PosTag::Noun if adj_of[i].is_some() => {
                let adj = &slots[adj_of[i].unwrap()];
                let members = [adj.score, slot.score];
                if let Some(score) = AffectScore::mean_of(members.into_iter().flatten()) {
                    units.push(AffectUnit {
                        kind: UnitKind::NounPhrase,
                        score,
                        negated: adj.negated || slot.negated,
                    });
                }
            }
            PosTag::Verb => {
                if let Some(score) = slot.score {
                    units.push(AffectUnit {
                        kind: UnitKind::Verb,
                        score,
                        negated: slot.negated,
                    });
                }
            }
            _ => {
                if let Some(score) = slot.score {
                    units.push(AffectUnit {
                        kind: UnitKind::FreeWord,
                        score,
                        negated: slot.negated,
                    });
                }
            }
        }
    }
    units
}

/// Mean of non-verb units, blended towards the mean verb score with weight
/// `verb_dominance` when the sentence has a scored verb. `None` when no unit
/// is scored.
pub fn sentence_affect<T: Scalar>(units: &[AffectUnit<T>], verb_dominance: T) -> Option<AffectScore<T>> {
    let verbs = AffectScore::mean_of(units.iter().filter(|u| u.kind == UnitKind::Verb).map(|u| u.score));
    let base = AffectScore::mean_of(units.iter().filter(|u| u.kind != UnitKind::Verb).map(|u| u.score));
    match (verbs, base) {
        (Some(v), Some(b)) => Some(v.blend(b, verb_dominance)),
        (Some(v), None) => Some(v),
        (None, b) => b,
    }
}

/// Weighted mean over scored sentences: `Σ score·weight / Σ weight`, the
/// total counting scored sentences only.
pub fn song_affect<T, I>(sentences: I) -> Result<SongAffect<T>, AffectError>
where
    T: Scalar,
    I: IntoIterator<Item = (Option<AffectScore<T>>, T)>,
{
    let mut v = T::zero();
    let mut a = T::zero();
    let mut total = T::zero();
    for (score, weight) in sentences {
        if let Some(s) = score {
            v = v + s.valence * weight;
            a = a + s.arousal * weight;
            total = total + weight;
        }
    }
    if total <= T::zero() {
        return Err(AffectError::Unavailable);
    }
    let s = AffectScore::clamped(v / total, a / total);
    Ok(SongAffect {
        valence: s.valence,
        arousal: s.arousal,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig<T> {
    pub segmentation: SegmentationConfig<T>,
    pub verb_dominance: T,
    pub negation_window: usize,
}

impl<T: Scalar> Default for AnalysisConfig<T> {
    fn default() -> Self {
        Self {
            segmentation: SegmentationConfig::default(),
            verb_dominance: T::lit(DEFAULT_VERB_DOMINANCE),
            negation_window: DEFAULT_NEGATION_WINDOW,
        }
    }
}

impl<T: Scalar> AnalysisConfig<T> {
    pub fn validate(&self) -> Result<(), AffectError> {
        SegmentationConfig::new(self.segmentation.chorus_weight, self.segmentation.verse_weight)?;
        let a = self.verb_dominance;
        if !(a >= T::zero() && a <= T::one()) {
            return Err(AffectError::InvalidVerbDominance(a.as_f64()));
        }
        Ok(())
    }
}

/// Affect of one lyric line as reported by [`Analyzer::analyze`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceAffect<T> {
    pub text: String,
    pub valence: Option<T>,
    pub arousal: Option<T>,
    pub weight: T,
    #[serde(skip)]
    pub kind: Option<SegmentKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyricAnalysis<T> {
    pub valence: T,
    pub arousal: T,
    pub sentences: Vec<SentenceAffect<T>>,
}

impl<T: Scalar> LyricAnalysis<T> {
    pub fn song(&self) -> SongAffect<T> {
        SongAffect {
            valence: self.valence,
            arousal: self.arousal,
        }
    }
}

/// Full lyric pipeline: segmentation, tagging, rules, weighted mean.
#[derive(Debug, Clone)]
pub struct Analyzer<T> {
    lexicon: Lexicon<T>,
    tagger: Tagger,
    config: AnalysisConfig<T>,
}

impl<T: Scalar> Analyzer<T> {
    pub fn new(lexicon: Lexicon<T>, tagger: Tagger, config: AnalysisConfig<T>) -> Result<Self, AffectError> {
        config.validate()?;
        Ok(Self { lexicon, tagger, config })
    }

    pub fn lexicon(&self) -> &Lexicon<T> {
        &self.lexicon
    }

    pub fn config(&self) -> &AnalysisConfig<T> {
        &self.config
    }

    /// Tags and scores one sentence, returning the words after negation.
    pub fn prepare(&self, sentence: &Sentence) -> Vec<TaggedWord<T>> {
        let tagged = self.tagger.tag_sentence(sentence.clone());
        let words = tagged
            .tokens
            .into_iter()
            .map(|t| {
                let score = match t.pos {
                    PosTag::Negation => None,
                    _ => self.lexicon.lookup(&t.normalized),
                };
                TaggedWord::new(t.normalized, t.pos, score)
            })
            .collect();
        apply_negation(words, self.config.negation_window)
    }

    pub fn sentence_score(&self, sentence: &Sentence) -> Option<AffectScore<T>> {
        let units = bind_adjectives(&self.prepare(sentence));
        sentence_affect(&units, self.config.verb_dominance)
    }

    /// Scores a single line of text as one sentence.
    pub fn score_line(&self, line: &str) -> Option<AffectScore<T>> {
        let sentence = crate::lyrics::split_sentences(&[line]).into_iter().next()?;
        self.sentence_score(&sentence)
    }

    pub fn analyze_document(&self, doc: &LyricDocument<T>) -> Result<LyricAnalysis<T>, AffectError> {
        let mut sentences = Vec::with_capacity(doc.sentence_count());
        for seg in &doc.segments {
            for s in &seg.sentences {
                let score = self.sentence_score(s);
                sentences.push(SentenceAffect {
                    text: s.text.clone(),
                    valence: score.map(|x| x.valence),
                    arousal: score.map(|x| x.arousal),
                    weight: seg.weight,
                    kind: Some(seg.kind),
                });
            }
        }
        let song = song_affect(sentences.iter().map(|s| {
            let score = s.valence.zip(s.arousal).map(|(valence, arousal)| AffectScore { valence, arousal });
            (score, s.weight)
        }))?;
        Ok(LyricAnalysis {
            valence: song.valence,
            arousal: song.arousal,
            sentences,
        })
    }

    pub fn analyze(&self, source_id: &str, text: &str) -> Result<LyricAnalysis<T>, AffectError> {
        let doc = LyricDocument::parse(source_id, text, &self.config.segmentation)?;
        self.analyze_document(&doc)
    }
}
