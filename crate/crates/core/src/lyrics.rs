//! Lyric text → weighted verse/chorus segments of tokenized lines.
//!
//! A sentence is one physical lyric line. Blocks are separated by blank
//! lines; a block is a chorus when a `[Chorus]`/`(Chorus)` marker precedes
//! it or when its normalized lines repeat another block exactly.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pos::PosTag;
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum LyricsError {
    #[error("lyrics contain no words")]
    Empty,
    #[error("segment weights must be positive and finite (chorus {chorus}, verse {verse})")]
    InvalidWeight { chorus: f64, verse: f64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    /// Surface form with surrounding punctuation removed.
    pub text: String,
    pub normalized: String,
    pub pos: PosTag,
}

impl Token {
    /// Builds a token from one whitespace-delimited piece, or `None` when
    /// nothing but punctuation remains.
    pub fn from_piece(piece: &str) -> Option<Self> {
        let piece = piece.replace('\u{2019}', "'");
        let stripped = piece.trim_matches(|c: char| !c.is_alphanumeric());
        if stripped.is_empty() {
            return None;
        }
        Some(Self {
            text: stripped.to_string(),
            normalized: stripped.to_lowercase(),
            pos: PosTag::Untagged,
        })
    }
}

/// One lyric line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub text: String,
    pub tokens: Vec<Token>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SegmentKind {
    Verse,
    Chorus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment<T> {
    pub kind: SegmentKind,
    pub sentences: Vec<Sentence>,
    pub weight: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentationConfig<T> {
    pub chorus_weight: T,
    pub verse_weight: T,
}

impl<T: Scalar> SegmentationConfig<T> {
    pub fn new(chorus_weight: T, verse_weight: T) -> Result<Self, LyricsError> {
        let ok = |w: T| w.is_finite() && w > T::zero();
        if ok(chorus_weight) && ok(verse_weight) {
            Ok(Self {
                chorus_weight,
                verse_weight,
            })
        } else {
            Err(LyricsError::InvalidWeight {
                chorus: chorus_weight.as_f64(),
                verse: verse_weight.as_f64(),
            })
        }
    }

    pub fn weight_for(&self, kind: SegmentKind) -> T {
        match kind {
            SegmentKind::Chorus => self.chorus_weight,
            SegmentKind::Verse => self.verse_weight,
        }
    }
}

impl<T: Scalar> Default for SegmentationConfig<T> {
    fn default() -> Self {
        Self {
            chorus_weight: T::lit(2.0),
            verse_weight: T::one(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyricDocument<T> {
    pub source_id: String,
    pub segments: Vec<Segment<T>>,
}

impl<T: Scalar> LyricDocument<T> {
    pub fn parse(
        source_id: impl Into<String>,
        text: &str,
        config: &SegmentationConfig<T>,
    ) -> Result<Self, LyricsError> {
        Ok(Self {
            source_id: source_id.into(),
            segments: segment_lyrics(text, config)?,
        })
    }

    /// Every sentence with the weight of its segment, in lyric order.
    pub fn weighted_sentences(&self) -> impl Iterator<Item = (&Sentence, T)> {
        self.segments
            .iter()
            .flat_map(|seg| seg.sentences.iter().map(move |s| (s, seg.weight)))
    }

    pub fn sentence_count(&self) -> usize {
        self.segments.iter().map(|s| s.sentences.len()).sum()
    }
}

/// Splits on whitespace and strips punctuation from both ends of each piece.
/// Internal apostrophes and hyphens survive (`don't`, `down-tempo`).
pub fn tokenize(line: &str) -> Vec<Token> {
    line.split_whitespace().filter_map(Token::from_piece).collect()
}

/// One sentence per non-blank line. Lines holding only punctuation yield no
/// tokens and are dropped.
pub fn split_sentences<S: AsRef<str>>(lines: &[S]) -> Vec<Sentence> {
    lines
        .iter()
        .filter_map(|line| {
            let text = line.as_ref().trim();
            let tokens = tokenize(text);
            (!tokens.is_empty()).then(|| Sentence {
                text: text.to_string(),
                tokens,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Marker {
    Chorus,
    Other,
}

const SECTION_WORDS: &[&str] = &[
    "chorus", "verse", "bridge", "intro", "outro", "hook", "refrain", "pre", "interlude", "instrumental",
];

/// `[anything]` is a section marker; `(...)` only when it names a section,
/// since parenthesised lines are usually sung backing vocals.
fn marker(line: &str) -> Option<Marker> {
    let t = line.trim();
    let (inner, bracketed) = if let Some(inner) = t.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
        (inner, true)
    } else if let Some(inner) = t.strip_prefix('(').and_then(|s| s.strip_suffix(')')) {
        (inner, false)
    } else {
        return None;
    };
    let lower = inner.trim().to_lowercase();
    let first: String = lower.chars().take_while(|c| c.is_alphabetic()).collect();
    if first == "chorus" {
        Some(Marker::Chorus)
    } else if bracketed || SECTION_WORDS.contains(&first.as_str()) {
        Some(Marker::Other)
    } else {
        None
    }
}

struct Block<'a> {
    lines: Vec<&'a str>,
    marked_chorus: bool,
}

fn blocks(text: &str) -> Vec<Block<'_>> {
    let mut out = Vec::new();
    let mut current: Option<Block> = None;
    let mut pending_chorus = false;
    for line in text.lines() {
        if line.trim().is_empty() {
            out.extend(current.take());
        } else if let Some(m) = marker(line) {
            out.extend(current.take());
            pending_chorus = m == Marker::Chorus;
        } else {
            current
                .get_or_insert_with(|| Block {
                    lines: Vec::new(),
                    marked_chorus: std::mem::take(&mut pending_chorus),
                })
                .lines
                .push(line);
        }
    }
    out.extend(current);
    out
}

fn block_key(sentences: &[Sentence]) -> Vec<String> {
    sentences
        .iter()
        .map(|s| {
            s.tokens
                .iter()
                .map(|t| t.normalized.as_str())
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect()
}

/// Splits lyrics into verse and chorus segments. Both the first and every
/// repeat of a duplicated block count as chorus.
pub fn segment_lyrics<T: Scalar>(
    text: &str,
    config: &SegmentationConfig<T>,
) -> Result<Vec<Segment<T>>, LyricsError> {
    let parsed: Vec<(Vec<Sentence>, bool)> = blocks(text)
        .into_iter()
        .map(|b| (split_sentences(&b.lines), b.marked_chorus))
        .filter(|(s, _)| !s.is_empty())
        .collect();
    if parsed.is_empty() {
        return Err(LyricsError::Empty);
    }

    let keys: Vec<Vec<String>> = parsed.iter().map(|(s, _)| block_key(s)).collect();
    let mut occurrences: HashMap<&[String], usize> = HashMap::new();
    for k in &keys {
        *occurrences.entry(k.as_slice()).or_default() += 1;
    }

    Ok(parsed
        .into_iter()
        .zip(&keys)
        .map(|((sentences, marked), key)| {
            let kind = if marked || occurrences[key.as_slice()] > 1 {
                SegmentKind::Chorus
            } else {
                SegmentKind::Verse
            };
            Segment {
                kind,
                sentences,
                weight: config.weight_for(kind),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(tokens: &[Token]) -> Vec<&str> {
        tokens.iter().map(|t| t.normalized.as_str()).collect()
    }

    fn shape(segs: &[Segment<f64>]) -> Vec<(SegmentKind, Vec<String>)> {
        segs.iter()
            .map(|s| (s.kind, s.sentences.iter().map(|x| x.text.clone()).collect()))
            .collect()
    }

    #[test]
    fn tokenize_strips_edge_punctuation() {
        assert_eq!(words(&tokenize("Kill the happy child.")), ["kill", "the", "happy", "child"]);
        assert_eq!(words(&tokenize("don't stop!")), ["don't", "stop"]);
        assert_eq!(words(&tokenize("Don\u{2019}t 'cause lovin' ...")), ["don't", "cause", "lovin"]);
        assert!(tokenize("   ").is_empty());
        assert_eq!(tokenize("Kill")[0].text, "Kill");
    }

    #[test]
    fn tokenize_idempotent_on_normalized_tokens() {
        for w in ["happy", "don't", "down-tempo", "x"] {
            let once = tokenize(w);
            assert_eq!(once.len(), 1);
            assert_eq!(tokenize(&once[0].normalized), once);
        }
    }

    #[test]
    fn one_sentence_per_line() {
        let s = split_sentences(&["the boy was not happy"]);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].tokens.len(), 5);
        assert_eq!(split_sentences(&["a", "b"]).len(), 2);
        assert!(split_sentences(&[""]).is_empty());
    }

    #[test]
    fn repeated_block_is_chorus() {
        let segs = segment_lyrics::<f64>("A\nB\n\nC\n\nA\nB", &Default::default()).unwrap();
        assert_eq!(
            shape(&segs),
            vec![
                (SegmentKind::Chorus, vec!["A".into(), "B".into()]),
                (SegmentKind::Verse, vec!["C".into()]),
                (SegmentKind::Chorus, vec!["A".into(), "B".into()]),
            ]
        );
        assert_eq!(segs[0].weight, 2.0);
        assert_eq!(segs[1].weight, 1.0);
    }

    #[test]
    fn marker_makes_chorus_and_is_consumed() {
        let segs = segment_lyrics::<f64>("[Chorus]\nla la\n\nverse line", &Default::default()).unwrap();
        assert_eq!(
            shape(&segs),
            vec![
                (SegmentKind::Chorus, vec!["la la".into()]),
                (SegmentKind::Verse, vec!["verse line".into()]),
            ]
        );
        let segs = segment_lyrics::<f64>("(CHORUS)\n\nla la", &Default::default()).unwrap();
        assert_eq!(segs[0].kind, SegmentKind::Chorus);
    }

    #[test]
    fn other_markers_are_consumed_without_chorus() {
        let segs = segment_lyrics::<f64>("[Verse 1]\nfirst\n[Chorus]\nhook\n(oh yeah)", &Default::default()).unwrap();
        assert_eq!(
            shape(&segs),
            vec![
                (SegmentKind::Verse, vec!["first".into()]),
                (SegmentKind::Chorus, vec!["hook".into(), "(oh yeah)".into()]),
            ]
        );
    }

    #[test]
    fn single_block_is_verse() {
        let segs = segment_lyrics::<f64>("only one verse", &Default::default()).unwrap();
        assert_eq!(shape(&segs), vec![(SegmentKind::Verse, vec!["only one verse".into()])]);
    }

    #[test]
    fn duplicate_detection_ignores_case_and_punctuation() {
        let segs = segment_lyrics::<f64>("Oh, my love!\n\nverse\n\noh my love", &Default::default()).unwrap();
        assert_eq!(segs[0].kind, SegmentKind::Chorus);
        assert_eq!(segs[2].kind, SegmentKind::Chorus);
    }

    #[test]
    fn empty_lyrics_rejected() {
        assert_eq!(segment_lyrics::<f64>("\n  \n\t\n", &Default::default()), Err(LyricsError::Empty));
        assert_eq!(segment_lyrics::<f64>("[Chorus]\n...", &Default::default()), Err(LyricsError::Empty));
    }

    #[test]
    fn weights_must_be_positive() {
        assert!(SegmentationConfig::new(0.0f64, 1.0).is_err());
        assert!(SegmentationConfig::new(2.0f64, f64::NAN).is_err());
        assert!(SegmentationConfig::new(1.5f32, 1.0).is_ok());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn line() -> impl Strategy<Value = String> {
            prop_oneof![
                4 => "[a-c]{1,3}( [a-c]{1,3}){0,2}",
                1 => Just("[Chorus]".to_string()),
                1 => Just("[Bridge]".to_string()),
                1 => Just(String::new()),
            ]
        }

        proptest! {
            #[test]
            fn segments_reproduce_content_lines(lines in prop::collection::vec(line(), 1..25)) {
                let text = lines.join("\n");
                let expected: Vec<&str> = lines
                    .iter()
                    .map(|l| l.as_str())
                    .filter(|l| !l.trim().is_empty() && marker(l).is_none())
                    .collect();
                match segment_lyrics::<f64>(&text, &Default::default()) {
                    Err(LyricsError::Empty) => prop_assert!(expected.is_empty()),
                    Err(e) => prop_assert!(false, "{e}"),
                    Ok(segs) => {
                        let got: Vec<&str> = segs
                            .iter()
                            .flat_map(|s| s.sentences.iter().map(|x| x.text.as_str()))
                            .collect();
                        prop_assert_eq!(got, expected);

                        // every chorus block is marked or has a twin
                        let all = blocks(&text);
                        let keys: Vec<_> = segs.iter().map(|s| block_key(&s.sentences)).collect();
                        for (i, seg) in segs.iter().enumerate() {
                            if seg.kind == SegmentKind::Chorus {
                                let twin = keys.iter().enumerate().any(|(j, k)| j != i && *k == keys[i]);
                                let marked = all[i].marked_chorus;
                                prop_assert!(twin || marked);
                            }
                        }
                    }
                }
            }
        }
    }
}
