//! Coarse part-of-speech tagging: negation list, tag lexicon, a handful of
//! context and suffix rules, then a noun default.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Read};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lyrics::Sentence;

const BUILTIN_TAGS: &str = include_str!("../data/tags.tsv");

/// Negation words. Apostrophe-less spellings are common in lyric sites.
pub const NEGATION_WORDS: &[&str] = &[
    "not", "never", "don't", "can't", "won't", "no", "cannot", "isn't", "wasn't", "ain't", "didn't", "doesn't",
    "aren't", "weren't", "couldn't", "wouldn't", "shouldn't", "haven't", "hasn't", "hadn't", "nothing", "nobody",
    "nor", "neither", "dont", "cant", "wont", "aint", "didnt", "doesnt", "isnt", "wasnt", "n't",
];

/// Closed-class words that never carry affect on their own.
const FUNCTION_WORDS: &[&str] = &[
    "a", "an", "the", "this", "that", "these", "those", "my", "your", "his", "her", "its", "our", "their", "i", "me",
    "you", "he", "him", "she", "it", "we", "us", "they", "them", "myself", "yourself", "mine", "yours", "ours",
    "who", "whom", "whose", "which", "what", "where", "when", "why", "how", "and", "or", "but", "if", "so", "as",
    "than", "then", "because", "cause", "cuz", "till", "until", "while", "of", "in", "on", "at", "by", "for",
    "with", "from", "to", "into", "onto", "upon", "about", "over", "under", "through", "across", "around", "out",
    "up", "off", "down", "like", "be", "is", "am", "are", "was", "were", "been", "being", "have", "has", "had",
    "do", "does", "did", "will", "would", "shall", "should", "can", "could", "may", "might", "must", "gonna",
    "wanna", "gotta", "i'm", "you're", "we're", "they're", "he's", "she's", "it's", "that's", "there's", "i've",
    "you've", "we've", "i'll", "you'll", "we'll", "i'd", "you'd", "let's", "oh", "ooh", "oooh", "ah", "yeah",
    "yea", "hey", "la", "na", "whoa", "uh", "mmm", "woah", "ya", "ha", "all", "some", "any", "every", "each",
    "there", "here", "just", "too", "very", "only",
];

/// Words read as verbs after a subject pronoun, `to` or a modal, and as
/// nouns after a determiner, whatever the lexicon says.
const NOUN_VERB_WORDS: &[&str] = &[
    "love", "dream", "cry", "dance", "need", "fear", "hope", "kiss", "touch", "fall", "call", "hurt", "smile",
    "fight", "break", "hold", "lie", "fly", "walk", "run", "rain", "burn", "light", "look", "care", "hate",
    "miss", "wish", "help", "play", "turn", "move", "change", "end", "start", "live", "laugh", "shine", "sleep",
    "die", "kill", "feel", "want", "cut", "bleed", "sing", "scream", "shout", "pray", "rest", "fade", "trust",
    "doubt", "desire", "heal", "drink", "ride", "rise", "wait", "work", "talk", "flow", "glow",
];

const VERB_CUES: &[&str] = &[
    "i", "you", "we", "they", "to", "will", "would", "can", "could", "should", "must", "might", "gonna", "wanna",
    "gotta", "let's", "don't", "dont", "never", "didn't", "can't", "cant", "won't", "wont", "cannot", "i'll",
    "you'll", "we'll", "they'll", "i'd", "we'd", "please",
];

const NOUN_CUES: &[&str] = &[
    "a", "an", "the", "my", "your", "his", "her", "our", "their", "its", "this", "that", "no", "every", "some",
    "sweet", "true",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PosTag {
    Noun,
    Verb,
    Adj,
    Adv,
    Negation,
    Other,
    Untagged,
}

impl PosTag {
    pub fn as_str(self) -> &'static str {
        match self {
            PosTag::Noun => "NOUN",
            PosTag::Verb => "VERB",
            PosTag::Adj => "ADJ",
            PosTag::Adv => "ADV",
            PosTag::Negation => "NEGATION",
            PosTag::Other => "OTHER",
            PosTag::Untagged => "UNTAGGED",
        }
    }
}

impl fmt::Display for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PosTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim().to_ascii_uppercase().as_str() {
            "NOUN" => PosTag::Noun,
            "VERB" => PosTag::Verb,
            "ADJ" => PosTag::Adj,
            "ADV" => PosTag::Adv,
            "NEGATION" => PosTag::Negation,
            "OTHER" => PosTag::Other,
            other => return Err(format!("unknown tag `{other}`")),
        })
    }
}

#[derive(Debug, Error)]
pub enum TaggerError {
    #[error("cannot read {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{origin}:{line}: {reason}")]
    Malformed {
        origin: String,
        line: usize,
        reason: String,
    },
}

/// Immutable tagging resources.
#[derive(Debug, Clone)]
pub struct Tagger {
    lexicon: HashMap<String, PosTag>,
    negations: HashSet<String>,
    function_words: HashSet<String>,
}

impl Default for Tagger {
    fn default() -> Self {
        Self::builtin()
    }
}

impl Tagger {
    /// Tagger over an explicit word → tag map plus the built-in negation and
    /// function-word lists.
    pub fn new(lexicon: HashMap<String, PosTag>) -> Self {
        Self {
            lexicon,
            negations: NEGATION_WORDS.iter().map(|s| s.to_string()).collect(),
            function_words: FUNCTION_WORDS.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Tagger backed by the bundled 5k-word tag lexicon.
    pub fn builtin() -> Self {
        Self::from_reader(BUILTIN_TAGS.as_bytes(), "builtin tags").expect("bundled tag lexicon is well formed")
    }

    pub fn load(path: &Path) -> Result<Self, TaggerError> {
        let file = File::open(path).map_err(|source| TaggerError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_reader(file, &path.display().to_string())
    }

    /// Parses `word<TAB>TAG` lines; `#` comments and blank lines skipped.
    pub fn from_reader<R: Read>(reader: R, origin: &str) -> Result<Self, TaggerError> {
        let mut map = HashMap::new();
        for (idx, line) in BufReader::new(reader).lines().enumerate() {
            let malformed = |reason: String| TaggerError::Malformed {
                origin: origin.to_string(),
                line: idx + 1,
                reason,
            };
            let line = line.map_err(|e| malformed(e.to_string()))?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut cols = trimmed.split('\t');
            let (Some(word), Some(tag)) = (cols.next(), cols.next()) else {
                return Err(malformed("expected `word<TAB>TAG`".into()));
            };
            let tag: PosTag = tag.parse().map_err(malformed)?;
            map.entry(word.trim().to_lowercase()).or_insert(tag);
        }
        Ok(Self::new(map))
    }

    /// Adds (or replaces) lexicon entries.
    pub fn extend<I: IntoIterator<Item = (String, PosTag)>>(&mut self, entries: I) {
        self.lexicon.extend(entries);
    }

    pub fn is_negation(&self, word: &str) -> bool {
        self.negations.contains(word)
    }

    /// Context-free tag of a single normalized word.
    pub fn tag_word(&self, word: &str) -> PosTag {
        if self.negations.contains(word) {
            return PosTag::Negation;
        }
        if let Some(&tag) = self.lexicon.get(word) {
            return tag;
        }
        if self.function_words.contains(word) || word.chars().all(|c| c.is_ascii_digit()) {
            return PosTag::Other;
        }
        if let Some(tag) = self.inflected(word) {
            return tag;
        }
        suffix_tag(word).unwrap_or(PosTag::Noun)
    }

    /// Tags every token. Never leaves a token `Untagged`.
    pub fn tag_sentence(&self, mut sentence: Sentence) -> Sentence {
        let mut prev: Option<(String, PosTag)> = None;
        for token in &mut sentence.tokens {
            let word = token.normalized.as_str();
            let mut tag = self.tag_word(word);
            if is_noun_verb(word) && matches!(tag, PosTag::Noun | PosTag::Verb) {
                match prev.as_ref() {
                    Some((p, _)) if VERB_CUES.contains(&p.as_str()) => tag = PosTag::Verb,
                    Some((p, _)) if NOUN_CUES.contains(&p.as_str()) => tag = PosTag::Noun,
                    // a noun subject followed by its verb: "tears fall"
                    Some((_, PosTag::Noun)) => tag = PosTag::Verb,
                    _ => {}
                }
            }
            token.pos = tag;
            prev = Some((token.normalized.clone(), tag));
        }
        sentence
    }

    /// Lexicon lookup through regular inflections (`cats`, `cried`,
    /// `running`, `loved`).
    fn inflected(&self, word: &str) -> Option<PosTag> {
        let get = |stem: &str| self.lexicon.get(stem).copied();
        let plural = |tag: PosTag| match tag {
            PosTag::Noun | PosTag::Verb => Some(tag),
            _ => None,
        };
        let verbal = |tag: PosTag| match tag {
            PosTag::Noun | PosTag::Verb => Some(PosTag::Verb),
            _ => None,
        };

        if let Some(stem) = word.strip_suffix("ies") {
            if let Some(t) = get(&format!("{stem}y")).and_then(plural) {
                return Some(t);
            }
        }
        for suffix in ["es", "s"] {
            if let Some(t) = word.strip_suffix(suffix).and_then(get).and_then(plural) {
                return Some(t);
            }
        }
        if let Some(stem) = word.strip_suffix("ied") {
            if let Some(t) = get(&format!("{stem}y")).and_then(verbal) {
                return Some(t);
            }
        }
        for suffix in ["ing", "ed"] {
            let Some(stem) = word.strip_suffix(suffix).filter(|s| s.len() >= 2) else {
                continue;
            };
            let undoubled = stem
                .chars()
                .last()
                .filter(|&c| stem[..stem.len() - 1].ends_with(c))
                .map(|_| &stem[..stem.len() - 1]);
            let with_e = format!("{stem}e");
            let candidates = [Some(stem), Some(with_e.as_str()), undoubled];
            let found = candidates.into_iter().flatten().find_map(|c| get(c).and_then(verbal));
            if found.is_some() {
                return found;
            }
        }
        None
    }
}

/// A noun/verb word or its third-person form.
fn is_noun_verb(word: &str) -> bool {
    NOUN_VERB_WORDS.contains(&word)
        || ["s", "es"]
            .iter()
            .any(|suffix| word.strip_suffix(suffix).is_some_and(|stem| NOUN_VERB_WORDS.contains(&stem)))
}

fn suffix_tag(word: &str) -> Option<PosTag> {
    const RULES: &[(&str, PosTag)] = &[
        ("ly", PosTag::Adv),
        ("ous", PosTag::Adj),
        ("ful", PosTag::Adj),
        ("less", PosTag::Adj),
        ("ive", PosTag::Adj),
        ("able", PosTag::Adj),
        ("ible", PosTag::Adj),
        ("ish", PosTag::Adj),
        ("ize", PosTag::Verb),
        ("ise", PosTag::Verb),
        ("ate", PosTag::Verb),
        ("ify", PosTag::Verb),
        ("ing", PosTag::Verb),
        ("ed", PosTag::Verb),
        ("in'", PosTag::Verb),
    ];
    RULES
        .iter()
        .find(|(suffix, _)| word.len() > suffix.len() + 2 && word.ends_with(suffix))
        .map(|&(_, tag)| tag)
}
